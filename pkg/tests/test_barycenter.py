"""Tests for inner minimizers and multi-margin OT barycenters."""

import numpy as np
import pytest

from msdro.barycenter import barycenter, inner_minimizer
from msdro.errors import AllWeightsZero, SizeExceeded
from msdro.transport import DiscreteDistribution, GroundCost, ot_cost

L1 = GroundCost(kind="norm", norm="l1", p=1)
SQE = GroundCost(kind="sqeuclidean")


def random_distribution(rng, n, d):
    probs = rng.uniform(0.2, 1.0, size=n)
    probs /= probs.sum()
    return DiscreteDistribution(rng.normal(size=(n, d)), probs)


class TestInnerMinimizer:
    def test_sqeuclidean_midpoint(self):
        phi, point = inner_minimizer([[1.0, 1.0], [1.0, 0.0]], [1.0, 1.0], SQE)
        np.testing.assert_allclose(point, [1.0, 0.5])
        assert phi == pytest.approx(0.5)

    def test_single_point(self):
        phi, point = inner_minimizer([[2.0, -1.0]], [3.0], SQE)
        np.testing.assert_allclose(point, [2.0, -1.0])
        assert phi == 0.0

    def test_l1_weighted_median_at_heavier_point(self):
        phi, point = inner_minimizer([[0.0], [1.0]], [2.0, 1.0], L1)
        assert point[0] == 0.0
        assert phi == pytest.approx(1.0)

    def test_l1_tie_returns_lower_endpoint(self):
        _, point = inner_minimizer([[0.0], [1.0]], [1.0, 1.0], L1)
        assert point[0] == 0.0

    def test_zero_weight_point_ignored(self):
        _, point = inner_minimizer([[0.0], [0.4], [1.0]], [1.0, 0.0, 1.0], L1)
        assert point[0] == 0.0
        phi, center = inner_minimizer([[0.0], [9.0], [1.0]], [1.0, 0.0, 1.0], SQE)
        assert center[0] == pytest.approx(0.5)

    def test_all_weights_zero(self):
        with pytest.raises(AllWeightsZero):
            inner_minimizer([[0.0], [1.0]], [0.0, 0.0], L1)

    def test_brute_force_scan_l1(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            pts = rng.normal(size=(4, 1))
            w = rng.uniform(0.1, 2.0, size=4)
            phi, point = inner_minimizer(pts, w, L1)
            grid = np.linspace(pts.min() - 1, pts.max() + 1, 2001).reshape(-1, 1)
            vals = np.abs(grid - pts.ravel()) @ w
            assert phi <= vals.min() + 1e-9


class TestBarycenter:
    def square_pair(self):
        p1 = DiscreteDistribution([[1.0, 1.0], [0.0, 0.0]], [0.5, 0.5])
        p2 = DiscreteDistribution([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])
        return p1, p2

    def test_worked_square_instance(self):
        p1, p2 = self.square_pair()
        res = barycenter([p1, p2], [1.0, 1.0], SQE)
        assert res.objective == pytest.approx(0.5, abs=1e-9)
        optima = [
            np.array([[0.0, 0.5], [1.0, 0.5]]),
            np.array([[0.5, 0.0], [0.5, 1.0]]),
        ]
        atoms = res.barycenter.atoms[np.lexsort(res.barycenter.atoms.T[::-1])]
        assert any(np.allclose(atoms, o, atol=1e-9) for o in optima)
        np.testing.assert_allclose(res.barycenter.probs, [0.5, 0.5])

    def test_identical_inputs_return_the_input(self):
        rng = np.random.default_rng(1)
        p = random_distribution(rng, 3, 2)
        for cost in (SQE, L1):
            res = barycenter([p, p, p], [1.0, 2.0, 0.5], cost)
            assert res.objective == pytest.approx(0.0, abs=1e-10)
            order = np.lexsort(res.barycenter.atoms.T[::-1])
            order_p = np.lexsort(p.atoms.T[::-1])
            np.testing.assert_allclose(
                res.barycenter.atoms[order], p.atoms[order_p], atol=1e-9
            )

    def test_l1_heavier_weight_matches_that_input_objective(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            p1 = random_distribution(rng, 3, 2)
            p2 = random_distribution(rng, 4, 2)
            res = barycenter([p1, p2], [2.0, 1.0], L1)
            candidate = ot_cost(p1, p2, L1).value  # objective attained by p1
            assert res.objective == pytest.approx(candidate, abs=1e-9)

    def test_plan_marginals(self):
        p1, p2 = self.square_pair()
        res = barycenter([p1, p2], [1.0, 3.0], SQE)
        np.testing.assert_allclose(res.plan.marginal(0), p1.probs, atol=1e-9)
        np.testing.assert_allclose(res.plan.marginal(1), p2.probs, atol=1e-9)
        assert res.plan.total_mass() == pytest.approx(1.0, abs=1e-9)

    def test_zero_weight_source_still_constrains_plan(self):
        p1 = DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])
        p2 = DiscreteDistribution([[5.0], [9.0]], [0.25, 0.75])
        res = barycenter([p1, p2], [1.0, 0.0], SQE)
        np.testing.assert_allclose(res.plan.marginal(1), p2.probs, atol=1e-9)
        # objective ignores the zero-weight source entirely
        assert res.objective == pytest.approx(0.0, abs=1e-10)

    def test_optimality_against_random_candidates(self):
        rng = np.random.default_rng(3)
        p1 = random_distribution(rng, 3, 2)
        p2 = random_distribution(rng, 3, 2)
        w = np.array([1.0, 2.0])
        res = barycenter([p1, p2], w, SQE)
        for _ in range(20):
            q = random_distribution(rng, 4, 2)
            cand = w[0] * ot_cost(q, p1, SQE).value + w[1] * ot_cost(q, p2, SQE).value
            assert res.objective <= cand + 1e-7

    def test_objective_consistent_with_transport_costs(self):
        rng = np.random.default_rng(4)
        for cost in (SQE, L1):
            p1 = random_distribution(rng, 3, 2)
            p2 = random_distribution(rng, 4, 2)
            w = np.array([1.0, 1.7])
            res = barycenter([p1, p2], w, cost)
            direct = w[0] * ot_cost(res.barycenter, p1, cost).value
            direct += w[1] * ot_cost(res.barycenter, p2, cost).value
            assert res.objective == pytest.approx(direct, abs=1e-7)

    def test_weight_scaling(self):
        rng = np.random.default_rng(5)
        p1 = random_distribution(rng, 3, 1)
        p2 = random_distribution(rng, 3, 1)
        w = np.array([1.0, 2.0])
        base = barycenter([p1, p2], w, SQE)
        scaled = barycenter([p1, p2], 4.0 * w, SQE)
        np.testing.assert_allclose(
            scaled.barycenter.atoms, base.barycenter.atoms, atol=1e-12
        )
        assert scaled.objective == pytest.approx(4.0 * base.objective, rel=1e-10)

    def test_geodesic_sweep_in_one_dimension(self):
        p1 = DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])
        p2 = DiscreteDistribution([[2.0], [4.0]], [0.5, 0.5])
        for t in np.linspace(0.0, 1.0, 11):
            res = barycenter([p1, p2], [t, 1.0 - t], SQE)
            expected = np.sort(
                [t * 0.0 + (1 - t) * 2.0, t * 1.0 + (1 - t) * 4.0]
            )
            got = np.sort(res.barycenter.atoms.ravel())
            np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_duplicate_pushforward_atoms_merge(self):
        # coincident atoms are legal; every matched pair averages to 1.0
        p1 = DiscreteDistribution([[0.0], [0.0]], [0.5, 0.5])
        p2 = DiscreteDistribution([[2.0], [2.0]], [0.5, 0.5])
        res = barycenter([p1, p2], [1.0, 1.0], SQE)
        assert res.barycenter.n_atoms == 1
        assert res.barycenter.atoms[0, 0] == pytest.approx(1.0)
        assert res.barycenter.probs[0] == pytest.approx(1.0)

    def test_size_guard(self):
        rng = np.random.default_rng(6)
        p = random_distribution(rng, 20, 1)
        with pytest.raises(SizeExceeded):
            barycenter([p, p, p], [1, 1, 1], SQE, enum_cap=100)

    def test_all_weights_zero(self):
        p1, p2 = self.square_pair()
        with pytest.raises(AllWeightsZero):
            barycenter([p1, p2], [0.0, 0.0], SQE)
