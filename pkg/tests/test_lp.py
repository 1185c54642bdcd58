"""Tests for the LP kernel: certified solutions, certificates, enumeration."""

import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from msdro import lp
from msdro.errors import SizeExceeded
from msdro.lp import LpModel, solve_lp, solve_binary_by_enumeration

ENGINES = ["simplex", "highs"]


def dense_model(sense, c, a, row_sense, rhs, lb=None, ub=None):
    a = np.asarray(a, dtype=float)
    rows, cols = np.nonzero(a)
    return LpModel.build(
        sense, c, (rows, cols, a[rows, cols]), row_sense, rhs, lb=lb, ub=ub
    )


def brute_force_value(c, a_ub, b_ub, bound_row=None):
    """Enumerate basic feasible solutions of min c'x, A x <= b, x >= 0."""
    a = np.asarray(a_ub, dtype=float)
    b = np.asarray(b_ub, dtype=float)
    if bound_row is not None:
        a = np.vstack([a, np.ones(a.shape[1])])
        b = np.append(b, bound_row)
    m, n = a.shape
    astd = np.hstack([a, np.eye(m)])
    best = np.inf
    cstd = np.concatenate([c, np.zeros(m)])
    for basis in itertools.combinations(range(n + m), m):
        bmat = astd[:, basis]
        if abs(np.linalg.det(bmat)) < 1e-10:
            continue
        xb = np.linalg.solve(bmat, b)
        if xb.min() < -1e-9:
            continue
        x = np.zeros(n + m)
        x[list(basis)] = xb
        best = min(best, cstd @ x)
    return best


class TestSolveExamples:
    @pytest.mark.parametrize("engine", ENGINES)
    def test_single_variable_bound(self, engine):
        m = dense_model("min", [1.0], [[1.0]], [">="], [3.0])
        sol = solve_lp(m, engine=engine)
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(3.0, abs=1e-9)
        assert sol.x[0] == pytest.approx(3.0, abs=1e-9)

    @pytest.mark.parametrize("engine", ENGINES)
    def test_simplex_face(self, engine):
        m = dense_model("max", [1.0, 1.0], [[1.0, 1.0]], ["<="], [1.0])
        sol = solve_lp(m, engine=engine)
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("engine", ENGINES)
    def test_unbounded_with_ray(self, engine):
        m = dense_model("min", [-1.0], np.zeros((0, 1)), [], [])
        sol = solve_lp(m, engine=engine)
        assert sol.status == "unbounded"
        assert sol.primal_ray is not None
        assert sol.primal_ray[0] > 0
        assert lp.ray_violation(m, sol.primal_ray) <= 1e-9
        # the ray strictly improves a minimization objective
        assert float(m.c @ sol.primal_ray) < 0

    @pytest.mark.parametrize("engine", ENGINES)
    def test_infeasible_with_farkas(self, engine):
        m = dense_model(
            "min", [1.0], [[1.0], [1.0]], ["<=", ">="], [1.0, 2.0]
        )
        sol = solve_lp(m, engine=engine)
        assert sol.status == "infeasible"
        assert sol.dual_ray is not None
        assert lp.farkas_violation(m, sol.dual_ray) > 1e-9

    def test_random_vs_vertex_enumeration(self):
        rng = np.random.default_rng(7)
        for _ in range(12):
            n, mrows = 8, 5
            a = rng.normal(size=(mrows, n))
            b = rng.uniform(0.2, 2.0, size=mrows)
            c = rng.normal(size=n)
            model = dense_model(
                "min",
                c,
                np.vstack([a, np.ones(n)]),
                ["<="] * (mrows + 1),
                np.append(b, 10.0),
            )
            expected = brute_force_value(c, a, b, bound_row=10.0)
            for engine in ENGINES:
                sol = solve_lp(model, engine=engine)
                assert sol.status == "optimal"
                assert sol.value == pytest.approx(expected, abs=1e-8)


class TestSolutionInvariants:
    def random_model(self, rng):
        n, mrows = 6, 4
        a = rng.normal(size=(mrows, n))
        b = rng.uniform(0.5, 2.0, size=mrows)
        c = rng.normal(size=n)
        senses = rng.choice(["<=", ">=", "=="], size=mrows, p=[0.6, 0.2, 0.2])
        # anchor >=/== rows at an interior point so feasibility is likely
        x0 = rng.uniform(0.0, 0.5, size=n)
        b = np.where(senses == "<=", a @ x0 + rng.uniform(0.1, 1.0, mrows), a @ x0)
        return dense_model(
            "min", c, np.vstack([a, np.ones(n)]), list(senses) + ["<="],
            np.append(b, 50.0),
        )

    @pytest.mark.parametrize("engine", ENGINES)
    def test_strong_duality_and_feasibility(self, engine):
        rng = np.random.default_rng(11)
        hits = 0
        for _ in range(15):
            model = self.random_model(rng)
            sol = solve_lp(model, engine=engine)
            if sol.status != "optimal":
                continue
            hits += 1
            assert lp.primal_residual(model, sol.x) <= lp.FEAS_TOL * (
                1 + np.abs(model.rhs).max()
            )
            assert abs(sol.value - sol.dual_objective) <= lp.OPT_TOL * (
                1 + abs(sol.value)
            ) * (1 + np.abs(model.rhs).max())
        assert hits >= 5

    def test_objective_scaling_keeps_argmin(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 6))
        b = rng.uniform(1.0, 2.0, size=4)
        c = rng.normal(size=6)
        base = dense_model(
            "min", c, np.vstack([a, np.ones(6)]), ["<="] * 5, np.append(b, 8.0)
        )
        scaled = dense_model(
            "min", 3.5 * c, np.vstack([a, np.ones(6)]), ["<="] * 5, np.append(b, 8.0)
        )
        s0 = solve_lp(base, engine="simplex")
        s1 = solve_lp(scaled, engine="simplex")
        np.testing.assert_array_equal(s0.x, s1.x)
        assert s1.value == pytest.approx(3.5 * s0.value, rel=1e-12)

    @pytest.mark.parametrize("engine", ENGINES)
    def test_determinism_byte_identical(self, engine):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(5, 7))
        b = rng.uniform(1.0, 2.0, size=5)
        c = rng.normal(size=7)
        model = dense_model(
            "min", c, np.vstack([a, np.ones(7)]), ["<="] * 6, np.append(b, 9.0)
        )
        s0 = solve_lp(model, engine=engine)
        s1 = solve_lp(model, engine=engine)
        assert s0.status == s1.status
        assert s0.x.tobytes() == s1.x.tobytes()
        assert s0.duals.tobytes() == s1.duals.tobytes()

    def test_engines_agree(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            n, mrows = 7, 4
            a = rng.normal(size=(mrows, n))
            x0 = rng.uniform(0.0, 1.0, size=n)
            b = a @ x0 + rng.uniform(0.05, 1.0, size=mrows)
            c = rng.normal(size=n)
            model = dense_model(
                "min", c, np.vstack([a, np.ones(n)]), ["<="] * (mrows + 1),
                np.append(b, 20.0),
            )
            v = [solve_lp(model, engine=e).value for e in ENGINES]
            assert v[0] == pytest.approx(v[1], abs=1e-7)


class TestModelAssembly:
    def test_duplicate_triplets_are_summed(self):
        m = LpModel.build(
            "min", [1.0, 0.0], [(0, 0, 0.5), (0, 0, 0.5), (0, 1, 1.0)],
            [">="], [2.0],
        )
        assert m.a.toarray().tolist() == [[1.0, 1.0]]

    def test_bad_indices_rejected(self):
        with pytest.raises(ValueError):
            LpModel.build("min", [1.0], [(0, 3, 1.0)], ["<="], [1.0])
        with pytest.raises(ValueError):
            LpModel.build("min", [np.inf], [(0, 0, 1.0)], ["<="], [1.0])

    def test_size_guard(self):
        m = dense_model("min", [1.0], [[1.0]], ["<="], [1.0])
        big = sp.csr_matrix((lp.SIMPLEX_MAX_ROWS + 1, 1))
        model = LpModel(
            "min", m.c, big, np.array(["<="] * big.shape[0]),
            np.zeros(big.shape[0]), m.lb, m.ub,
        )
        with pytest.raises(SizeExceeded):
            solve_lp(model, engine="simplex")

    @pytest.mark.parametrize("engine", ENGINES)
    def test_two_sided_and_free_bounds(self, engine):
        # min x + y with x in [-2, 5], y free, x + y >= 1
        m = dense_model(
            "min", [1.0, 1.0], [[1.0, 1.0]], [">="], [1.0],
            lb=[-2.0, -np.inf], ub=[5.0, np.inf],
        )
        sol = solve_lp(m, engine=engine)
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(1.0, abs=1e-9)

    def test_dump_triplets_roundtrip_values(self):
        m = dense_model("max", [1.0, 2.0], [[1.0, 3.0]], ["<="], [4.0])
        text = m.dump_triplets()
        assert "sense max rows 1 cols 2" in text
        assert "0 1 3.0" in text

    def test_with_fixed_is_a_copy(self):
        m = dense_model("min", [1.0, 1.0], [[1.0, 1.0]], [">="], [1.0])
        m2 = m.with_fixed([0], [0.25])
        assert m.lb[0] == 0.0 and m2.lb[0] == 0.25 and m2.ub[0] == 0.25
        sol = solve_lp(m2)
        assert sol.x[0] == pytest.approx(0.25)


class TestBinaryEnumeration:
    def knapsack_model(self, values, sense="max"):
        # max v'x subject to x binary via enumeration; one vacuous row
        n = len(values)
        return dense_model(
            sense, values, np.ones((1, n)), ["<="], [float(n)], lb=np.zeros(n),
            ub=np.ones(n),
        )

    def test_cap_zero_forces_empty_support(self):
        m = self.knapsack_model([1.0, 2.0, 3.0])
        res = solve_binary_by_enumeration(m, [0, 1, 2], 0)
        assert res.support == ()
        assert res.solution.value == pytest.approx(0.0)

    def test_exhaustive_matches_manual_scan(self):
        rng = np.random.default_rng(2)
        vals = rng.normal(size=3)
        m = self.knapsack_model(vals)
        res = solve_binary_by_enumeration(m, [0, 1, 2], 3)
        best = max(
            (
                sum(vals[list(s)])
                for r in range(4)
                for s in itertools.combinations(range(3), r)
            ),
        )
        assert res.solution.value == pytest.approx(best, abs=1e-10)
        assert res.subproblems == 8

    def test_budget_guard(self):
        m = self.knapsack_model(list(range(20)))
        with pytest.raises(SizeExceeded):
            solve_binary_by_enumeration(m, range(20), 10, enumeration_budget=10)

    def test_too_many_binaries(self):
        m = self.knapsack_model(list(range(26)))
        with pytest.raises(SizeExceeded):
            solve_binary_by_enumeration(m, range(26), 2)
