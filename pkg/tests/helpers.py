"""Shared instance generators and independent oracles for the test suite."""

import numpy as np

from msdro.dro import AmbiguitySource, AmbiguitySpec, PiecewiseAffineLoss, Polyhedron
from msdro.lp import LpModel, solve_lp
from msdro.transport import DiscreteDistribution, GroundCost, ot_cost

L1_COST = GroundCost(kind="norm", norm="l1", p=1)


def random_uq_instance(rng, d_max=2, k_max=2, n_max=3, l_max=3):
    """Random worst-case-expectation instance on the unit box.

    Center atoms sit on the 1/8 grid so every nested refinement contains
    them, and radii are anchored so the first center lies in every ball;
    together these keep the grid-restricted problem feasible at all steps.
    """
    d = int(rng.integers(1, d_max + 1))
    k = int(rng.integers(1, k_max + 1))
    n_pieces = int(rng.integers(1, l_max + 1))
    centers = []
    for _ in range(k):
        n = int(rng.integers(1, n_max + 1))
        atoms = rng.integers(0, 9, size=(n, d)) / 8.0
        probs = rng.uniform(0.2, 1.0, size=n)
        probs /= probs.sum()
        centers.append(DiscreteDistribution(atoms, probs))
    radii = [0.02 + 0.2 * rng.uniform()]
    for ck in centers[1:]:
        w = ot_cost(centers[0], ck, L1_COST).value
        radii.append(w + 0.02 + 0.2 * rng.uniform())
    amb = AmbiguitySpec(
        tuple(AmbiguitySource(c, r) for c, r in zip(centers, radii)), L1_COST
    )
    loss = PiecewiseAffineLoss(
        rng.uniform(-1.0, 1.0, size=(n_pieces, d)),
        rng.uniform(-0.5, 0.5, size=n_pieces),
    )
    support = Polyhedron.box(np.zeros(d), np.ones(d))
    return amb, loss, support


def grid_primal_value(amb, loss, step):
    """Worst-case expectation restricted to the unit-box grid of given step.

    Decision variables are the cell measures of the product decomposition,
    discretized to the grid; this lower-bounds the exact value and
    converges as the grid refines.
    """
    d = amb.dim
    axes = [np.arange(0.0, 1.0 + 1e-12, step)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)  # (G, d)
    g_count = grid.shape[0]
    counts = amb.atom_counts
    n_alpha = int(np.prod(counts))
    idx = np.array(np.unravel_index(np.arange(n_alpha), counts))  # (K, n_alpha)
    k_count = amb.n_sources

    loss_vals = loss(grid)  # (G,)
    obj = np.tile(loss_vals, n_alpha)  # columns are (alpha-major, grid-minor)

    rows, cols, vals = [], [], []
    rhs, senses = [], []
    r = 0
    for k in range(k_count):
        for j in range(counts[k]):
            hit = np.nonzero(idx[k] == j)[0]
            for a_i in hit:
                rows.append(np.full(g_count, r))
                cols.append(a_i * g_count + np.arange(g_count))
                vals.append(np.ones(g_count))
            rhs.append(amb.sources[k].center.probs[j])
            senses.append("==")
            r += 1
    for k in range(k_count):
        atoms_k = amb.sources[k].center.atoms  # (N_k, d)
        for a_i in range(n_alpha):
            anchor = atoms_k[idx[k][a_i]]
            cost_col = np.abs(grid - anchor).sum(axis=1)
            rows.append(np.full(g_count, r))
            cols.append(a_i * g_count + np.arange(g_count))
            vals.append(cost_col)
        rhs.append(amb.sources[k].radius)
        senses.append("<=")
        r += 1
    model = LpModel.build(
        "max",
        obj,
        (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)),
        senses,
        rhs,
        ncols=n_alpha * g_count,
    )
    sol = solve_lp(model)
    if sol.status != "optimal":
        raise RuntimeError(f"grid primal status {sol.status}")
    return float(sol.value)
