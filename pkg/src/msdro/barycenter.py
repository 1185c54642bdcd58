"""OT barycenters of K discrete distributions via multi-margin transport.

The barycenter problem  min_P  sum_k w_k C(P, P_k)  is solved by the
two-stage construction: an inner minimizer

    phi(x_1..x_K) = min_x  sum_k w_k c(x, x_k),   Phi = argmin,

evaluated in closed form (weighted mean for squared Euclidean cost,
coordinate-wise weighted median for the L1 norm), followed by a linear
program over multi-margin transportation plans with cost phi.  The
barycenter is the pushforward of the optimal plan under Phi.

Barycenters need not be unique; any optimal plan is acceptable and tests
compare against the set of known optima.  Ties in the weighted median
resolve to the lower endpoint of the median interval so that repeated
runs return identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllWeightsZero, DimensionMismatch, SizeExceeded, UnsupportedCost
from .lp import LpModel, solve_lp
from .transport import DiscreteDistribution, GroundCost

DEFAULT_ENUM_CAP = 100_000
MERGE_TOL = 1e-10


@dataclass(frozen=True)
class MultiMarginPlan:
    """Sparse plan over the product of K atom index sets."""

    alphas: np.ndarray  # (nnz, K) multi-indices
    mass: np.ndarray  # (nnz,)
    shape: tuple  # (N_1, ..., N_K)

    def marginal(self, k: int) -> np.ndarray:
        return np.bincount(
            self.alphas[:, k], weights=self.mass, minlength=self.shape[k]
        )

    def total_mass(self) -> float:
        return float(self.mass.sum())


@dataclass(frozen=True)
class BarycenterResult:
    barycenter: DiscreteDistribution
    plan: MultiMarginPlan
    objective: float


def inner_minimizer(points, weights, cost: GroundCost):
    """Weighted aggregation point and its cost: min_x sum_k w_k c(x, p_k).

    Returns ``(phi, Phi)``.  Zero-weight points never influence ``Phi``.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(weights > 0):
        raise AllWeightsZero("at least one aggregation weight must be positive")
    phi, point = _inner_batch(points[None, :, :], weights, cost)
    return float(phi[0]), point[0]


def _inner_batch(points: np.ndarray, weights: np.ndarray, cost: GroundCost):
    """Vectorized inner minimizer over a batch of (K, d) point tuples."""
    if cost.kind == "sqeuclidean":
        total = weights.sum()
        center = np.einsum("k,mkd->md", weights, points) / total
        sq = np.sum((points - center[:, None, :]) ** 2, axis=2)
        return sq @ weights, center
    if cost.kind == "norm" and cost.norm == "l1" and cost.p == 1:
        order = np.argsort(points, axis=1, kind="stable")
        svals = np.take_along_axis(points, order, axis=1)
        sweights = weights[order]
        cum = np.cumsum(sweights, axis=1)
        total = weights.sum()
        pick = np.argmax(cum >= total / 2.0 - 1e-12 * total, axis=1)
        center = np.take_along_axis(svals, pick[:, None, :], axis=1)[:, 0, :]
        dist = np.sum(np.abs(points - center[:, None, :]), axis=2)
        return dist @ weights, center
    raise UnsupportedCost(
        "barycenters support squared-Euclidean and L1 (p=1) costs only"
    )


def _merge_atoms(atoms: np.ndarray, mass: np.ndarray):
    """Sum masses of atoms that coincide coordinate-wise within MERGE_TOL."""
    order = np.lexsort(atoms.T[::-1])
    atoms, mass = atoms[order], mass[order]
    rep_atoms = [atoms[0]]
    rep_mass = [mass[0]]
    for i in range(1, len(atoms)):
        if np.max(np.abs(atoms[i] - rep_atoms[-1])) <= MERGE_TOL:
            rep_mass[-1] = rep_mass[-1] + mass[i]
        else:
            rep_atoms.append(atoms[i])
            rep_mass.append(mass[i])
    return np.array(rep_atoms), np.array(rep_mass)


def barycenter(
    distributions,
    weights,
    cost: GroundCost,
    enum_cap: int = DEFAULT_ENUM_CAP,
    engine: str = "auto",
) -> BarycenterResult:
    """Barycenter of the distributions under the given aggregation weights.

    Zero-weight sources still constrain the plan through their marginal;
    they simply contribute nothing to the objective.
    """
    dists = list(distributions)
    weights = np.asarray(weights, dtype=float)
    if len(dists) != len(weights):
        raise ValueError("one weight per distribution required")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(weights > 0):
        raise AllWeightsZero("at least one barycenter weight must be positive")
    dim = dists[0].dim
    if any(d.dim != dim for d in dists):
        raise DimensionMismatch("all distributions must share one dimension")
    shape = tuple(d.n_atoms for d in dists)
    total = int(np.prod(shape))
    if total > enum_cap:
        raise SizeExceeded(f"{total} atom combinations exceed the cap {enum_cap}")

    k_count = len(dists)
    idx = np.array(np.unravel_index(np.arange(total), shape))  # (K, total)
    points = np.stack([d.atoms[idx[k]] for k, d in enumerate(dists)], axis=1)
    phi, centers = _inner_batch(points, weights, cost)

    rows, cols, vals = [], [], []
    rhs = []
    offset = 0
    for k, d in enumerate(dists):
        rows.append(offset + idx[k])
        cols.append(np.arange(total))
        vals.append(np.ones(total))
        rhs.append(d.probs)
        offset += d.n_atoms
    model = LpModel.build(
        "min",
        phi,
        (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)),
        ["=="] * offset,
        np.concatenate(rhs),
    )
    sol = solve_lp(model, engine=engine)
    if sol.status != "optimal":
        raise RuntimeError(f"multi-margin LP ended with status {sol.status}")
    keep = sol.x > 1e-15
    plan = MultiMarginPlan(alphas=idx.T[keep], mass=sol.x[keep], shape=shape)
    atoms, mass = _merge_atoms(centers[keep], sol.x[keep])
    mass = mass / mass.sum()
    return BarycenterResult(
        barycenter=DiscreteDistribution(atoms, mass),
        plan=plan,
        objective=float(sol.value),
    )
