"""Discrete optimal transport: OT costs, plans, and Wasserstein distances.

Distributions are finitely supported with strictly positive atom
probabilities.  The OT problem between two of them is a dense
transportation LP solved through the :mod:`msdro.lp` kernel; instances in
this package are small enough that no specialized network solver is
needed.  Coincident atoms are legal and left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UnsupportedCost
from .lp import LpModel, solve_lp

MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported distribution: ``atoms[j]`` carries ``probs[j]``."""

    atoms: np.ndarray  # (n, d)
    probs: np.ndarray  # (n,)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        probs = np.asarray(self.probs, dtype=float)
        if atoms.ndim != 2 or probs.ndim != 1 or atoms.shape[0] != probs.shape[0]:
            raise ValueError("atoms must be (n, d) with one probability per atom")
        if np.any(probs <= 0):
            raise ValueError("atom probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("atom probabilities must sum to one")
        atoms = atoms.copy()
        probs = probs.copy()
        atoms.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @staticmethod
    def dirac(point) -> "DiscreteDistribution":
        return DiscreteDistribution(np.atleast_2d(np.asarray(point, float)), [1.0])

    @staticmethod
    def empirical(samples) -> "DiscreteDistribution":
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        n = samples.shape[0]
        return DiscreteDistribution(samples, np.full(n, 1.0 / n))

    def mean(self) -> np.ndarray:
        return self.probs @ self.atoms

    def variance(self) -> float:
        """Trace of the covariance matrix under the distribution."""
        centered = self.atoms - self.mean()
        return float(self.probs @ np.sum(centered**2, axis=1))

    def to_json_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "probs": self.probs.tolist()}

    @staticmethod
    def from_json_dict(data: dict) -> "DiscreteDistribution":
        return DiscreteDistribution(np.asarray(data["atoms"], float), data["probs"])


@dataclass(frozen=True)
class GroundCost:
    """Transportation cost c(x, y): a powered norm or squared Euclidean.

    ``kind == "norm"`` means c = ||x - y||^p for the given norm with p = 1,
    the pure-LP regime used by the robust modules.  ``kind ==
    "sqeuclidean"`` means c = ||x - y||_2^2, accepted by the barycenter
    machinery.
    """

    kind: str = "norm"  # "norm" | "sqeuclidean"
    norm: str = "l2"  # "l1" | "l2" | "linf"
    p: int = 1

    def __post_init__(self):
        if self.kind not in ("norm", "sqeuclidean"):
            raise UnsupportedCost(f"unknown cost kind {self.kind!r}")
        if self.kind == "norm":
            if self.norm not in ("l1", "l2", "linf"):
                raise UnsupportedCost(f"unknown norm {self.norm!r}")
            if self.p != 1:
                raise UnsupportedCost("powered-norm costs support exponent p=1 only")

    def norm_of(self, diff: np.ndarray) -> np.ndarray:
        """Norm of difference vectors along the last axis."""
        if self.kind == "sqeuclidean" or self.norm == "l2":
            return np.sqrt(np.sum(diff**2, axis=-1))
        if self.norm == "l1":
            return np.sum(np.abs(diff), axis=-1)
        return np.max(np.abs(diff), axis=-1)

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Cost matrix between rows of ``x`` and rows of ``y``."""
        diff = x[:, None, :] - y[None, :, :]
        if self.kind == "sqeuclidean":
            return np.sum(diff**2, axis=-1)
        return self.norm_of(diff)

    def of(self, x, y) -> float:
        x = np.asarray(x, float).reshape(1, -1)
        y = np.asarray(y, float).reshape(1, -1)
        return float(self.pairwise(x, y)[0, 0])

    def to_json_dict(self) -> dict:
        if self.kind == "sqeuclidean":
            return {"norm": "sqeuclidean"}
        return {"norm": self.norm, "p": self.p}

    @staticmethod
    def from_json_dict(data: dict) -> "GroundCost":
        norm = data.get("norm", "l2")
        if norm == "sqeuclidean" or data.get("kind") == "sqeuclidean":
            return GroundCost(kind="sqeuclidean")
        return GroundCost(kind="norm", norm=norm, p=int(data.get("p", 1)))


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: mass[k] moves source atom src[k] to target dst[k]."""

    src: np.ndarray
    dst: np.ndarray
    mass: np.ndarray
    n_src: int
    n_dst: int

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.src, weights=self.mass, minlength=self.n_src)

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.dst, weights=self.mass, minlength=self.n_dst)

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_src, self.n_dst))
        np.add.at(out, (self.src, self.dst), self.mass)
        return out


@dataclass(frozen=True)
class OtResult:
    value: float
    plan: TransportPlan


def ot_cost(
    p: DiscreteDistribution,
    q: DiscreteDistribution,
    cost: GroundCost,
    engine: str = "auto",
) -> OtResult:
    """Minimum-cost coupling of ``p`` and ``q`` under the ground cost."""
    if p.dim != q.dim:
        raise DimensionMismatch(f"dimensions differ: {p.dim} vs {q.dim}")
    n, m = p.n_atoms, q.n_atoms
    cmat = cost.pairwise(p.atoms, q.atoms)
    # variables x_ij (row-major); rows: n source marginals then m target ones
    cols = np.arange(n * m)
    src_rows = cols // m
    dst_rows = n + cols % m
    rows = np.concatenate([src_rows, dst_rows])
    vals = np.ones(2 * n * m)
    model = LpModel.build(
        "min",
        cmat.ravel(),
        (rows, np.concatenate([cols, cols]), vals),
        ["=="] * (n + m),
        np.concatenate([p.probs, q.probs]),
    )
    sol = solve_lp(model, engine=engine)
    if sol.status != "optimal":
        raise RuntimeError(f"transport LP ended with status {sol.status}")
    keep = sol.x > 0
    plan = TransportPlan(
        src=src_rows[keep], dst=(cols % m)[keep], mass=sol.x[keep], n_src=n, n_dst=m
    )
    return OtResult(value=float(sol.value), plan=plan)


def wasserstein_distance(
    p: DiscreteDistribution,
    q: DiscreteDistribution,
    norm: str = "l2",
    order: int = 1,
) -> float:
    """Wasserstein distance of the given order induced by the norm.

    Order 1 supports every norm; order 2 is available for the Euclidean
    norm, where the underlying cost is squared Euclidean.
    """
    if order == 1:
        return ot_cost(p, q, GroundCost(kind="norm", norm=norm, p=1)).value
    if order == 2 and norm == "l2":
        return float(np.sqrt(ot_cost(p, q, GroundCost(kind="sqeuclidean")).value))
    raise UnsupportedCost(f"unsupported Wasserstein order {order} with norm {norm!r}")
