"""Multi-source distributionally robust optimization over OT-ball intersections.

The worst-case expected loss of a piecewise affine loss over the
intersection of K transport balls (radius eps_k around discrete center
P_k) is computed exactly through its dual linear program

    min  sum_k eps_k lam_k + sum_{k,j} p_kj gamma_kj
    s.t. lam >= 0, and for every atom combination alpha and piece l:
         b_l + sum_k ( <w_alk, xi_{k,alpha_k}> ) + <z_al, g> <= sum_k gamma_{k,alpha_k}
         a_l - C' z_al = sum_k w_alk,     z_al >= 0
         ||w_alk||_* <= lam_k                  (dual-norm cap, linearized)

valid for powered-norm ground costs with exponent 1.  The L1 ground cost
gives an L-infinity cap (2d bound rows per source); the L-infinity cost
gives an L1 cap (d auxiliary absolute-value columns plus a sum row).
Euclidean ground cost is rejected here: its cap is a cone, not an LP.

Constraint layout is (alpha, l)-major and stable -- see
:class:`DualLpLayout` -- so row duals can be mapped back to atom
combinations when rebuilding a worst-case distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IntersectionEmpty,
    NumericalFailure,
    RecoveryDegenerate,
    SizeExceeded,
    UnsupportedCost,
)
from .lp import LpModel, LpSolution, solve_lp
from .transport import DiscreteDistribution, GroundCost

DEFAULT_SIZE_CAP = 20_000  # max (number of atom combinations) * (pieces)
BUDGET_SLACK = 1e-6


# ---------------------------------------------------------------------------
# Domain types.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmbiguitySource:
    center: DiscreteDistribution
    radius: float

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius < 0:
            raise ValueError("radius must be finite and nonnegative")


@dataclass(frozen=True)
class AmbiguitySpec:
    """K center/radius pairs sharing one ground cost."""

    sources: tuple
    cost: GroundCost

    def __post_init__(self):
        sources = tuple(self.sources)
        if not sources:
            raise ValueError("at least one source is required")
        dim = sources[0].center.dim
        if any(s.center.dim != dim for s in sources):
            raise ValueError("all source centers must share one dimension")
        object.__setattr__(self, "sources", sources)

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def dim(self) -> int:
        return self.sources[0].center.dim

    @property
    def radii(self) -> np.ndarray:
        return np.array([s.radius for s in self.sources])

    @property
    def atom_counts(self) -> tuple:
        return tuple(s.center.n_atoms for s in self.sources)

    def to_json_dict(self) -> dict:
        return {
            "cost": self.cost.to_json_dict(),
            "sources": [
                {"center": s.center.to_json_dict(), "radius": s.radius}
                for s in self.sources
            ],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "AmbiguitySpec":
        return AmbiguitySpec(
            sources=tuple(
                AmbiguitySource(
                    DiscreteDistribution.from_json_dict(s["center"]),
                    float(s["radius"]),
                )
                for s in data["sources"]
            ),
            cost=GroundCost.from_json_dict(data["cost"]),
        )


@dataclass(frozen=True)
class PiecewiseAffineLoss:
    """Loss max_l <a_l, x> + b_l with at least one piece."""

    a: np.ndarray  # (L, d)
    b: np.ndarray  # (L,)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape[0] != b.shape[0] or a.shape[0] < 1:
            raise ValueError("need one intercept per affine piece")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_pieces(self) -> int:
        return self.a.shape[0]

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    def __call__(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.max(points @ self.a.T + self.b, axis=1)

    def scaled(self, s: float) -> "PiecewiseAffineLoss":
        return PiecewiseAffineLoss(s * self.a, s * self.b)

    def to_json_dict(self) -> dict:
        return {
            "pieces": [
                {"a": ai.tolist(), "b": float(bi)} for ai, bi in zip(self.a, self.b)
            ]
        }

    @staticmethod
    def from_json_dict(data: dict) -> "PiecewiseAffineLoss":
        return PiecewiseAffineLoss(
            np.array([p["a"] for p in data["pieces"]], dtype=float),
            np.array([p["b"] for p in data["pieces"]], dtype=float),
        )


@dataclass(frozen=True)
class Polyhedron:
    """Support set {x : C x <= g}; zero rows mean the whole space."""

    c_mat: np.ndarray  # (m, d)
    g: np.ndarray  # (m,)

    def __post_init__(self):
        c_mat = np.asarray(self.c_mat, dtype=float)
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if c_mat.size == 0:
            c_mat = c_mat.reshape(0, c_mat.shape[-1] if c_mat.ndim == 2 else 0)
        if c_mat.shape[0] != g.shape[0]:
            raise ValueError("one bound per row required")
        if not (np.all(np.isfinite(c_mat)) and np.all(np.isfinite(g))):
            raise ValueError("polyhedron data must be finite")
        c_mat.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "c_mat", c_mat)
        object.__setattr__(self, "g", g)

    @staticmethod
    def whole_space(dim: int) -> "Polyhedron":
        return Polyhedron(np.zeros((0, dim)), np.zeros(0))

    @staticmethod
    def box(lower, upper) -> "Polyhedron":
        """Axis-aligned box; infinite entries drop the corresponding row."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        d = len(lower)
        rows, rhs = [], []
        for i in range(d):
            if np.isfinite(upper[i]):
                row = np.zeros(d)
                row[i] = 1.0
                rows.append(row)
                rhs.append(upper[i])
            if np.isfinite(lower[i]):
                row = np.zeros(d)
                row[i] = -1.0
                rows.append(row)
                rhs.append(-lower[i])
        if not rows:
            return Polyhedron.whole_space(d)
        return Polyhedron(np.array(rows), np.array(rhs))

    @property
    def n_rows(self) -> int:
        return self.c_mat.shape[0]

    @property
    def dim(self) -> int:
        return self.c_mat.shape[1]

    def contains(self, points, tol=1e-9) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.n_rows == 0:
            return np.ones(points.shape[0], dtype=bool)
        return np.all(points @ self.c_mat.T <= self.g + tol, axis=1)

    def as_box(self):
        """Return (lower, upper) if every row bounds a single coordinate."""
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        for row, bound in zip(self.c_mat, self.g):
            nz = np.nonzero(row)[0]
            if nz.size == 0:
                if bound < 0:
                    return None  # 0 <= negative: empty, not a box
                continue
            if nz.size > 1:
                return None
            i = nz[0]
            if row[i] > 0:
                hi[i] = min(hi[i], bound / row[i])
            else:
                lo[i] = max(lo[i], bound / row[i])
        return lo, hi

    def to_json_dict(self) -> dict:
        return {"C": self.c_mat.tolist(), "g": self.g.tolist()}

    @staticmethod
    def from_json_dict(data: dict) -> "Polyhedron":
        return Polyhedron(np.asarray(data["C"], float), np.asarray(data["g"], float))


@dataclass(frozen=True)
class DualSolution:
    lam: np.ndarray  # (K,)
    gammas: tuple  # per-source arrays
    value: float

    def gamma_flat(self) -> np.ndarray:
        return np.concatenate(self.gammas)


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Recession direction of the dual feasible set with negative slope."""

    lam_ray: np.ndarray
    gamma_rays: tuple
    slope: float


@dataclass(frozen=True)
class WorstCaseDistribution:
    distribution: DiscreteDistribution
    support_bound: int
    budgets_used: np.ndarray  # transport cost spent against each center
    expected_loss: float


@dataclass(frozen=True)
class ParametricAffineLoss:
    """Pieces <A_l theta + a0_l, x> + <bvec_l, theta> + b0_l, affine in theta."""

    a_mats: np.ndarray  # (L, d, n)
    a0: np.ndarray  # (L, d)
    b_vecs: np.ndarray  # (L, n)
    b0: np.ndarray  # (L,)

    def __post_init__(self):
        a_mats = np.asarray(self.a_mats, dtype=float)
        a0 = np.atleast_2d(np.asarray(self.a0, dtype=float))
        b_vecs = np.atleast_2d(np.asarray(self.b_vecs, dtype=float))
        b0 = np.atleast_1d(np.asarray(self.b0, dtype=float))
        if a_mats.ndim != 3:
            raise ValueError("a_mats must be (L, d, n)")
        L, d, n = a_mats.shape
        if a0.shape != (L, d) or b_vecs.shape != (L, n) or b0.shape != (L,):
            raise ValueError("inconsistent parametric loss shapes")
        for arr in (a_mats, a0, b_vecs, b0):
            arr.setflags(write=False)
        object.__setattr__(self, "a_mats", a_mats)
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "b_vecs", b_vecs)
        object.__setattr__(self, "b0", b0)

    @property
    def n_pieces(self):
        return self.a_mats.shape[0]

    @property
    def dim(self):
        return self.a_mats.shape[1]

    @property
    def n_decisions(self):
        return self.a_mats.shape[2]

    def at(self, theta) -> PiecewiseAffineLoss:
        theta = np.asarray(theta, dtype=float)
        return PiecewiseAffineLoss(
            self.a0 + self.a_mats @ theta, self.b0 + self.b_vecs @ theta
        )


@dataclass(frozen=True)
class MsdroSolution:
    theta: np.ndarray
    value: float
    dual: DualSolution


# ---------------------------------------------------------------------------
# Dual LP layout and assembly.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualLpLayout:
    """Stable row/column map of the dual LP.

    Columns: [theta | lam (K) | gamma (sum N_k) | z (Q*m) | w (Q*K*d)
    | t (Q*K*d, L-infinity cost only)], where Q = n_alpha * L and pairs
    q = alpha_index * L + l run in C order over the alpha grid.

    Rows: [theta support rows | per-q blocks].  Each block holds the
    robust row, d equality rows, then 2d cap rows per source (plus one
    cap-sum row per source for the L-infinity cost).
    """

    atom_counts: tuple
    n_pieces: int
    dim: int
    n_theta: int
    n_support_rows: int
    n_theta_rows: int
    norm: str

    @property
    def n_sources(self):
        return len(self.atom_counts)

    @property
    def n_alpha(self):
        return int(np.prod(self.atom_counts))

    @property
    def n_pairs(self):
        return self.n_alpha * self.n_pieces

    @property
    def has_abs_aux(self):
        return self.norm == "linf"

    # -- columns ---------------------------------------------------------
    @property
    def col_lam(self):
        return self.n_theta

    @property
    def col_gamma(self):
        return self.col_lam + self.n_sources

    def col_gamma_k(self, k):
        return self.col_gamma + int(np.sum(self.atom_counts[:k]))

    @property
    def col_z(self):
        return self.col_gamma + int(np.sum(self.atom_counts))

    @property
    def col_w(self):
        return self.col_z + self.n_pairs * self.n_support_rows

    @property
    def col_t(self):
        return self.col_w + self.n_pairs * self.n_sources * self.dim

    @property
    def n_cols(self):
        n = self.col_t
        if self.has_abs_aux:
            n += self.n_pairs * self.n_sources * self.dim
        return n

    # -- rows --------------------------------------------------------------
    @property
    def block_rows(self):
        caps = 2 * self.dim * self.n_sources
        if self.has_abs_aux:
            caps += self.n_sources
        return 1 + self.dim + caps

    def robust_row(self, q):
        return self.n_theta_rows + q * self.block_rows

    def eq_rows(self, q):
        start = self.robust_row(q) + 1
        return np.arange(start, start + self.dim)

    @property
    def n_rows(self):
        return self.n_theta_rows + self.n_pairs * self.block_rows

    def alpha_of_pair(self, q):
        """Multi-index of pair q (its piece is q % n_pieces)."""
        return np.unravel_index(q // self.n_pieces, self.atom_counts)


def _check_cost(cost: GroundCost):
    if cost.kind != "norm" or cost.p != 1:
        raise UnsupportedCost("robust reformulation needs a powered norm with p=1")
    if cost.norm == "l2":
        raise UnsupportedCost(
            "Euclidean ground cost yields a conic cap, not an LP; use l1 or linf"
        )


def _assemble_dual_lp(
    amb: AmbiguitySpec,
    support: Polyhedron,
    pieces_a,  # (L, d) constant part of each piece's slope
    pieces_b,  # (L,) constant intercepts
    theta_mats=None,  # (L, d, n) slope dependence on theta
    theta_bvecs=None,  # (L, n) intercept dependence on theta
    theta_set: Polyhedron | None = None,
    size_cap: int = DEFAULT_SIZE_CAP,
):
    _check_cost(amb.cost)
    if support.dim != amb.dim:
        raise ValueError("support set dimension does not match the sources")
    counts = amb.atom_counts
    K = amb.n_sources
    d = amb.dim
    L = pieces_a.shape[0]
    n_alpha = int(np.prod(counts))
    if n_alpha * L > size_cap:
        raise SizeExceeded(f"{n_alpha * L} robust blocks exceed the cap {size_cap}")
    n_theta = 0 if theta_mats is None else theta_mats.shape[2]
    n_theta_rows = 0 if theta_set is None else theta_set.n_rows
    layout = DualLpLayout(
        atom_counts=counts,
        n_pieces=L,
        dim=d,
        n_theta=n_theta,
        n_support_rows=support.n_rows,
        n_theta_rows=n_theta_rows,
        norm=amb.cost.norm,
    )
    Q = layout.n_pairs
    q = np.arange(Q)
    ai = q // L
    li = q % L
    idx = np.array(np.unravel_index(np.arange(n_alpha), counts))  # (K, n_alpha)
    block = layout.block_rows
    row0 = layout.n_theta_rows + q * block

    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(np.asarray(r, dtype=np.int64).ravel())
        cols.append(np.asarray(c, dtype=np.int64).ravel())
        vals.append(np.asarray(v, dtype=float).ravel())

    # theta support rows C_theta theta <= g_theta
    if n_theta_rows:
        rr, cc = np.nonzero(theta_set.c_mat)
        add(rr, cc, theta_set.c_mat[rr, cc])

    m_sup = support.n_rows
    for k in range(K):
        atoms_k = amb.sources[k].center.atoms[idx[k]]  # (n_alpha, d)
        w_base = layout.col_w + (q * K + k) * d  # (Q,)
        # robust row: <w_qk, atom_k(alpha)>
        add(
            np.repeat(row0, d),
            (w_base[:, None] + np.arange(d)).ravel(),
            atoms_k[ai].ravel(),
        )
        # robust row: -gamma_{k, alpha_k}
        add(row0, layout.col_gamma_k(k) + idx[k][ai], -np.ones(Q))
        # equality rows: + w_qk
        add(
            (row0[:, None] + 1 + np.arange(d)).ravel(),
            (w_base[:, None] + np.arange(d)).ravel(),
            np.ones(Q * d),
        )
        # caps
        cap0 = row0 + 1 + d + k * 2 * d  # (Q,)
        w_cols = (w_base[:, None] + np.arange(d)).ravel()
        plus_rows = (cap0[:, None] + 2 * np.arange(d)).ravel()
        minus_rows = plus_rows + 1
        add(plus_rows, w_cols, np.ones(Q * d))
        add(minus_rows, w_cols, -np.ones(Q * d))
        if layout.has_abs_aux:
            t_base = layout.col_t + (q * K + k) * d
            t_cols = (t_base[:, None] + np.arange(d)).ravel()
            add(plus_rows, t_cols, -np.ones(Q * d))
            add(minus_rows, t_cols, -np.ones(Q * d))
            sum_rows = row0 + 1 + d + K * 2 * d + k
            add(np.repeat(sum_rows, d), t_cols, np.ones(Q * d))
            add(sum_rows, np.full(Q, layout.col_lam + k), -np.ones(Q))
        else:
            add(plus_rows, np.repeat(layout.col_lam + k, Q * d), -np.ones(Q * d))
            add(minus_rows, np.repeat(layout.col_lam + k, Q * d), -np.ones(Q * d))

    if m_sup:
        # robust row: <z_q, g>
        z_cols = (layout.col_z + q[:, None] * m_sup + np.arange(m_sup)).ravel()
        add(np.repeat(row0, m_sup), z_cols, np.tile(support.g, Q))
        # equality rows: + C' z_q
        ct = support.c_mat.T  # (d, m_sup)
        add(
            np.repeat(row0 + 1, d * m_sup)
            + np.tile(np.repeat(np.arange(d), m_sup), Q),
            np.repeat(layout.col_z + q * m_sup, d * m_sup)
            + np.tile(np.tile(np.arange(m_sup), d), Q),
            np.tile(ct.ravel(), Q),
        )

    if n_theta:
        # robust row: <bvec_l, theta>
        add(
            np.repeat(row0, n_theta),
            np.tile(np.arange(n_theta), Q),
            theta_bvecs[li].ravel(),
        )
        # equality rows: -A_l theta
        add(
            np.repeat(row0 + 1, d * n_theta)
            + np.tile(np.repeat(np.arange(d), n_theta), Q),
            np.tile(np.arange(n_theta), Q * d),
            -theta_mats[li].reshape(Q, d * n_theta).ravel(),
        )

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    keep = vals != 0.0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]

    rhs = np.zeros(layout.n_rows)
    sense = np.full(layout.n_rows, "<=", dtype="<U2")
    if n_theta_rows:
        rhs[:n_theta_rows] = theta_set.g
    rhs[row0] = -pieces_b[li]
    eq_rows = (row0[:, None] + 1 + np.arange(d)).ravel()
    sense[eq_rows] = "=="
    rhs[eq_rows] = pieces_a[li].ravel()

    obj = np.zeros(layout.n_cols)
    obj[layout.col_lam : layout.col_lam + K] = amb.radii
    obj[layout.col_gamma : layout.col_z] = np.concatenate(
        [s.center.probs for s in amb.sources]
    )
    lb = np.full(layout.n_cols, -np.inf)
    lb[layout.col_lam : layout.col_lam + K] = 0.0  # lam >= 0
    lb[layout.col_z : layout.col_w] = 0.0  # z >= 0
    if layout.has_abs_aux:
        lb[layout.col_t :] = 0.0  # t >= 0
    model = LpModel.build(
        "min", obj, (rows, cols, vals), sense, rhs, lb=lb, ncols=layout.n_cols
    )
    return model, layout


def build_dual_lp(
    amb: AmbiguitySpec,
    loss: PiecewiseAffineLoss,
    support: Polyhedron,
    size_cap: int = DEFAULT_SIZE_CAP,
):
    """Dual LP of the worst-case expectation problem; returns (model, layout)."""
    if loss.dim != amb.dim:
        raise ValueError("loss dimension does not match the sources")
    return _assemble_dual_lp(
        amb, support, loss.a, loss.b, size_cap=size_cap
    )


# ---------------------------------------------------------------------------
# Worst-case value, certificate, distribution recovery, min-max solve.
# ---------------------------------------------------------------------------


def _certificate_from_ray(layout: DualLpLayout, amb, ray) -> InfeasibilityCertificate:
    lam_ray = ray[layout.col_lam : layout.col_lam + layout.n_sources]
    gamma_rays = tuple(
        ray[layout.col_gamma_k(k) : layout.col_gamma_k(k) + layout.atom_counts[k]]
        for k in range(layout.n_sources)
    )
    slope = float(amb.radii @ lam_ray) + sum(
        float(s.center.probs @ g) for s, g in zip(amb.sources, gamma_rays)
    )
    return InfeasibilityCertificate(lam_ray, gamma_rays, slope)


def _extract_dual_solution(layout, sol: LpSolution) -> DualSolution:
    lam = sol.x[layout.col_lam : layout.col_lam + layout.n_sources]
    gammas = tuple(
        sol.x[layout.col_gamma_k(k) : layout.col_gamma_k(k) + layout.atom_counts[k]]
        for k in range(layout.n_sources)
    )
    return DualSolution(lam=lam, gammas=gammas, value=float(sol.value))


def _solve_dual(amb, loss, support, engine, size_cap):
    model, layout = build_dual_lp(amb, loss, support, size_cap=size_cap)
    sol = solve_lp(model, engine=engine)
    if sol.status == "unbounded":
        cert = _certificate_from_ray(layout, amb, sol.primal_ray)
        raise IntersectionEmpty(cert)
    if sol.status != "optimal":
        raise NumericalFailure(f"dual LP ended with status {sol.status}")
    return model, layout, sol


def worst_case_value(
    amb: AmbiguitySpec,
    loss: PiecewiseAffineLoss,
    support: Polyhedron,
    engine: str = "auto",
    size_cap: int = DEFAULT_SIZE_CAP,
) -> DualSolution:
    """Exact worst-case expected loss over the ambiguity intersection.

    Raises :class:`IntersectionEmpty` with a certificate when the balls
    have no common distribution.
    """
    _, layout, sol = _solve_dual(amb, loss, support, engine, size_cap)
    return _extract_dual_solution(layout, sol)


def worst_case_distribution(
    amb: AmbiguitySpec,
    loss: PiecewiseAffineLoss,
    support: Polyhedron,
    engine: str = "auto",
    size_cap: int = DEFAULT_SIZE_CAP,
) -> WorstCaseDistribution:
    """Recover a sparse maximizing distribution from the dual solution.

    Each robust row with positive multiplier mu contributes one atom with
    mass mu.  Its location is the moment ratio y/mu, where y is the dual
    vector of the block's equality rows: LP duality makes y the first
    moment of the cell's measure, which pins the atom even when the
    penalized loss has a flat maximizer face.  The atom is then checked
    against the penalized-loss envelope from the oracle module.
    """
    from .oracle import moreau_envelope  # local import to avoid a cycle

    _, layout, sol = _solve_dual(amb, loss, support, engine, size_cap)
    dual = _extract_dual_solution(layout, sol)
    q_all = np.arange(layout.n_pairs)
    mu = np.maximum(-sol.duals[layout.robust_row(q_all)], 0.0)
    total = float(mu.sum())
    if total < 1.0 - 1e-6:
        raise RecoveryDegenerate(
            f"robust-row multipliers sum to {total:.9f} < 1; "
            "the radii likely sit on the feasibility boundary"
        )
    idx = np.array(np.unravel_index(np.arange(layout.n_alpha), layout.atom_counts))
    pos = np.nonzero(mu > 1e-10)[0]
    atoms = []
    masses = []
    for qi in pos:
        a_i, l_i = qi // layout.n_pieces, qi % layout.n_pieces
        anchors = np.stack(
            [amb.sources[k].center.atoms[idx[k][a_i]] for k in range(amb.n_sources)]
        )
        point = sol.duals[layout.eq_rows(qi)] / mu[qi]
        piece = PiecewiseAffineLoss(loss.a[l_i : l_i + 1], loss.b[l_i : l_i + 1])
        res = moreau_envelope(dual.lam, anchors, piece, support, amb.cost)
        attained = float(piece(point)[0]) - float(
            dual.lam @ amb.cost.norm_of(point - anchors)
        )
        scale = 1.0 + abs(res.value) if res.finite else 1.0
        if not res.finite or attained < res.value - 1e-6 * scale:
            raise RecoveryDegenerate(
                "moment atom does not attain the penalized-loss envelope"
            )
        if not support.contains(point, tol=1e-7)[0]:
            raise RecoveryDegenerate("moment atom escapes the support set")
        atoms.append(point)
        masses.append(mu[qi])
    from .barycenter import _merge_atoms

    merged_atoms, merged_mass = _merge_atoms(np.array(atoms), np.array(masses))
    merged_mass = merged_mass / merged_mass.sum()
    dist = DiscreteDistribution(merged_atoms, merged_mass)
    support_bound = 1 + int(np.sum(layout.atom_counts))
    if dist.n_atoms > support_bound:
        raise RecoveryDegenerate(
            f"{dist.n_atoms} recovered atoms exceed the bound {support_bound}"
        )
    budgets = np.zeros(amb.n_sources)
    pts = np.array(atoms)
    mass_arr = np.array(masses)
    for k in range(amb.n_sources):
        anchor_pts = amb.sources[k].center.atoms[idx[k][pos // layout.n_pieces]]
        budgets[k] = float(np.sum(mass_arr * amb.cost.norm_of(pts - anchor_pts)))
    expected = float(dist.probs @ loss(dist.atoms))
    return WorstCaseDistribution(
        distribution=dist,
        support_bound=support_bound,
        budgets_used=budgets,
        expected_loss=expected,
    )


def solve_msdro(
    amb: AmbiguitySpec,
    loss_family: ParametricAffineLoss,
    theta_set: Polyhedron,
    support: Polyhedron | None = None,
    engine: str = "auto",
    size_cap: int = DEFAULT_SIZE_CAP,
) -> MsdroSolution:
    """Min-max solve: decision minimizing the worst-case expected loss.

    The decision enters every piece affinely, so it joins the dual LP as
    extra columns and the min-max collapses to a single minimization.
    """
    if loss_family.dim != amb.dim:
        raise ValueError("loss dimension does not match the sources")
    if theta_set.dim != loss_family.n_decisions:
        raise ValueError("decision polyhedron dimension mismatch")
    if support is None:
        support = Polyhedron.whole_space(amb.dim)
    model, layout = _assemble_dual_lp(
        amb,
        support,
        loss_family.a0,
        loss_family.b0,
        theta_mats=loss_family.a_mats,
        theta_bvecs=loss_family.b_vecs,
        theta_set=theta_set,
        size_cap=size_cap,
    )
    sol = solve_lp(model, engine=engine)
    if sol.status == "unbounded":
        ray = sol.primal_ray
        lam_part = np.abs(
            ray[layout.col_lam : layout.col_lam + layout.n_sources]
        ).sum()
        gamma_part = np.abs(ray[layout.col_gamma : layout.col_z]).sum()
        if lam_part + gamma_part > 1e-9:
            raise IntersectionEmpty(_certificate_from_ray(layout, amb, ray))
        raise NumericalFailure("min-max LP unbounded in the decision variables")
    if sol.status != "optimal":
        raise NumericalFailure(f"min-max LP ended with status {sol.status}")
    theta = sol.x[: layout.n_theta]
    return MsdroSolution(
        theta=theta,
        value=float(sol.value),
        dual=_extract_dual_solution(layout, sol),
    )
