"""Penalized-loss maximization, separation oracle, and ellipsoid solver.

The central quantity is the transport-penalized envelope

    env(lam) = sup_{x in Xi}  loss(x) - sum_k lam_k c(x, anchor_k),

evaluated piece by piece.  For the L1 ground cost over a box (or the
whole space) the maximization separates across coordinates and each
coordinate is a concave piecewise-linear function whose maximum sits at
an anchor coordinate or a box edge; otherwise an epigraph LP with
per-source norm variables is solved.  When a piece grows without bound
the envelope is infinite and a halfspace in lam-space is reported that
contains every lam with a finite envelope (the finiteness condition
along the unbounded direction u is  sum_k lam_k ||u|| >= <a, u>).

The separation oracle walks all atom combinations of the dual feasible
set and turns envelope violations into cutting halfspaces; the ellipsoid
method minimizes the dual objective with central cuts on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IterationBudgetExceeded,
    NegativeLambda,
    NumericalFailure,
    UnboundedObjective,
    UnsupportedCost,
)
from .lp import LpModel, solve_lp
from .dro import AmbiguitySpec, PiecewiseAffineLoss, Polyhedron
from .transport import GroundCost


@dataclass(frozen=True)
class Halfspace:
    """Feasible side is {x : normal'x >= offset}."""

    normal: np.ndarray
    offset: float

    def contains(self, x, tol=1e-9) -> bool:
        return float(self.normal @ x) >= self.offset - tol


@dataclass(frozen=True)
class MoreauResult:
    value: float  # np.inf when unbounded
    maximizer: np.ndarray | None
    lam_halfspace: Halfspace | None  # in lam-space, set when value is inf

    @property
    def finite(self) -> bool:
        return np.isfinite(self.value)


INSIDE = "inside"


@dataclass(frozen=True)
class OracleResponse:
    kind: str  # "inside" | "halfspace"
    halfspace: Halfspace | None = None

    @property
    def inside(self) -> bool:
        return self.kind == INSIDE


def moreau_envelope(
    lam,
    anchors,
    loss: PiecewiseAffineLoss,
    support: Polyhedron,
    cost: GroundCost,
    method: str = "auto",
) -> MoreauResult:
    """Envelope value, a maximizer when finite, else a lam-space halfspace."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    if np.any(lam < -1e-12):
        raise NegativeLambda("transport multipliers must be nonnegative")
    lam = np.maximum(lam, 0.0)
    if cost.kind != "norm" or cost.p != 1:
        raise UnsupportedCost("envelope evaluation needs a powered norm with p=1")
    if method == "auto":
        box = support.as_box() if cost.norm == "l1" else None
        method = "separable" if box is not None else "lp"
    if method == "separable":
        box = support.as_box()
        if box is None or cost.norm != "l1":
            raise ValueError("separable evaluation needs an L1 cost over a box")
        return _moreau_separable(lam, anchors, loss, box)
    return _moreau_lp(lam, anchors, loss, support, cost)


def _moreau_separable(lam, anchors, loss, box):
    lo, hi = box
    K, d = anchors.shape
    lam_total = lam.sum()
    best_val = -np.inf
    best_point = None
    for l in range(loss.n_pieces):
        a = loss.a[l]
        up = np.isinf(hi) & (a - lam_total > 1e-12)
        down = np.isinf(lo) & (-a - lam_total > 1e-12)
        if up.any() or down.any():
            i = int(np.argmax(up | down))
            return MoreauResult(
                value=np.inf,
                maximizer=None,
                lam_halfspace=Halfspace(np.ones(K), abs(a[i])),
            )
        # candidates per coordinate: anchor coordinates clipped to the box,
        # plus finite box edges
        cands = np.clip(anchors, lo, hi)  # (K, d)
        extra = [np.where(np.isfinite(lo), lo, anchors[0]),
                 np.where(np.isfinite(hi), hi, anchors[0])]
        cands = np.vstack([cands] + extra)  # (n_cand, d)
        pen = np.einsum("k,ckd->cd", lam, np.abs(cands[:, None, :] - anchors))
        vals = a * cands - pen  # (n_cand, d)
        pick = np.argmax(vals, axis=0)
        coord_best = vals[pick, np.arange(d)]
        # deterministic tie-break: lowest candidate value among near-ties
        point = np.empty(d)
        for i in range(d):
            ties = np.abs(vals[:, i] - coord_best[i]) <= 1e-12 * (
                1 + abs(coord_best[i])
            )
            point[i] = np.min(cands[ties, i])
        total = float(coord_best.sum() + loss.b[l])
        if total > best_val + 1e-15:
            best_val = total
            best_point = point
    return MoreauResult(value=best_val, maximizer=best_point, lam_halfspace=None)


def _moreau_lp(lam, anchors, loss, support, cost):
    K, d = anchors.shape
    best_val = -np.inf
    best_point = None
    for l in range(loss.n_pieces):
        a = loss.a[l]
        if cost.norm == "l1":
            # vars: x (d, free), t (K*d, >= 0); n_k = sum_i t_ki
            n_t = K * d
            rows, cols, vals, rhs, senses = [], [], [], [], []
            r = 0
            for k in range(K):
                for i in range(d):
                    t_col = d + k * d + i
                    rows += [r, r]
                    cols += [i, t_col]
                    vals += [1.0, -1.0]
                    rhs.append(anchors[k, i])
                    senses.append("<=")
                    r += 1
                    rows += [r, r]
                    cols += [i, t_col]
                    vals += [-1.0, -1.0]
                    rhs.append(-anchors[k, i])
                    senses.append("<=")
                    r += 1
            obj = np.concatenate([a, -np.repeat(lam, d)])
        elif cost.norm == "linf":
            # vars: x (d, free), n (K, >= 0); n_k >= |x_i - anchor_ki|
            n_t = K
            rows, cols, vals, rhs, senses = [], [], [], [], []
            r = 0
            for k in range(K):
                for i in range(d):
                    rows += [r, r]
                    cols += [i, d + k]
                    vals += [1.0, -1.0]
                    rhs.append(anchors[k, i])
                    senses.append("<=")
                    r += 1
                    rows += [r, r]
                    cols += [i, d + k]
                    vals += [-1.0, -1.0]
                    rhs.append(-anchors[k, i])
                    senses.append("<=")
                    r += 1
            obj = np.concatenate([a, -lam])
        else:  # pragma: no cover - guarded earlier
            raise UnsupportedCost(cost.norm)
        for srow, sg in zip(support.c_mat, support.g):
            nz = np.nonzero(srow)[0]
            rows += [r] * len(nz)
            cols += list(nz)
            vals += list(srow[nz])
            rhs.append(sg)
            senses.append("<=")
            r += 1
        lb = np.concatenate([np.full(d, -np.inf), np.zeros(n_t)])
        model = LpModel.build(
            "max", obj, (rows, cols, vals), senses, rhs, lb=lb,
            ncols=d + n_t,
        )
        sol = solve_lp(model, engine="simplex")
        if sol.status == "unbounded":
            u = sol.primal_ray[:d]
            rate = float(cost.norm_of(u))
            if rate <= 1e-12:
                raise NumericalFailure("unbounded ray with zero transport rate")
            return MoreauResult(
                value=np.inf,
                maximizer=None,
                lam_halfspace=Halfspace(np.full(K, rate) / rate, float(a @ u) / rate),
            )
        if sol.status != "optimal":
            raise NumericalFailure(f"envelope LP status {sol.status}")
        val = float(sol.value + loss.b[l])
        if val > best_val + 1e-15:
            best_val = val
            best_point = sol.x[:d]
    return MoreauResult(value=best_val, maximizer=best_point, lam_halfspace=None)


# ---------------------------------------------------------------------------
# Separation oracle over the dual feasible set.
# ---------------------------------------------------------------------------


def dual_dimension(amb: AmbiguitySpec) -> int:
    return amb.n_sources + int(np.sum(amb.atom_counts))


def pack_point(lam, gammas) -> np.ndarray:
    return np.concatenate([np.atleast_1d(lam)] + [np.atleast_1d(g) for g in gammas])


def unpack_point(amb: AmbiguitySpec, x: np.ndarray):
    K = amb.n_sources
    lam = x[:K]
    gammas = []
    off = K
    for n in amb.atom_counts:
        gammas.append(x[off : off + n])
        off += n
    return lam, gammas


def separation_oracle(
    point: np.ndarray,
    amb: AmbiguitySpec,
    loss: PiecewiseAffineLoss,
    support: Polyhedron,
    tol: float = 1e-9,
) -> OracleResponse:
    """Certify dual feasibility of ``point`` or return a cutting halfspace.

    The point packs (lam_1..lam_K, gamma_1, ..., gamma_K).  Negative
    multipliers cut on the sign constraint; envelope violations cut with
    the plane built from the violating maximizer.
    """
    n = dual_dimension(amb)
    point = np.asarray(point, dtype=float)
    if point.shape != (n,):
        raise ValueError(f"expected a point of dimension {n}")
    K = amb.n_sources
    lam, gammas = unpack_point(amb, point)
    for k in range(K):
        if lam[k] < -tol:
            normal = np.zeros(n)
            normal[k] = 1.0
            return OracleResponse("halfspace", Halfspace(normal, 0.0))
    counts = amb.atom_counts
    n_alpha = int(np.prod(counts))
    idx = np.array(np.unravel_index(np.arange(n_alpha), counts))
    gamma_offsets = np.concatenate(([0], np.cumsum(counts)))[:-1] + K
    scale = 1.0 + float(np.abs(point).max(initial=0.0))
    for a_i in range(n_alpha):
        anchors = np.stack(
            [amb.sources[k].center.atoms[idx[k][a_i]] for k in range(K)]
        )
        res = moreau_envelope(np.maximum(lam, 0.0), anchors, loss, support, amb.cost)
        gamma_sum = sum(gammas[k][idx[k][a_i]] for k in range(K))
        if not res.finite:
            normal = np.zeros(n)
            normal[:K] = res.lam_halfspace.normal
            return OracleResponse(
                "halfspace", Halfspace(normal, res.lam_halfspace.offset)
            )
        if res.value > gamma_sum + tol * scale:
            # every feasible (lam', gamma') satisfies
            #   loss(x*) - sum_k lam'_k c(x*, anchor_k) <= sum_k gamma'_{k,alpha_k}
            normal = np.zeros(n)
            x_star = res.maximizer
            costs = amb.cost.norm_of(x_star[None, :] - anchors)
            normal[:K] = costs
            for k in range(K):
                normal[gamma_offsets[k] + idx[k][a_i]] += 1.0
            offset = float(loss(x_star)[0])
            return OracleResponse("halfspace", Halfspace(normal, offset))
    return OracleResponse(INSIDE)


# ---------------------------------------------------------------------------
# Central-cut ellipsoid method on the dual problem.
# ---------------------------------------------------------------------------


@dataclass
class EllipsoidState:
    center: np.ndarray
    shape: np.ndarray  # positive definite
    iteration: int = 0
    best_value: float = np.inf
    log_det_trace: list = field(default_factory=list)

    def check_shape(self):
        try:
            np.linalg.cholesky(self.shape)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("ellipsoid shape matrix lost definiteness") from exc


def feasible_dual_point(amb, loss, support) -> np.ndarray:
    """A concrete dual-feasible point: big multipliers, envelope-sized gammas."""
    K = amb.n_sources
    dual_norm = {"l1": np.inf, "linf": 1}[amb.cost.norm]
    lam_need = max(
        float(np.linalg.norm(loss.a[l], ord=dual_norm)) for l in range(loss.n_pieces)
    )
    lam = np.full(K, lam_need + 1.0)
    counts = amb.atom_counts
    n_alpha = int(np.prod(counts))
    idx = np.array(np.unravel_index(np.arange(n_alpha), counts))
    gamma0 = np.full(counts[0], -np.inf)
    for a_i in range(n_alpha):
        anchors = np.stack(
            [amb.sources[k].center.atoms[idx[k][a_i]] for k in range(K)]
        )
        res = moreau_envelope(lam, anchors, loss, support, amb.cost)
        if not res.finite:
            raise NumericalFailure("envelope infinite at the saturation multipliers")
        j = idx[0][a_i]
        gamma0[j] = max(gamma0[j], res.value)
    gammas = [gamma0] + [np.zeros(nk) for nk in counts[1:]]
    return pack_point(lam, gammas)


def ellipsoid_solve(
    amb: AmbiguitySpec,
    loss: PiecewiseAffineLoss,
    support: Polyhedron,
    radius: float | None = None,
    delta: float = 1e-3,
    max_iter: int | None = None,
    state_trace: EllipsoidState | None = None,
) -> float:
    """Minimize the dual objective to accuracy ``delta`` by central cuts.

    ``radius`` must bound the norm of some near-optimal dual point; when
    omitted it is taken as 10x the norm of a constructed feasible point
    (a documented heuristic, not a guarantee).
    """
    n = dual_dimension(amb)
    c = np.concatenate(
        [amb.radii] + [s.center.probs for s in amb.sources]
    )
    if radius is None:
        x0 = feasible_dual_point(amb, loss, support)
        radius = 10.0 * (1.0 + float(np.linalg.norm(x0)))
    state = state_trace if state_trace is not None else EllipsoidState(
        center=np.zeros(n), shape=np.eye(n)
    )
    state.center = np.zeros(n)
    state.shape = radius**2 * np.eye(n)
    cnorm = float(np.linalg.norm(c))
    if max_iter is None:
        max_iter = int(
            np.ceil(2.0 * n * (n + 1) * (np.log(max(radius, 2.0) * (1 + cnorm) * n / delta) + 5.0))
        )
    unbounded_floor = -1e10 * (1.0 + cnorm) * (1.0 + radius)
    lower = -np.inf
    for _ in range(max_iter):
        resp = separation_oracle(state.center, amb, loss, support)
        if resp.inside:
            val = float(c @ state.center)
            state.best_value = min(state.best_value, val)
            g = c
            if state.best_value < unbounded_floor:
                raise UnboundedObjective(
                    "dual objective keeps falling; the intersection is likely empty"
                )
        else:
            g = -resp.halfspace.normal
        pg = state.shape @ g
        gpg = float(g @ pg)
        if gpg <= 0:
            break
        # a near-optimal point stays inside every ellipsoid, so the center
        # value minus the objective's reach over the ellipsoid bounds it
        lower = max(
            lower, float(c @ state.center) - float(np.sqrt(c @ state.shape @ c))
        )
        if state.best_value - lower <= 0.5 * delta:
            return float(state.best_value)
        step = pg / np.sqrt(gpg)
        state.center = state.center - step / (n + 1)
        state.shape = (n**2 / (n**2 - 1.0)) * (
            state.shape - (2.0 / (n + 1)) * np.outer(step, step)
        )
        state.iteration += 1
        state.log_det_trace.append(float(np.linalg.slogdet(state.shape)[1]))
        state.check_shape()
    if np.isfinite(state.best_value) and state.best_value - lower <= 0.5 * delta:
        return float(state.best_value)
    raise IterationBudgetExceeded(
        "no delta-certified value within the iteration budget; "
        "radius may be too small or delta too tight"
    )
