"""Sparse linear programs with certified, deterministic solutions.

Models are stored in row-sense form

    min/max  c'x   s.t.  A x {<=,==,>=} b,   lb <= x <= ub,

with the matrix held as sparse triplets (duplicates summed at build time).
Two interchangeable engines sit behind :func:`solve_lp`:

* ``"simplex"`` -- a self-contained two-phase revised simplex on the
  standardized problem, with Bland's rule engaged after a stall counter.
  It natively produces primal rays (unbounded) and Farkas dual rays
  (infeasible).
* ``"highs"`` -- scipy's HiGHS backend for instances beyond what a dense
  basis inverse can carry.  Certificates for abnormal statuses are
  recovered by re-running the simplex engine, which bounds the size of
  instances whose infeasibility/unboundedness can be certified.

``"auto"`` picks the simplex for desk-size inputs and HiGHS above that.
Dual values follow the shadow-price convention: ``duals[i]`` is the
derivative of the optimal value with respect to ``rhs[i]`` in the model's
own sense, so for a minimization ``<=`` rows carry nonpositive duals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import NumericalFailure, SizeExceeded

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-7
STALL_LIMIT = 50  # degenerate pivots before Bland's rule engages

# Engine envelopes.  Inputs beyond the HiGHS envelope raise SizeExceeded;
# the simplex envelope bounds what the dense basis inverse can carry.
SIMPLEX_MAX_ROWS = 2_000
SIMPLEX_MAX_COLS = 20_000
HIGHS_MAX_ROWS = 300_000
HIGHS_MAX_COLS = 2_000_000
AUTO_SIMPLEX_ROWS = 200
AUTO_SIMPLEX_COLS = 2_000

LESS, EQUAL, GREATER = "<=", "==", ">="
_SENSES = (LESS, EQUAL, GREATER)


@dataclass(frozen=True)
class LpModel:
    """Immutable sparse LP in row-sense form."""

    sense: str  # "min" | "max"
    c: np.ndarray
    a: sp.csr_matrix
    row_sense: np.ndarray  # array of "<=", "==", ">="
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    @property
    def nrows(self) -> int:
        return self.a.shape[0]

    @property
    def ncols(self) -> int:
        return self.a.shape[1]

    @staticmethod
    def build(sense, c, triplets, row_sense, rhs, lb=None, ub=None, ncols=None):
        """Assemble a model from triplets ``(row, col, value)``.

        Duplicate ``(row, col)`` entries are summed.  Bounds default to
        ``x >= 0``; pass ``-np.inf``/``np.inf`` entries to free them.
        """
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        c = np.asarray(c, dtype=float).copy()
        rhs = np.asarray(rhs, dtype=float).copy()
        n = len(c) if ncols is None else int(ncols)
        m = len(rhs)
        if not np.all(np.isfinite(c)):
            raise ValueError("objective coefficients must be finite")
        if not np.all(np.isfinite(rhs)):
            raise ValueError("right-hand sides must be finite")
        row_sense = np.asarray(row_sense, dtype="<U2").copy()
        if row_sense.shape != (m,) or not np.all(np.isin(row_sense, _SENSES)):
            raise ValueError("row senses must be one of <=, ==, >=")
        if isinstance(triplets, tuple) and len(triplets) == 3:
            rows, cols, vals = triplets
        else:
            trip = list(triplets)
            rows = [t[0] for t in trip]
            cols = [t[1] for t in trip]
            vals = [t[2] for t in trip]
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        if rows.size and (rows.min() < 0 or rows.max() >= m):
            raise ValueError("triplet row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise ValueError("triplet column index out of range")
        if not np.all(np.isfinite(vals)):
            raise ValueError("triplet values must be finite")
        a = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
        a.sum_duplicates()
        lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float).copy()
        ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float).copy()
        if np.any(lb > ub + 1e-15):
            raise ValueError("lower bound exceeds upper bound")
        for arr in (c, rhs, lb, ub, row_sense):
            arr.setflags(write=False)
        return LpModel(sense, c, a, row_sense, rhs, lb, ub)

    def with_fixed(self, indices, values) -> "LpModel":
        """Copy of the model with the given variables pinned to values."""
        lb = np.array(self.lb)
        ub = np.array(self.ub)
        lb[list(indices)] = values
        ub[list(indices)] = values
        lb.setflags(write=False)
        ub.setflags(write=False)
        return replace(self, lb=lb, ub=ub)

    def dump_triplets(self) -> str:
        """Plain-text dump (debugging aid, not a stability contract)."""
        coo = self.a.tocoo()
        lines = [f"sense {self.sense} rows {self.nrows} cols {self.ncols}"]
        lines.append("obj " + " ".join(repr(float(v)) for v in self.c))
        lines.append("rhs " + " ".join(repr(float(v)) for v in self.rhs))
        lines.append("rowsense " + " ".join(self.row_sense))
        lines.append("lb " + " ".join(repr(float(v)) for v in self.lb))
        lines.append("ub " + " ".join(repr(float(v)) for v in self.ub))
        for i, j, v in zip(coo.row, coo.col, coo.data):
            lines.append(f"{i} {j} {float(v)!r}")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    value: float | None = None
    dual_objective: float | None = None
    primal_ray: np.ndarray | None = None
    dual_ray: np.ndarray | None = None
    engine: str = ""
    iterations: int = 0


@dataclass
class EnumerationResult:
    solution: LpSolution
    assignment: np.ndarray
    support: tuple
    subproblems: int


# ---------------------------------------------------------------------------
# Standardization:  min c's,  A_std s = b_std,  s >= 0.
# ---------------------------------------------------------------------------

_SHIFT, _NEGSHIFT, _SPLIT, _FIXED = 0, 1, 2, 3


@dataclass
class _Standardized:
    a: sp.csc_matrix
    b: np.ndarray
    c: np.ndarray
    const: float
    minimize: bool
    kind: np.ndarray  # per original variable
    shift: np.ndarray
    col_of: np.ndarray  # first std column of variable, -1 for fixed
    flip: np.ndarray  # +-1 per std row (orig rows first, then bound rows)
    n_orig_rows: int

    def _unmap(self, s: np.ndarray, with_shift: bool) -> np.ndarray:
        x = np.array(self.shift) if with_shift else np.zeros_like(self.shift)
        if not with_shift:
            x[self.kind == _FIXED] = 0.0
        for kinds, sign in ((_SHIFT, 1.0), (_NEGSHIFT, -1.0)):
            idx = np.where(self.kind == kinds)[0]
            x[idx] += sign * s[self.col_of[idx]]
        idx = np.where(self.kind == _SPLIT)[0]
        x[idx] += s[self.col_of[idx]] - s[self.col_of[idx] + 1]
        return x

    def x_back(self, s: np.ndarray) -> np.ndarray:
        return self._unmap(s, with_shift=True)

    def ray_back(self, s: np.ndarray) -> np.ndarray:
        return self._unmap(s, with_shift=False)

    def duals_back(self, y: np.ndarray) -> np.ndarray:
        out = y[: self.n_orig_rows] * self.flip[: self.n_orig_rows]
        return out if self.minimize else -out


def _standardize(model: LpModel) -> _Standardized:
    m, n = model.nrows, model.ncols
    cmin = model.c if model.sense == "min" else -model.c
    kind = np.empty(n, dtype=np.int64)
    shift = np.zeros(n)
    lb, ub = model.lb, model.ub
    for j in range(n):
        if lb[j] == ub[j]:
            kind[j], shift[j] = _FIXED, lb[j]
        elif np.isfinite(lb[j]):
            kind[j], shift[j] = _SHIFT, lb[j]
        elif np.isfinite(ub[j]):
            kind[j], shift[j] = _NEGSHIFT, ub[j]
        else:
            kind[j] = _SPLIT
    width = np.where(kind == _SPLIT, 2, np.where(kind == _FIXED, 0, 1))
    col_of = np.concatenate(([0], np.cumsum(width)))[:-1]
    col_of[kind == _FIXED] = -1
    nvar_cols = int(width.sum())

    bounded = np.where((kind == _SHIFT) & np.isfinite(ub))[0]
    n_bound = len(bounded)
    acoo = model.a.tocoo()
    keep = kind[acoo.col] != _FIXED
    r0, c0, v0 = acoo.row[keep], acoo.col[keep], acoo.data[keep]
    split0 = kind[c0] == _SPLIT
    sign0 = np.where(kind[c0] == _NEGSHIFT, -1.0, 1.0)
    rows = [r0, r0[split0]]
    cols = [col_of[c0], col_of[c0[split0]] + 1]
    vals = [v0 * sign0, -v0[split0]]
    # bound rows s_j <= ub - lb for two-sided variables
    if n_bound:
        rows.append(np.arange(m, m + n_bound))
        cols.append(col_of[bounded])
        vals.append(np.ones(n_bound))
    # slacks: one per <=/>= original row and one per bound row
    ineq = np.where(model.row_sense != EQUAL)[0]
    slack_rows = np.concatenate([ineq, np.arange(m, m + n_bound)]).astype(np.int64)
    slack_sign = np.concatenate(
        [np.where(model.row_sense[ineq] == LESS, 1.0, -1.0), np.ones(n_bound)]
    )
    n_slack = len(slack_rows)
    rows.append(slack_rows)
    cols.append(nvar_cols + np.arange(n_slack))
    vals.append(slack_sign)

    b = np.concatenate([model.rhs - model.a @ shift, ub[bounded] - lb[bounded]])
    flip = np.where(b < 0, -1.0, 1.0)
    b = b * flip
    rows_all = np.concatenate(rows)
    vals_all = np.concatenate(vals) * flip[rows_all]
    a_std = sp.coo_matrix(
        (vals_all, (rows_all, np.concatenate(cols))),
        shape=(m + n_bound, nvar_cols + n_slack),
    ).tocsc()
    c_std = np.zeros(nvar_cols + n_slack)
    for kinds, sign in ((_SHIFT, 1.0), (_NEGSHIFT, -1.0)):
        idx = np.where(kind == kinds)[0]
        c_std[col_of[idx]] = sign * cmin[idx]
    idx = np.where(kind == _SPLIT)[0]
    c_std[col_of[idx]] = cmin[idx]
    c_std[col_of[idx] + 1] = -cmin[idx]
    const = float(cmin @ shift)
    return _Standardized(
        a_std, b, c_std, const, model.sense == "min", kind, shift, col_of, flip, m
    )


# ---------------------------------------------------------------------------
# Two-phase revised simplex on the standardized problem.
# ---------------------------------------------------------------------------


class _Simplex:
    """Revised simplex with a dense, eta-updated basis inverse.

    Artificial variables (columns n..n+m-1, an implicit identity) start
    basic in phase 1 and are barred from re-entering once they leave.
    """

    REFACTOR_EVERY = 150

    def __init__(self, a: sp.csc_matrix, b: np.ndarray, c: np.ndarray):
        self.a = a
        self.b = b
        self.c = c
        self.m, self.n = a.shape
        self.iterations = 0
        self.max_iter = max(20_000, 60 * (self.m + self.n))
        self.basis = np.arange(self.n, self.n + self.m)
        self.binv = np.eye(self.m)
        self.xb = np.array(b, dtype=float)
        self.in_basis = np.zeros(self.n, dtype=bool)

    def column(self, j: int) -> np.ndarray:
        if j >= self.n:  # artificial
            e = np.zeros(self.m)
            e[j - self.n] = 1.0
            return e
        lo, hi = self.a.indptr[j], self.a.indptr[j + 1]
        col = np.zeros(self.m)
        col[self.a.indices[lo:hi]] = self.a.data[lo:hi]
        return col

    def refactor(self):
        bmat = np.empty((self.m, self.m))
        for pos, j in enumerate(self.basis):
            bmat[:, pos] = self.column(j)
        try:
            self.binv = np.linalg.solve(bmat, np.eye(self.m))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis during refactorization") from exc
        self.xb = np.maximum(self.binv @ self.b, 0.0)

    def _cost_vec(self, cost):
        cb = np.where(
            self.basis < self.n, cost[np.minimum(self.basis, self.n - 1)], self.art_cost
        )
        return cb

    def pivot(self, enter: int, leave_pos: int, d: np.ndarray, theta: float):
        old = self.basis[leave_pos]
        if old < self.n:
            self.in_basis[old] = False
        piv = d[leave_pos]
        self.xb -= theta * d
        self.xb[leave_pos] = theta
        np.clip(self.xb, 0.0, None, out=self.xb)
        row = self.binv[leave_pos] / piv
        self.binv -= np.outer(d, row)
        self.binv[leave_pos] = row
        self.basis[leave_pos] = enter
        self.in_basis[enter] = True
        self.iterations += 1

    def run_phase(self, cost: np.ndarray, art_cost: float):
        """Pivot to optimality for ``cost`` (artificials cost ``art_cost``).

        Returns ``("optimal", y)`` or ``("unbounded", enter, d)``.
        """
        stall = 0
        bland = False
        since_refactor = 0
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalFailure("simplex iteration limit exceeded")
            cb = np.where(self.basis < self.n, cost[self.basis % self.n], art_cost)
            # basis % n is a safe index; the where() picks art_cost otherwise
            y = cb @ self.binv
            z = cost - self.a.T @ y
            cand = (~self.in_basis) & (z < -PIVOT_TOL)
            idx = np.where(cand)[0]
            if idx.size == 0:
                return "optimal", y
            enter = int(idx[0]) if bland else int(idx[np.argmin(z[idx])])
            d = self.binv @ self.column(enter)
            pos = np.where(d > PIVOT_TOL)[0]
            if pos.size == 0:
                return "unbounded", enter, d
            ratios = self.xb[pos] / d[pos]
            theta = ratios.min()
            ties = pos[ratios <= theta + 1e-12]
            if bland:
                leave_pos = int(ties[np.argmin(self.basis[ties])])
            else:
                leave_pos = int(ties[np.argmax(d[ties])])
            theta = self.xb[leave_pos] / d[leave_pos]
            if theta < 1e-11 * (1.0 + abs(theta)):
                stall += 1
                if stall >= STALL_LIMIT:
                    bland = True
            else:
                stall = 0
                bland = False
            self.pivot(enter, leave_pos, d, theta)
            since_refactor += 1
            if since_refactor >= self.REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0

    def solve(self):
        m, n = self.m, self.n
        res = self.run_phase(np.zeros(n), art_cost=1.0)
        if res[0] != "optimal":
            raise NumericalFailure("phase 1 reported unbounded")
        artificial = self.basis >= n
        phase1 = float(self.xb[artificial].sum())
        if phase1 > FEAS_TOL * (1.0 + float(np.abs(self.b).sum())):
            return "infeasible", res[1]
        self.pivot_out_artificials()
        res = self.run_phase(self.c, art_cost=0.0)
        if res[0] == "unbounded":
            _, enter, d = res
            ray = np.zeros(n)
            real = self.basis < n
            ray[self.basis[real]] = np.maximum(-d[real], 0.0)
            ray[enter] = 1.0
            return "unbounded", ray
        y = res[1]
        x = np.zeros(n)
        real = self.basis < n
        x[self.basis[real]] = self.xb[real]
        return "optimal", (x, y)

    def pivot_out_artificials(self):
        for pos in range(self.m):
            if self.basis[pos] < self.n:
                continue
            row = np.asarray(self.binv[pos] @ self.a).ravel()
            cand = np.where((~self.in_basis) & (np.abs(row) > PIVOT_TOL))[0]
            if cand.size == 0:
                continue  # redundant row; artificial stays basic at zero
            enter = int(cand[0])
            d = self.binv @ self.column(enter)
            self.pivot(enter, pos, d, 0.0)


def _solve_simplex(model: LpModel) -> LpSolution:
    std = _standardize(model)
    eng = _Simplex(std.a, std.b, std.c)
    status, payload = eng.solve()
    if status == "infeasible":
        y = payload
        dual_ray = y[: std.n_orig_rows] * std.flip[: std.n_orig_rows]
        return LpSolution(
            status="infeasible", dual_ray=dual_ray, engine="simplex",
            iterations=eng.iterations,
        )
    if status == "unbounded":
        ray = std.ray_back(payload)
        return LpSolution(
            status="unbounded", primal_ray=ray, engine="simplex",
            iterations=eng.iterations,
        )
    s, y = payload
    x = std.x_back(s)
    value = float(model.c @ x)
    duals = std.duals_back(y)
    dual_std = float(y @ std.b) + std.const
    dual_objective = dual_std if std.minimize else -dual_std
    sol = LpSolution(
        status="optimal", x=x, duals=duals, value=value,
        dual_objective=dual_objective, engine="simplex",
        iterations=eng.iterations,
    )
    _verify_optimal(model, sol)
    return sol


# ---------------------------------------------------------------------------
# HiGHS engine.
# ---------------------------------------------------------------------------


def _solve_highs(model: LpModel) -> LpSolution:
    minimize = model.sense == "min"
    c = model.c if minimize else -model.c
    le = model.row_sense == LESS
    ge = model.row_sense == GREATER
    eq = model.row_sense == EQUAL
    has_ub = bool(le.any() or ge.any())
    a_ub = sp.vstack([model.a[le], -model.a[ge]]).tocsr() if has_ub else None
    b_ub = np.concatenate([model.rhs[le], -model.rhs[ge]]) if has_ub else None
    a_eq = model.a[eq] if eq.any() else None
    b_eq = model.rhs[eq] if a_eq is not None else None
    bounds = [
        (None if lo == -np.inf else lo, None if hi == np.inf else hi)
        for lo, hi in zip(model.lb, model.ub)
    ]
    res = linprog(
        c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    if res.status in (2, 3):
        status = "infeasible" if res.status == 2 else "unbounded"
        if model.nrows <= SIMPLEX_MAX_ROWS and model.ncols <= SIMPLEX_MAX_COLS:
            return _solve_simplex(model)  # recover certificates
        raise NumericalFailure(
            f"LP is {status} but certificate recovery exceeds the simplex envelope"
        )
    if res.status != 0:
        raise NumericalFailure(f"HiGHS terminated with status {res.status}")
    x = res.x
    duals = np.zeros(model.nrows)
    dobj = 0.0
    if has_ub:
        mub = res.ineqlin.marginals
        nle = int(le.sum())
        duals[le] = mub[:nle]
        duals[ge] = -mub[nle:]
        dobj += float(b_ub @ mub)
    if a_eq is not None:
        duals[eq] = res.eqlin.marginals
        dobj += float(b_eq @ res.eqlin.marginals)
    lo = np.where(np.isfinite(model.lb), model.lb, 0.0)
    hi = np.where(np.isfinite(model.ub), model.ub, 0.0)
    dobj += float(lo @ res.lower.marginals + hi @ res.upper.marginals)
    if not minimize:
        duals = -duals
        dobj = -dobj
    value = float(model.c @ x)
    sol = LpSolution(
        status="optimal", x=x, duals=duals, value=value, dual_objective=dobj,
        engine="highs", iterations=int(np.atleast_1d(getattr(res, "nit", 0))[0]),
    )
    _verify_optimal(model, sol)
    return sol


# ---------------------------------------------------------------------------
# Public API.
# ---------------------------------------------------------------------------


def _verify_optimal(model: LpModel, sol: LpSolution):
    scale = 1.0 + float(np.abs(model.rhs).max(initial=0.0))
    resid = primal_residual(model, sol.x)
    if resid > FEAS_TOL * scale:
        raise NumericalFailure(f"primal residual {resid:.3e} above tolerance")
    gap = abs(sol.value - sol.dual_objective)
    if gap > OPT_TOL * (1.0 + abs(sol.value)) * max(scale, 1.0):
        raise NumericalFailure(f"duality gap {gap:.3e} above tolerance")


def primal_residual(model: LpModel, x: np.ndarray) -> float:
    """Max violation of rows and bounds at ``x``."""
    ax = model.a @ x
    le = model.row_sense == LESS
    ge = model.row_sense == GREATER
    eq = model.row_sense == EQUAL
    r = max(
        np.maximum(ax[le] - model.rhs[le], 0.0).max(initial=0.0),
        np.maximum(model.rhs[ge] - ax[ge], 0.0).max(initial=0.0),
        np.abs(ax[eq] - model.rhs[eq]).max(initial=0.0),
    )
    lo = np.where(np.isfinite(model.lb), model.lb, -np.inf)
    hi = np.where(np.isfinite(model.ub), model.ub, np.inf)
    bound = max(
        np.maximum(lo - x, 0.0).max(initial=0.0),
        np.maximum(x - hi, 0.0).max(initial=0.0),
    )
    return float(max(r, bound))


def farkas_violation(model: LpModel, y: np.ndarray) -> float:
    """How strongly ``y`` certifies infeasibility (positive == valid).

    A valid dual ray has ``y <= 0`` on ``<=`` rows and ``y >= 0`` on ``>=``
    rows; every feasible x would satisfy ``(A'y)'x >= y'b``, so the
    certificate holds when that inequality fails across the whole bound box.
    """
    tol = FEAS_TOL * (1.0 + float(np.abs(y).max(initial=0.0)))
    if np.any(y[model.row_sense == LESS] > tol):
        return -np.inf
    if np.any(y[model.row_sense == GREATER] < -tol):
        return -np.inf
    r = model.a.T @ y
    with np.errstate(invalid="ignore"):
        best = np.where(r > 0, r * model.ub, r * model.lb)
    best[r == 0] = 0.0
    sup = float(np.sum(best))
    if not np.isfinite(sup):
        return -np.inf
    return float(y @ model.rhs) - sup


def ray_violation(model: LpModel, ray: np.ndarray) -> float:
    """Residual of a primal ray against the recession cone (0 == clean)."""
    ar = model.a @ ray
    le = model.row_sense == LESS
    ge = model.row_sense == GREATER
    eq = model.row_sense == EQUAL
    out = max(
        np.maximum(ar[le], 0.0).max(initial=0.0),
        np.maximum(-ar[ge], 0.0).max(initial=0.0),
        np.abs(ar[eq]).max(initial=0.0),
    )
    lo_block = np.isfinite(model.lb) & (ray < 0)
    hi_block = np.isfinite(model.ub) & (ray > 0)
    bound = max(
        np.abs(ray[lo_block]).max(initial=0.0),
        np.abs(ray[hi_block]).max(initial=0.0),
    )
    return float(max(out, bound))


def solve_lp(model: LpModel, engine: str = "auto") -> LpSolution:
    """Solve the model, returning a certified :class:`LpSolution`."""
    m, n = model.nrows, model.ncols
    if engine == "auto":
        engine = (
            "simplex" if (m <= AUTO_SIMPLEX_ROWS and n <= AUTO_SIMPLEX_COLS) else "highs"
        )
    if engine == "simplex":
        if m > SIMPLEX_MAX_ROWS or n > SIMPLEX_MAX_COLS:
            raise SizeExceeded(
                f"{m}x{n} exceeds the simplex envelope "
                f"{SIMPLEX_MAX_ROWS}x{SIMPLEX_MAX_COLS}"
            )
        return _solve_simplex(model)
    if engine == "highs":
        if m > HIGHS_MAX_ROWS or n > HIGHS_MAX_COLS:
            raise SizeExceeded(
                f"{m}x{n} exceeds the HiGHS envelope "
                f"{HIGHS_MAX_ROWS}x{HIGHS_MAX_COLS}"
            )
        return _solve_highs(model)
    raise ValueError(f"unknown engine {engine!r}")


def solve_binary_by_enumeration(
    model: LpModel,
    binary_vars,
    cardinality_cap: int,
    enumeration_budget: int = 200_000,
    engine: str = "auto",
) -> EnumerationResult:
    """Exhaustively search binary supports of size <= ``cardinality_cap``.

    Every binary variable is pinned to 1 on the candidate support and 0 off
    it; the remaining continuous problem goes through :func:`solve_lp`.  The
    best optimal subproblem wins; ties keep the first support in enumeration
    order (sizes ascending, indices lexicographic).
    """
    binary_vars = sorted(int(j) for j in binary_vars)
    nb = len(binary_vars)
    pos_of = {j: i for i, j in enumerate(binary_vars)}
    if nb > 25:
        raise SizeExceeded(f"{nb} binary variables exceeds the desk-scale cap of 25")
    if cardinality_cap > nb:
        raise ValueError("cardinality_cap exceeds the number of binary variables")
    total = sum(_comb(nb, s) for s in range(cardinality_cap + 1))
    if total > enumeration_budget:
        raise SizeExceeded(f"{total} supports exceed the enumeration budget")
    best = None
    solved = 0
    sign = 1.0 if model.sense == "min" else -1.0
    for size in range(cardinality_cap + 1):
        for support in itertools.combinations(binary_vars, size):
            vals = np.zeros(nb)
            vals[[pos_of[j] for j in support]] = 1.0
            sol = solve_lp(model.with_fixed(binary_vars, vals), engine=engine)
            solved += 1
            if sol.status != "optimal":
                continue
            if best is None or sign * sol.value < sign * best[0].value - 1e-12 * (
                1.0 + abs(sol.value)
            ):
                best = (sol, vals, support)
    if best is None:
        raise NumericalFailure("no binary support yielded a feasible subproblem")
    sol, vals, support = best
    return EnumerationResult(sol, vals, support, solved)


def _comb(n, k):
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out
