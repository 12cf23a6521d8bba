"""Two-phase revised simplex for bounded-variable LPs.

Internals: rows become equalities by appending one slack column per row
(bounds encode the sense), the basis is held as a sparse LU factorization
with product-form eta updates, and a refactorization happens every
``refactor_every`` pivots. Phase 1 minimizes the total bound violation of
basic variables starting from the slack crash basis (the composite variant
of the textbook artificial phase); phase 2 prices the real objective.

Pricing is Dantzig (largest reduced-cost magnitude, lowest index on ties)
and switches to Bland's rule after 5*(rows+cols) consecutive pivots without
objective improvement, reverting once progress resumes. Everything is
deterministic: identical inputs give identical pivot sequences, iteration
counts, and output bits.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.sparse import hstack, identity
from scipy.sparse.linalg import splu

from ..errors import IntegralityPresent, NumericalBreakdown
from . import _kernels
from .standard_form import (
    GE, INFEASIBLE, LE, OPTIMAL, RANGE, Solution, SolverSettings, StandardFormMP, UNBOUNDED,
)

BASIC, AT_LB, AT_UB, FREE = 0, 1, 2, 3

_PIVOT_ZERO = 1e-7
_RATIO_TIE = 1e-12
_STALL_EPS = 1e-12
_MAX_ITER = 2_000_000


class SimplexCore:
    """Reusable simplex state over one equality-form constraint matrix.

    Bounds are mutable so a branch-and-bound driver can tighten columns and
    re-solve warm from a parent basis without rebuilding the matrix.
    """

    def __init__(self, mp: StandardFormMP, settings: SolverSettings):
        arrays = mp.arrays()
        self.m = mp.n_rows
        self.n_struct = mp.n_cols
        A = mp.matrix()
        slack_lb = np.zeros(self.m)
        slack_ub = np.zeros(self.m)
        for i, sense in enumerate(mp.senses):
            if sense == LE:
                slack_lb[i], slack_ub[i] = 0.0, np.inf
            elif sense == GE:
                slack_lb[i], slack_ub[i] = -np.inf, 0.0
            elif sense == RANGE:
                # a'x + s = hi with s in [0, hi - lo]
                slack_lb[i], slack_ub[i] = 0.0, mp.rhs[i] - mp.range_lo[i]
            # EQ keeps [0, 0]
        if self.m:
            self.A = hstack([A, identity(self.m, format="csc")], format="csc")
        else:
            self.A = A.tocsc()
        self.AT = self.A.T.tocsr()
        self.N = self.n_struct + self.m
        self.c = np.concatenate([arrays["obj"], np.zeros(self.m)])
        self.lb = np.concatenate([arrays["lb"], slack_lb])
        self.ub = np.concatenate([arrays["ub"], slack_ub])
        self.b = arrays["rhs"]
        self.settings = settings
        self.iterations = 0
        self._repairs = 0

        self._lu_parts = None  # (L arrays, U arrays, perm_r, perm_c)
        cap = settings.refactor_every + 1
        self._eta_n = 0
        self._eta_r = np.empty(cap, dtype=np.int64)
        self._eta_piv = np.empty(cap)
        self._eta_ptr = np.zeros(cap + 1, dtype=np.int64)
        self._eta_idx = np.empty(cap * max(self.m, 1), dtype=np.int64)
        self._eta_val = np.empty(cap * max(self.m, 1))
        self.basis = np.empty(0, dtype=np.int64)
        self.status = np.empty(0, dtype=np.int8)
        self.x = np.empty(0)

    # -- bounds management for branch-and-bound -------------------------------

    def set_col_bounds(self, col: int, lb: float, ub: float) -> None:
        self.lb[col] = lb
        self.ub[col] = ub

    def snapshot_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lb.copy(), self.ub.copy()

    def restore_bounds(self, snap: tuple[np.ndarray, np.ndarray]) -> None:
        self.lb[:] = snap[0]
        self.ub[:] = snap[1]

    # -- linear algebra --------------------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[lo:hi]] = self.A.data[lo:hi]
        return col

    def _refactor(self) -> None:
        try:
            lu = splu(self.A[:, self.basis].tocsc(), permc_spec="COLAMD")
        except RuntimeError:
            self._reset_to_slack_basis()
            lu = splu(self.A[:, self.basis].tocsc(), permc_spec="COLAMD")
        L = lu.L.tocsc()
        U = lu.U.tocsc()
        L.sort_indices()
        U.sort_indices()
        self._lu_parts = (
            L.indptr, L.indices, L.data,
            U.indptr, U.indices, U.data,
            lu.perm_r.astype(np.int64), lu.perm_c.astype(np.int64),
        )
        self._eta_n = 0
        self._eta_ptr[0] = 0
        # Recompute basic values from scratch to purge accumulated drift.
        x_nb = self.x.copy()
        x_nb[self.basis] = 0.0
        rhs = self.b - self.A.dot(x_nb)
        self.x[self.basis] = self._lu_solve(rhs)

    def _lu_solve(self, v: np.ndarray) -> np.ndarray:
        lp, li, ld, up, ui, ud, pr, pc = self._lu_parts
        w = np.empty(self.m)
        w[pr] = v
        _kernels.lower_unit_csc(lp, li, ld, w)
        _kernels.upper_csc(up, ui, ud, w)
        return w[pc]

    def _lu_solve_t(self, v: np.ndarray) -> np.ndarray:
        lp, li, ld, up, ui, ud, pr, pc = self._lu_parts
        w = np.empty(self.m)
        w[pc] = v
        _kernels.upper_transpose_csc(up, ui, ud, w)
        _kernels.lower_unit_transpose_csc(lp, li, ld, w)
        return w[pr]

    def _reset_to_slack_basis(self) -> None:
        """Repair attempt for a numerically singular basis.

        Every structural column drops to its nearest bound and the slack
        identity takes over; the phase logic then restores feasibility.
        """
        self._repairs += 1
        if self._repairs > 3:
            raise NumericalBreakdown("singular basis beyond repair attempts")
        for j in map(int, self.basis):
            if j >= self.n_struct:
                continue
            lo, hi = self.lb[j], self.ub[j]
            if np.isinf(lo) and np.isinf(hi):
                self.status[j] = FREE
                self.x[j] = 0.0
            elif np.isinf(lo):
                self.status[j] = AT_UB
                self.x[j] = hi
            elif np.isinf(hi) or abs(self.x[j] - lo) <= abs(self.x[j] - hi):
                self.status[j] = AT_LB
                self.x[j] = lo
            else:
                self.status[j] = AT_UB
                self.x[j] = hi
        self.basis = np.arange(self.n_struct, self.N, dtype=np.int64)
        self.status[self.basis] = BASIC

    def _push_eta(self, r: int, xi: np.ndarray) -> None:
        k = self._eta_n
        idx = np.flatnonzero(np.abs(xi) > 1e-14)
        start = self._eta_ptr[k]
        end = start + len(idx)
        self._eta_r[k] = r
        self._eta_piv[k] = xi[r]
        self._eta_idx[start:end] = idx
        self._eta_val[start:end] = xi[idx]
        self._eta_ptr[k + 1] = end
        self._eta_n = k + 1

    def _ftran(self, v: np.ndarray) -> np.ndarray:
        w = self._lu_solve(v)
        n = self._eta_n
        if n:
            _kernels.apply_etas_forward(
                w, self._eta_r[:n], self._eta_piv[:n], self._eta_ptr[:n + 1],
                self._eta_idx, self._eta_val)
        return w

    def _btran(self, v: np.ndarray) -> np.ndarray:
        w = v.copy()
        n = self._eta_n
        if n:
            _kernels.apply_etas_transpose(
                w, self._eta_r[:n], self._eta_piv[:n], self._eta_ptr[:n + 1],
                self._eta_idx, self._eta_val)
        return self._lu_solve_t(w)

    # -- solve -------------------------------------------------------------------

    def solve_cold(self) -> str:
        """Slack crash basis, then the two phases."""
        self._repairs = 0
        self.status = np.full(self.N, AT_LB, dtype=np.int8)
        self.x = np.zeros(self.N)
        for j in range(self.n_struct):
            lo, hi = self.lb[j], self.ub[j]
            if np.isinf(lo) and np.isinf(hi):
                self.status[j] = FREE
            elif np.isinf(lo):
                self.status[j] = AT_UB
                self.x[j] = hi
            elif np.isinf(hi) or abs(lo) <= abs(hi):
                self.status[j] = AT_LB
                self.x[j] = lo
            else:
                self.status[j] = AT_UB
                self.x[j] = hi
        self.basis = np.arange(self.n_struct, self.N, dtype=np.int64)
        self.status[self.basis] = BASIC
        return self._run_phases()

    def solve_warm(self, basis: np.ndarray, status: np.ndarray) -> str:
        """Re-solve after bound changes, starting from a previous basis."""
        self._repairs = 0
        self.basis = basis.copy()
        self.status = status.copy()
        self.x = np.zeros(self.N)
        # A nonbasic column whose stored bound vanished snaps to the nearest
        # bound that still exists (branching only ever tightens, so this is
        # a defensive path).
        at_lb = self.status == AT_LB
        at_ub = self.status == AT_UB
        lb_bad = at_lb & ~np.isfinite(self.lb)
        ub_bad = at_ub & ~np.isfinite(self.ub)
        self.status[lb_bad & np.isfinite(self.ub)] = AT_UB
        self.status[ub_bad & np.isfinite(self.lb)] = AT_LB
        self.status[(lb_bad | ub_bad) & ~np.isfinite(self.lb) & ~np.isfinite(self.ub)] = FREE
        sel = self.status == AT_LB
        self.x[sel] = self.lb[sel]
        sel = self.status == AT_UB
        self.x[sel] = self.ub[sel]
        return self._run_phases()

    def _run_phases(self) -> str:
        if self.m == 0:
            return self._solve_unconstrained()
        self._refactor()
        status = self._iterate(phase=1)
        if status != OPTIMAL:
            return status
        # Harris steps tolerate transient bound overshoot, so polish until a
        # freshly refactored basis is clean at the strict tolerance.
        for _ in range(6):
            status = self._iterate(phase=2)
            if status != OPTIMAL:
                return status
            self._refactor()
            xb = self.x[self.basis]
            drift = np.maximum(
                np.maximum(self.lb[self.basis] - xb, xb - self.ub[self.basis]), 0.0)
            if float(drift.max(initial=0.0)) <= self.settings.feasibility_tol:
                return OPTIMAL
            status = self._iterate(phase=1)
            if status != OPTIMAL:
                return status
        return OPTIMAL

    def _solve_unconstrained(self) -> str:
        for j in range(self.N):
            cj = self.c[j]
            if cj > 0:
                if not np.isfinite(self.lb[j]):
                    return UNBOUNDED
                self.x[j] = self.lb[j]
            elif cj < 0:
                if not np.isfinite(self.ub[j]):
                    return UNBOUNDED
                self.x[j] = self.ub[j]
            else:
                self.x[j] = self.lb[j] if np.isfinite(self.lb[j]) else (
                    self.ub[j] if np.isfinite(self.ub[j]) else 0.0)
        return OPTIMAL

    def _iterate(self, phase: int) -> str:
        feas_tol = self.settings.feasibility_tol
        opt_tol = self.settings.optimality_tol
        stall_limit = 5 * (self.m + self.N)
        devex = self.settings.pivot_rule == "devex_bland"
        use_bland = False
        stall = 0
        best_obj = np.inf
        repair_budget = 5
        span = self.ub - self.lb
        enterable = span > 0.0
        zeros_n = np.zeros(self.N)
        weights = np.ones(self.N)  # devex reference weights

        d: np.ndarray | None = None  # maintained reduced costs (phase 2)

        while True:
            if self.iterations > _MAX_ITER:
                raise NumericalBreakdown("iteration limit exceeded")

            if phase == 1:
                xb = self.x[self.basis]
                lo_b = self.lb[self.basis]
                hi_b = self.ub[self.basis]
                below = xb < lo_b - feas_tol
                above = xb > hi_b + feas_tol
                if not below.any() and not above.any():
                    self.x[self.basis] = np.clip(xb, lo_b, hi_b)
                    return OPTIMAL
                c_b = np.where(above, 1.0, 0.0) - np.where(below, 1.0, 0.0)
                obj = float((lo_b - xb)[below].sum() + (xb - hi_b)[above].sum())
                # Phase-1 costs move with the violated set: price in full.
                d = zeros_n - self.AT.dot(self._btran(c_b))
            else:
                obj = float(self.c @ self.x)
                if d is None:
                    d = self.c - self.AT.dot(self._btran(self.c[self.basis]))

            if obj < best_obj - _STALL_EPS * (1.0 + abs(best_obj)):
                best_obj = obj
                stall = 0
                use_bland = False
            else:
                stall += 1
                if stall > stall_limit:
                    use_bland = True

            nb = self.status != BASIC
            elig = nb & enterable & (
                ((self.status == AT_LB) & (d < -opt_tol))
                | ((self.status == AT_UB) & (d > opt_tol))
                | ((self.status == FREE) & (np.abs(d) > opt_tol))
            )
            if not elig.any():
                return INFEASIBLE if phase == 1 else OPTIMAL

            if use_bland:
                q = int(np.flatnonzero(elig)[0])
            elif devex:
                q = int(np.argmax(np.where(elig, d * d / weights, -1.0)))
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))

            direction = 1.0
            if self.status[q] == AT_UB or (self.status[q] == FREE and d[q] > 0):
                direction = -1.0

            xi = self._ftran(self._column(q))
            delta = direction * xi
            t_block, r, hit = self._ratio_test(delta, phase, feas_tol, use_bland)

            t_span = span[q]
            if t_span <= t_block:
                if not np.isfinite(t_span):
                    if phase == 1:
                        raise NumericalBreakdown("phase-1 objective diverged")
                    return UNBOUNDED
                # Bound flip: no basis change.
                self.x[self.basis] -= t_span * delta
                if self.status[q] == AT_LB:
                    self.status[q] = AT_UB
                    self.x[q] = self.ub[q]
                else:
                    self.status[q] = AT_LB
                    self.x[q] = self.lb[q]
                self.iterations += 1
                continue

            alpha = xi[r]
            need_row = devex or phase == 2
            if need_row:
                # Tableau row r serves both the devex update and the
                # incremental reduced-cost update.
                e_r = np.zeros(self.m)
                e_r[r] = 1.0
                alpha_row = self.AT.dot(self._btran(e_r))
            if devex and not use_bland:
                ratio_sq = (alpha_row / alpha) ** 2
                np.maximum(weights, ratio_sq * weights[q], out=weights)
                w_leave = max(weights[q] / (alpha * alpha), 1.0)
                if weights.max() > 1e7:
                    weights.fill(1.0)
                weights[self.basis[r]] = w_leave

            start = self.x[q]
            self.x[self.basis] -= t_block * delta
            leaving = int(self.basis[r])
            self.status[leaving] = AT_LB if hit == 0 else AT_UB
            self.x[leaving] = self.lb[leaving] if hit == 0 else self.ub[leaving]
            self.x[q] = start + direction * t_block
            self.basis[r] = q
            self.status[q] = BASIC
            self._push_eta(r, xi)
            self.iterations += 1

            if phase == 2:
                d -= (d[q] / alpha) * alpha_row
                d[q] = 0.0

            if self._eta_n >= self.settings.refactor_every:
                self._refactor()
                d = None  # maintained reduced costs drift; reprice
                if phase == 2:
                    xb = self.x[self.basis]
                    drift = np.maximum(
                        np.maximum(self.lb[self.basis] - xb, xb - self.ub[self.basis]), 0.0)
                    if float(drift.max(initial=0.0)) > 1e3 * feas_tol:
                        if repair_budget == 0:
                            raise NumericalBreakdown("feasibility lost beyond repair")
                        repair_budget -= 1
                        inner = self._iterate(phase=1)
                        if inner != OPTIMAL:
                            return inner

    def _ratio_test(self, delta: np.ndarray, phase: int, feas_tol: float,
                    use_bland: bool) -> tuple[float, int, int]:
        """Blocking step, leaving position, and hit bound (0=lb, 1=ub).

        Basic values move as x_B - t*delta. In phase 1 a violated basic
        blocks at the bound it currently violates (the objective kink);
        feasible basics block at the bound they move toward.

        Two-pass Harris test: pass one finds the largest step tolerated when
        every blocking bound is relaxed by the feasibility tolerance; pass
        two picks the largest-magnitude pivot among true limits within that
        step. Under Bland's rule the smallest column index wins instead,
        preserving the termination guarantee.
        """
        cand0 = np.flatnonzero(np.abs(delta) > _PIVOT_ZERO)
        if len(cand0) == 0:
            return np.inf, -1, 0
        dlt = delta[cand0]
        kb = self.basis[cand0]
        xb = self.x[kb]
        lo = self.lb[kb]
        hi = self.ub[kb]
        n = len(cand0)
        limits = np.full(n, np.inf)
        hits = np.zeros(n, dtype=np.int8)

        dec = dlt > 0   # value decreasing as t grows
        inc = ~dec      # value increasing
        if phase == 1:
            above = xb > hi + feas_tol
            below = xb < lo - feas_tol
            inside = ~above & ~below
        else:
            above = np.zeros(n, dtype=bool)
            below = above
            inside = np.ones(n, dtype=bool)

        mask = dec & above & np.isfinite(hi)
        limits[mask] = (xb[mask] - hi[mask]) / dlt[mask]
        hits[mask] = 1
        mask = dec & inside & np.isfinite(lo)
        limits[mask] = (xb[mask] - lo[mask]) / dlt[mask]
        hits[mask] = 0
        mask = inc & below & np.isfinite(lo)
        limits[mask] = (lo[mask] - xb[mask]) / -dlt[mask]
        hits[mask] = 0
        mask = inc & inside & np.isfinite(hi)
        limits[mask] = (hi[mask] - xb[mask]) / -dlt[mask]
        hits[mask] = 1

        np.maximum(limits, 0.0, out=limits)
        t = float(limits.min(initial=np.inf))
        if not np.isfinite(t):
            return np.inf, -1, 0
        if use_bland:
            ties = np.flatnonzero(limits <= t + _RATIO_TIE)
            k = int(ties[np.argmin(kb[ties])])
            return float(limits[k]), int(cand0[k]), int(hits[k])
        # Harris pass one: allow each blocker to overshoot by a small working
        # tolerance; pass two takes the biggest pivot among true limits.
        rt = 10.0 * feas_tol
        blocking = np.flatnonzero(np.isfinite(limits))
        t_relaxed = float(np.min(limits[blocking] + rt / np.abs(dlt[blocking])))
        sel = blocking[limits[blocking] <= t_relaxed]
        mags = np.abs(dlt[sel])
        best = np.flatnonzero(mags >= mags.max() * (1.0 - 1e-12))
        pick = sel[best]
        k = int(pick[np.argmin(kb[pick])])
        return float(limits[k]), int(cand0[k]), int(hits[k])

    # -- reporting ----------------------------------------------------------------

    def objective(self) -> float:
        return float(self.c @ self.x)

    def duals(self) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        return self._btran(self.c[self.basis])

    def duality_gap(self) -> float:
        """|c'x - adjusted dual objective|, recomputed from scratch."""
        if self.m == 0:
            return 0.0
        y = self.duals()
        d = self.c - self.AT.dot(y)
        nb = self.status != BASIC
        dual_obj = float(y @ self.b + d[nb] @ self.x[nb])
        return abs(self.objective() - dual_obj)

    def primal_struct(self) -> np.ndarray:
        return self.x[: self.n_struct].copy()


def solve_lp(mp: StandardFormMP, settings: SolverSettings | None = None) -> Solution:
    """Solve a pure LP; raises IntegralityPresent when integer columns exist."""
    if settings is None:
        settings = SolverSettings()
    if mp.has_integrality():
        raise IntegralityPresent("model has integer columns; use solve_milp")
    t0 = time.perf_counter()
    core = SimplexCore(mp, settings)
    status = core.solve_cold()
    wall = time.perf_counter() - t0
    if status == OPTIMAL:
        obj = core.objective() + mp.obj_offset
        return Solution(
            status=OPTIMAL,
            x=core.primal_struct(),
            objective=obj,
            duals=core.duals(),
            iterations=core.iterations,
            wall_time_s=wall,
            best_bound=obj,
            duality_gap=core.duality_gap(),
        )
    return Solution(status=status, x=None, objective=float("nan"),
                    iterations=core.iterations, wall_time_s=wall)
