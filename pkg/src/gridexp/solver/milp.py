"""Best-first branch-and-bound over LP relaxations.

Branching variable: most fractional (ties broken toward the lowest column
index); the down branch is pushed first so it is explored first among equal
bounds. Children re-solve warm from the parent basis, which keeps node cost
at a handful of simplex pivots. The search is deterministic: node order is
(parent bound, insertion counter).
"""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from .simplex import SimplexCore, solve_lp
from .standard_form import (
    INFEASIBLE, NODE_LIMIT, OPTIMAL, Solution, SolverSettings, StandardFormMP,
    TIME_LIMIT, UNBOUNDED,
)


def _fractional(x: np.ndarray, int_cols: np.ndarray, tol: float) -> tuple[int, float]:
    """Most fractional integer column, or (-1, 0) when integral within tol."""
    vals = x[int_cols]
    dist = np.minimum(vals - np.floor(vals), np.ceil(vals) - vals)
    k = int(np.argmax(dist))
    if dist[k] <= tol:
        return -1, 0.0
    return int(int_cols[k]), float(vals[k])


def solve_milp(mp: StandardFormMP, settings: SolverSettings | None = None) -> Solution:
    """Solve a MILP; pure LPs are delegated to solve_lp."""
    if settings is None:
        settings = SolverSettings()
    if not mp.has_integrality():
        return solve_lp(mp, settings)

    t0 = time.perf_counter()
    core = SimplexCore(mp, settings)
    int_cols = np.flatnonzero(np.asarray(mp.integral, dtype=bool))
    root_bounds = core.snapshot_bounds()
    prune_margin = lambda inc: settings.mip_gap * max(1.0, abs(inc))

    incumbent_x: np.ndarray | None = None
    incumbent_obj = math.inf
    nodes = 0
    counter = 0
    status_out = OPTIMAL
    tried_heuristic = False
    pruned_bound = math.inf  # smallest lower bound discarded by the gap

    # Heap entries: (bound, counter, fixes, basis, statuses). Root has no
    # parent basis and solves cold.
    heap: list = [(-math.inf, counter, {}, None, None)]

    while heap:
        if settings.node_limit is not None and nodes >= settings.node_limit:
            status_out = NODE_LIMIT
            break
        if settings.time_limit_s is not None and time.perf_counter() - t0 > settings.time_limit_s:
            status_out = TIME_LIMIT
            break
        bound, _, fixes, basis, statuses = heapq.heappop(heap)
        if incumbent_x is not None and bound >= incumbent_obj - prune_margin(incumbent_obj):
            pruned_bound = min(pruned_bound, bound)
            continue

        core.restore_bounds(root_bounds)
        for col, (lo, hi) in fixes.items():
            core.set_col_bounds(col, lo, hi)
        if basis is None:
            lp_status = core.solve_cold()
        else:
            lp_status = core.solve_warm(basis, statuses)
        nodes += 1

        if lp_status == UNBOUNDED:
            # Only possible at the root; children inherit a bounded region.
            wall = time.perf_counter() - t0
            return Solution(status=UNBOUNDED, x=None, objective=float("nan"),
                            iterations=core.iterations, nodes=nodes, wall_time_s=wall)
        if lp_status == INFEASIBLE:
            continue

        obj = core.objective()
        if incumbent_x is not None and obj >= incumbent_obj - prune_margin(incumbent_obj):
            pruned_bound = min(pruned_bound, obj)
            continue

        x = core.x.copy()
        branch_col, branch_val = _fractional(x, int_cols, settings.integrality_tol)
        if branch_col < 0:
            # Integral within tolerance: round stored copy and keep.
            x[int_cols] = np.round(x[int_cols])
            if obj < incumbent_obj:
                incumbent_obj = obj
                incumbent_x = x[: core.n_struct]
            continue

        if incumbent_x is None and not tried_heuristic:
            # Round fractional integers up and price the consequences; an
            # early incumbent lets the bound prune most of the tree.
            tried_heuristic = True
            parent_basis = core.basis.copy()
            parent_status = core.status.copy()
            hfix = dict(fixes)
            for col in int_cols:
                lo_h = max(core.lb[col], math.ceil(x[col] - settings.integrality_tol))
                hfix[int(col)] = (lo_h, lo_h)
            for col, (lo_h, hi_h) in hfix.items():
                core.set_col_bounds(col, lo_h, hi_h)
            h_status = core.solve_warm(parent_basis, parent_status)
            nodes += 1
            if h_status == OPTIMAL:
                h_obj = core.objective()
                if h_obj < incumbent_obj:
                    hx = core.x.copy()
                    hx[int_cols] = np.round(hx[int_cols])
                    incumbent_obj = h_obj
                    incumbent_x = hx[: core.n_struct]
            # Restore this node's relaxation state for branching.
            core.restore_bounds(root_bounds)
            for col, (lo_n, hi_n) in fixes.items():
                core.set_col_bounds(col, lo_n, hi_n)
            core.basis = parent_basis
            core.status = parent_status
            core.x = x.copy()

        cur_lb, cur_ub = core.lb[branch_col], core.ub[branch_col]
        child_basis = core.basis.copy()
        child_status = core.status.copy()
        down = dict(fixes)
        down[branch_col] = (cur_lb, math.floor(branch_val))
        up = dict(fixes)
        up[branch_col] = (math.ceil(branch_val), cur_ub)
        counter += 1
        heapq.heappush(heap, (obj, counter, down, child_basis, child_status))
        counter += 1
        heapq.heappush(heap, (obj, counter, up, child_basis, child_status))

    wall = time.perf_counter() - t0
    if incumbent_x is None:
        if status_out == OPTIMAL:
            status_out = INFEASIBLE
        return Solution(status=status_out, x=None, objective=float("nan"),
                        iterations=core.iterations, nodes=nodes, wall_time_s=wall)
    remaining = min((entry[0] for entry in heap), default=math.inf)
    best_bound = min(incumbent_obj, remaining, pruned_bound)
    return Solution(
        status=status_out,
        x=incumbent_x,
        objective=incumbent_obj + mp.obj_offset,
        iterations=core.iterations,
        nodes=nodes,
        wall_time_s=wall,
        best_bound=best_bound + mp.obj_offset,
    )
