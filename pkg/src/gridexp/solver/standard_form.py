"""Solver-facing model in standard form, solver settings, and solutions.

The standard form is: minimize c'x subject to row constraints with senses
in {<=, =, >=}, and per-column bounds (possibly infinite). Integrality is a
per-column flag. Rows and columns carry names so solutions can be audited
without the builder that produced them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LE, EQ, GE, RANGE = "<", "=", ">", "R"

#: Solution status values.
OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
NODE_LIMIT = "NodeLimit"
TIME_LIMIT = "TimeLimit"


@dataclass(frozen=True)
class SolverSettings:
    feasibility_tol: float = 1e-9
    optimality_tol: float = 1e-9
    integrality_tol: float = 1e-6
    mip_gap: float = 1e-4
    node_limit: int | None = None
    time_limit_s: float | None = None
    # devex pricing with Bland anti-cycling fallback; "dantzig_bland" selects
    # classic Dantzig pricing with the same fallback
    pivot_rule: str = "devex_bland"
    refactor_every: int = 100

    def __post_init__(self):
        for name in ("feasibility_tol", "optimality_tol", "integrality_tol", "mip_gap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    def to_dict(self) -> dict:
        return {
            "feasibility_tol": self.feasibility_tol,
            "optimality_tol": self.optimality_tol,
            "integrality_tol": self.integrality_tol,
            "mip_gap": self.mip_gap,
            "node_limit": self.node_limit,
            "time_limit_s": self.time_limit_s,
            "pivot_rule": self.pivot_rule,
            "refactor_every": self.refactor_every,
        }


class StandardFormMP:
    """Sparse minimization model assembled row by row.

    Also serves as the builder: add_col/add_row grow the model in place and
    return indices. Arrays are finalized lazily on first access.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.obj_offset = 0.0  # constant term, e.g. cost of fixed commitments
        self.obj: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.integral: list[bool] = []
        self.col_names: list[str] = []
        self.row_names: list[str] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.range_lo: list[float] = []  # lower side for RANGE rows, else -inf
        self._entries_row: list[int] = []
        self._entries_col: list[int] = []
        self._entries_val: list[float] = []

    # -- construction -------------------------------------------------------

    def add_col(self, name: str, lb: float = 0.0, ub: float = np.inf,
                obj: float = 0.0, integral: bool = False) -> int:
        if not (lb <= ub):
            raise ValueError(f"column '{name}': lb {lb} > ub {ub}")
        if not np.isfinite(obj):
            raise ValueError(f"column '{name}': objective must be finite")
        self.col_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        self.integral.append(bool(integral))
        return len(self.col_names) - 1

    def _append_row(self, name: str, sense: str, rhs: float, range_lo: float,
                    coeffs: list[tuple[int, float]]) -> int:
        if not np.isfinite(rhs):
            raise ValueError(f"row '{name}': rhs must be finite")
        r = len(self.row_names)
        self.row_names.append(name)
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.range_lo.append(range_lo)
        for c, v in coeffs:
            if v == 0.0:
                continue
            if not np.isfinite(v):
                raise ValueError(f"row '{name}': non-finite coefficient")
            if not 0 <= c < len(self.col_names):
                raise ValueError(f"row '{name}': column index {c} out of range")
            self._entries_row.append(r)
            self._entries_col.append(c)
            self._entries_val.append(float(v))
        return r

    def add_row(self, name: str, sense: str, rhs: float,
                coeffs: list[tuple[int, float]]) -> int:
        if sense not in (LE, EQ, GE):
            raise ValueError(f"row '{name}': bad sense '{sense}'")
        return self._append_row(name, sense, rhs, -np.inf, coeffs)

    def add_range_row(self, name: str, lo: float, hi: float,
                      coeffs: list[tuple[int, float]]) -> int:
        """lo <= a'x <= hi as a single row (one slack in the solver)."""
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise ValueError(f"row '{name}': bad range [{lo}, {hi}]")
        return self._append_row(name, RANGE, hi, lo, coeffs)

    # -- finalized views -----------------------------------------------------

    @property
    def n_cols(self) -> int:
        return len(self.col_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (np.asarray(self._entries_row, dtype=np.int64),
                np.asarray(self._entries_col, dtype=np.int64),
                np.asarray(self._entries_val, dtype=float))

    def matrix(self):
        """Constraint matrix as scipy CSC (built on demand)."""
        from scipy.sparse import csc_matrix
        r, c, v = self.triplets()
        return csc_matrix((v, (r, c)), shape=(self.n_rows, self.n_cols))

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "obj": np.asarray(self.obj, dtype=float),
            "lb": np.asarray(self.lb, dtype=float),
            "ub": np.asarray(self.ub, dtype=float),
            "rhs": np.asarray(self.rhs, dtype=float),
            "integral": np.asarray(self.integral, dtype=bool),
        }

    def has_integrality(self) -> bool:
        return any(self.integral)


@dataclass
class Solution:
    status: str
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None = None
    iterations: int = 0
    nodes: int = 0
    wall_time_s: float = 0.0
    best_bound: float = float("nan")
    duality_gap: float = float("nan")

    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class VerifyReport:
    max_violation: float
    worst_row: str
    objective: float
    bound_violation: float
    worst_col: str

    def feasible(self, tol: float) -> bool:
        return self.max_violation <= tol and self.bound_violation <= tol


def verify_solution(mp: StandardFormMP, primal: np.ndarray, tol: float = 1e-6) -> VerifyReport:
    """Evaluate every row and bound directly from the triplets.

    Independent of any solver state: recomputes activities with plain
    accumulation so it can audit a Solution (or reject a bogus one).
    """
    x = np.asarray(primal, dtype=float)
    if len(x) != mp.n_cols:
        raise ValueError(f"primal length {len(x)} != column count {mp.n_cols}")
    arrays = mp.arrays()
    rows, cols, vals = mp.triplets()
    activity = np.zeros(mp.n_rows)
    np.add.at(activity, rows, vals * x[cols])
    worst_row, max_violation = "", 0.0
    for i in range(mp.n_rows):
        diff = activity[i] - arrays["rhs"][i]
        if mp.senses[i] == LE:
            v = max(0.0, diff)
        elif mp.senses[i] == GE:
            v = max(0.0, -diff)
        elif mp.senses[i] == RANGE:
            v = max(0.0, diff, mp.range_lo[i] - activity[i])
        else:
            v = abs(diff)
        if v > max_violation:
            max_violation, worst_row = v, mp.row_names[i]
    bviol = np.maximum(arrays["lb"] - x, x - arrays["ub"])
    bviol = np.maximum(bviol, 0.0)
    worst_col = mp.col_names[int(np.argmax(bviol))] if mp.n_cols else ""
    return VerifyReport(
        max_violation=float(max_violation),
        worst_row=worst_row,
        objective=float(np.dot(arrays["obj"], x)) + mp.obj_offset,
        bound_violation=float(np.max(bviol)) if mp.n_cols else 0.0,
        worst_col=worst_col,
    )
