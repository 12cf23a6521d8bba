"""In-process LP/MILP solver: two-phase revised simplex plus branch-and-bound.

Shipping the solver with the experiment removes the license dependency and
makes every solve reproducible bit-for-bit; the Solution contract is narrow
enough that an external solver could be swapped in behind it.
"""

from .standard_form import (
    EQ, GE, INFEASIBLE, LE, NODE_LIMIT, OPTIMAL, RANGE, TIME_LIMIT, UNBOUNDED,
    Solution, SolverSettings, StandardFormMP, VerifyReport, verify_solution,
)
from .simplex import solve_lp
from .milp import solve_milp
from .lp_text import write_lp_text

__all__ = [
    "EQ", "GE", "LE", "RANGE",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "NODE_LIMIT", "TIME_LIMIT",
    "Solution", "SolverSettings", "StandardFormMP",
    "VerifyReport", "verify_solution", "solve_lp", "solve_milp", "write_lp_text",
]
