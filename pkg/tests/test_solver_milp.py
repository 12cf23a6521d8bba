import numpy as np
import pytest

from gridexp.scenario_gen import Prng
from gridexp.solver import SolverSettings, StandardFormMP, solve_lp, solve_milp

from oracles import enumerate_milp, to_standard_form

TIGHT = SolverSettings(mip_gap=1e-9)


def test_two_binary_knapsack():
    # min -x1 - x2 s.t. x1 + x2 <= 1.5: optimum -1, and the stated
    # branching/tie rules land on (1, 0).
    mp = StandardFormMP()
    x1 = mp.add_col("x1", 0, 1, -1.0, integral=True)
    x2 = mp.add_col("x2", 0, 1, -1.0, integral=True)
    mp.add_row("cap", "<", 1.5, [(x1, 1.0), (x2, 1.0)])
    sol = solve_milp(mp, TIGHT)
    assert sol.status == "Optimal"
    assert abs(sol.objective - (-1.0)) <= 1e-9
    assert np.array_equal(np.round(sol.x), [1.0, 0.0])


def test_integral_root_single_node():
    mp = StandardFormMP()
    x = mp.add_col("x", 0, 1, 1.0, integral=True)
    mp.add_row("need", ">", 1.0, [(x, 1.0)])
    sol = solve_milp(mp, TIGHT)
    assert sol.status == "Optimal"
    assert sol.nodes == 1
    assert abs(sol.objective - solve_lp_relaxed(mp)) <= 1e-9


def solve_lp_relaxed(mp):
    relaxed = StandardFormMP()
    for j in range(mp.n_cols):
        relaxed.add_col(mp.col_names[j], mp.lb[j], mp.ub[j], mp.obj[j])
    rows, cols, vals = mp.triplets()
    per_row = {}
    for r, c, v in zip(rows, cols, vals):
        per_row.setdefault(int(r), []).append((int(c), float(v)))
    for i in range(mp.n_rows):
        relaxed.add_row(mp.row_names[i], mp.senses[i], mp.rhs[i], per_row.get(i, []))
    return solve_lp(relaxed).objective


def test_pure_lp_delegates():
    mp = StandardFormMP()
    x = mp.add_col("x", 0, 2, 1.0)
    mp.add_row("r", ">", 1.0, [(x, 1.0)])
    sol = solve_milp(mp, TIGHT)
    assert sol.status == "Optimal" and sol.nodes == 0


def test_infeasible_milp():
    mp = StandardFormMP()
    x = mp.add_col("x", 0, 1, 1.0, integral=True)
    mp.add_row("r", ">", 2.0, [(x, 1.0)])
    assert solve_milp(mp, TIGHT).status == "Infeasible"


def test_node_limit_status():
    prng = Prng(5150)
    n = 10
    mp = StandardFormMP()
    cols = [mp.add_col(f"x{j}", 0, 1, -(1 + prng.next_u64() % 7), integral=True)
            for j in range(n)]
    mp.add_row("cap", "<", 3.7, [(j, 1.0 + (prng.next_u64() % 3)) for j in cols])
    sol = solve_milp(mp, SolverSettings(mip_gap=1e-9, node_limit=1))
    assert sol.status in ("NodeLimit", "Optimal")
    if sol.status == "NodeLimit":
        assert sol.nodes <= 2  # the limit check runs before each expansion


def test_random_milps_match_enumeration():
    prng = Prng(909090)
    solved = 0
    for _ in range(25):
        nb = 2 + prng.next_u64() % 7
        nc = prng.next_u64() % 3
        n = nb + nc
        m = 1 + prng.next_u64() % 4
        c = [int(prng.next_u64() % 13) - 6 for _ in range(n)]
        A = [[int(prng.next_u64() % 9) - 4 for _ in range(n)] for _ in range(m)]
        b = [int(prng.next_u64() % 16) - 4 for _ in range(m)]
        senses = ["<" if prng.next_u64() % 10 < 6 else
                  (">" if prng.next_u64() % 2 else "=") for _ in range(m)]
        lb = [0.0] * n
        ub = [1.0 if j < nb else 5.0 for j in range(n)]
        integral = [j < nb for j in range(n)]
        mp = to_standard_form(c, A, senses, b, lb, ub, integral)
        sol = solve_milp(mp, TIGHT)
        status, obj = enumerate_milp(c, A, senses, b, lb, ub, integral)
        assert sol.status == status
        if status == "Optimal":
            solved += 1
            assert abs(sol.objective - obj) <= 1e-6 * (1 + abs(obj))
    assert solved >= 8


def test_milp_determinism():
    prng = Prng(60606)
    n, m = 6, 3
    c = [int(prng.next_u64() % 13) - 6 for _ in range(n)]
    A = [[int(prng.next_u64() % 9) - 4 for _ in range(n)] for _ in range(m)]
    b = [int(prng.next_u64() % 10) for _ in range(m)]
    senses = ["<"] * m
    mp = to_standard_form(c, A, senses, b, [0.0] * n, [1.0] * n, [True] * n)
    s1 = solve_milp(mp, TIGHT)
    s2 = solve_milp(mp, TIGHT)
    assert s1.nodes == s2.nodes and s1.iterations == s2.iterations
    if s1.x is not None:
        assert np.array_equal(s1.x, s2.x)
