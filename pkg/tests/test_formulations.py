import numpy as np
import pytest

from gridexp.data_model import ForecastSet, RealizationSeries, TimeSeries
from gridexp.errors import (
    CommitmentMissing, ForecastLeakage, HorizonMismatch, InfeasibleInitialState,
    NonIntegralBinary, StatusNotOptimal,
)
from gridexp.formulations import (
    GenState, SystemState, build_ed, build_suc, build_uc,
    extract_commitment, extract_dispatch,
)
from gridexp.solver import SolverSettings, solve_lp, solve_milp, verify_solution

from conftest import forecast_set, point_forecast
from oracles import evaluate_rows, reprice_dispatch

TIGHT = SolverSettings(mip_gap=1e-9)


def real_series(owner, values, resolution=300):
    return RealizationSeries(owner, TimeSeries(
        0, resolution, np.asarray(values, dtype=float),
        provenance=f"realization:{owner}"))


# -- unit commitment -----------------------------------------------------------


def test_single_gen_commit_cost_605(one_gen_system):
    state = SystemState.cold_start(one_gen_system)
    mp, vm = build_uc(one_gen_system, {}, {"l1": forecast_set("l1", [30.0])},
                      state, 1, voll=10_000.0, network=False)
    sol = solve_milp(mp, TIGHT)
    assert sol.status == "Optimal"
    # Oracle: enumerate u in {0, 1}. Off: shed 30 MW at VOLL = 300000.
    # On: 5 no-load + 20 $/MWh * 30 MWh = 605.
    assert abs(sol.objective - 605.0) <= 1e-6
    sched = extract_commitment(sol, vm)
    assert sched.u["g1"].tolist() == [1]
    disp = extract_dispatch(sol, vm)
    assert abs(disp.gen_mw["g1"][0] - 30.0) <= 1e-9
    assert abs(disp.total_cost() - sol.objective) <= 1e-6 * (1 + abs(sol.objective))


def test_zero_demand_stays_off(one_gen_system):
    from gridexp.data_model import System, ThermalGen
    sys2 = System(
        buses=one_gen_system.buses, lines=(),
        thermal_gens=(ThermalGen("g1", "b1", 10.0, 50.0, 100.0, 100.0, 2, 2,
                                 500.0, 5.0, ((50.0, 20.0),)),),
        renewable_gens=(), loads=one_gen_system.loads)
    mp, vm = build_uc(sys2, {}, {"l1": forecast_set("l1", [0.0] * 4)},
                      SystemState.cold_start(sys2), 4, network=False)
    sol = solve_milp(mp, TIGHT)
    assert sol.status == "Optimal"
    assert abs(sol.objective) <= 1e-9
    assert extract_commitment(sol, vm).u["g1"].tolist() == [0, 0, 0, 0]


def test_min_down_seed_blocks_commitment(two_bus_system):
    # g1 has min_down 2 and has been off one hour: hour 0 must stay off.
    state = SystemState({
        "g1": GenState(-1, 0.0),
        "g2": GenState(-5, 0.0),
    })
    mp, vm = build_uc(two_bus_system, {"w1": forecast_set("w1", [0.0] * 3)},
                      {"l1": forecast_set("l1", [120.0] * 3)}, state, 3)
    sol = solve_milp(mp, TIGHT)
    sched = extract_commitment(sol, vm)
    assert sched.u["g1"][0] == 0  # forced by the seed despite load pressure


def test_forced_on_conflict_surfaces_as_infeasible(two_bus_system):
    # Spec scenario: a min-down-blocked unit forced on by extra data. The
    # solver reports Infeasible; the simulation layer maps that diagnosis.
    state = SystemState({"g1": GenState(-1, 0.0), "g2": GenState(-5, 0.0)})
    mp, vm = build_uc(two_bus_system, {"w1": forecast_set("w1", [0.0] * 3)},
                      {"l1": forecast_set("l1", [50.0] * 3)}, state, 3)
    mp.add_row("must_run_g1", ">", 1.0, [(vm.col("u", "g1", 0), 1.0)])
    sol = solve_milp(mp, TIGHT)
    assert sol.status == "Infeasible"
    with pytest.raises(StatusNotOptimal):
        extract_commitment(sol, vm)


def test_state_validation(one_gen_system):
    with pytest.raises(InfeasibleInitialState, match="nonzero"):
        SystemState({"g1": GenState(0, 0.0)}).validate(one_gen_system)
    with pytest.raises(InfeasibleInitialState, match="exceeds"):
        SystemState({"g1": GenState(3, 500.0)}).validate(one_gen_system)
    with pytest.raises(InfeasibleInitialState, match="no state"):
        SystemState({}).validate(one_gen_system)


def test_horizon_mismatch(one_gen_system):
    with pytest.raises(HorizonMismatch):
        build_uc(one_gen_system, {}, {"l1": forecast_set("l1", [30.0, 30.0])},
                 SystemState.cold_start(one_gen_system), 4, network=False)


def test_realization_rejected_by_decision_builder(one_gen_system):
    bad = RealizationSeries("l1", TimeSeries(0, 3600, [30.0],
                                             provenance="realization:l1"))
    with pytest.raises(ForecastLeakage):
        build_uc(one_gen_system, {}, {"l1": bad},
                 SystemState.cold_start(one_gen_system), 1, network=False)


# -- stochastic commitment -------------------------------------------------------


def suc_inputs(system, wind_values, n_scenarios=1, probs=None):
    scen = tuple(
        TimeSeries(0, 3600, np.asarray(wind_values, dtype=float),
                   provenance=f"forecast:w1:s{s}")
        for s in range(n_scenarios))
    probs = probs or tuple(1.0 / n_scenarios for _ in range(n_scenarios))
    return {"w1": ForecastSet("w1", len(wind_values), scenarios=scen,
                              probabilities=probs)}


def test_suc_single_scenario_collapses_to_uc(two_bus_system):
    T = 6
    load = [90.0, 100.0, 110.0, 120.0, 100.0, 80.0]
    wind = [10.0, 20.0, 30.0, 25.0, 15.0, 5.0]
    state = SystemState.all_on(two_bus_system)
    lfc = {"l1": forecast_set("l1", load)}
    mp_uc, vm_uc = build_uc(two_bus_system, {"w1": forecast_set("w1", wind)},
                            lfc, state, T)
    mp_suc, vm_suc = build_suc(two_bus_system, suc_inputs(two_bus_system, wind),
                               lfc, state, T)
    s_uc = solve_milp(mp_uc, TIGHT)
    s_suc = solve_milp(mp_suc, TIGHT)
    assert abs(s_uc.objective - s_suc.objective) <= 1e-6 * (1 + abs(s_uc.objective))
    cu = extract_commitment(s_uc, vm_uc)
    cs = extract_commitment(s_suc, vm_suc)
    assert all(np.array_equal(cu.u[g], cs.u[g]) for g in cu.u)


def test_suc_duplicate_scenarios_match_single(two_bus_system):
    T = 4
    wind = [10.0, 20.0, 15.0, 5.0]
    load = [100.0, 110.0, 90.0, 80.0]
    state = SystemState.all_on(two_bus_system)
    lfc = {"l1": forecast_set("l1", load)}
    mp1, _ = build_suc(two_bus_system, suc_inputs(two_bus_system, wind, 1), lfc, state, T)
    mp2, _ = build_suc(two_bus_system, suc_inputs(two_bus_system, wind, 2,
                                                  probs=(0.5, 0.5)), lfc, state, T)
    s1 = solve_milp(mp1, TIGHT)
    s2 = solve_milp(mp2, TIGHT)
    assert abs(s1.objective - s2.objective) <= 1e-6 * (1 + abs(s1.objective))


def test_suc_column_count_scales_with_scenarios(two_bus_system):
    T = 4
    wind = [10.0] * T
    load = [100.0] * T
    state = SystemState.all_on(two_bus_system)
    lfc = {"l1": forecast_set("l1", load)}
    sizes = {}
    for n in (1, 5, 10):
        mp, _ = build_suc(two_bus_system, suc_inputs(two_bus_system, wind, n),
                          lfc, state, T)
        sizes[n] = mp.n_cols
    shared = 2 * 2 * T  # u and v per gen per hour
    per_scenario = sizes[5] - sizes[1]
    assert per_scenario % 4 == 0
    assert sizes[10] == shared + 10 * (sizes[1] - shared)
    assert sizes[5] == shared + 5 * (sizes[1] - shared)


# -- economic dispatch ------------------------------------------------------------


def ed_realizations(load, wind, n=12):
    return {
        "l1": real_series("l1", [load] * n),
        "w1": real_series("w1", [wind] * n),
    }


def test_ed_no_shed_with_ample_committed_capacity(two_bus_system):
    # Feasibility oracle: committed capacity 180 >= 100 + headroom and the
    # state starts dispatched mid-range, so zero shed is attainable.
    state = SystemState({"g1": GenState(8, 60.0), "g2": GenState(8, 40.0)})
    mp, vm = build_ed(two_bus_system, ed_realizations(100.0, 20.0),
                      {"g1": 1, "g2": 1}, state)
    sol = solve_lp(mp)
    disp = extract_dispatch(sol, vm)
    assert disp.shed_total_mwh() <= 1e-9
    assert disp.balance_residual_max <= 1e-6


def test_ed_blackout_sheds_everything(two_bus_system):
    state = SystemState.cold_start(two_bus_system)
    mp, vm = build_ed(two_bus_system,
                      {"l1": real_series("l1", [120.0]),
                       "w1": real_series("w1", [0.0])},
                      {"g1": 0, "g2": 0}, state, n_steps=1)
    sol = solve_lp(mp)
    disp = extract_dispatch(sol, vm)
    assert abs(disp.shed_mw["l1"][0] - 120.0) <= 1e-9
    # 120 MW over one 300 s interval is 10 MWh of unserved energy.
    assert abs(disp.shed_total_mwh() - 10.0) <= 1e-9


def test_ed_surplus_wind_curtailed(two_bus_system):
    state = SystemState({"g1": GenState(8, 20.0), "g2": GenState(8, 10.0)})
    mp, vm = build_ed(two_bus_system, ed_realizations(40.0, 50.0),
                      {"g1": 1, "g2": 1}, state)
    sol = solve_lp(mp)
    disp = extract_dispatch(sol, vm)
    # Oracle dispatch: thermal pinned at p_min (30 MW total), wind covers the
    # remaining 10 MW and curtails the rest; nothing is overgenerated.
    assert abs(disp.gen_mw["g1"][0] - 20.0) <= 1e-6
    assert abs(disp.gen_mw["g2"][0] - 10.0) <= 1e-6
    assert abs(disp.wind_mw["w1"][0] - 10.0) <= 1e-6
    assert float(disp.overgen_mw.max()) <= 1e-9


def test_ed_requires_full_commitment(two_bus_system):
    state = SystemState.all_on(two_bus_system)
    with pytest.raises(CommitmentMissing):
        build_ed(two_bus_system, ed_realizations(100.0, 0.0), {"g1": 1}, state)


def test_ed_rejects_forecast_input(two_bus_system):
    state = SystemState.all_on(two_bus_system)
    reals = ed_realizations(100.0, 0.0)
    reals["l1"] = ForecastSet("l1", 1, point=point_forecast([100.0], label="l1"))
    with pytest.raises(ForecastLeakage):
        build_ed(two_bus_system, reals, {"g1": 1, "g2": 1}, state)


# -- extraction ---------------------------------------------------------------------


def test_extract_commitment_tolerates_near_integral(one_gen_system):
    state = SystemState.cold_start(one_gen_system)
    mp, vm = build_uc(one_gen_system, {}, {"l1": forecast_set("l1", [30.0])},
                      state, 1, network=False)
    sol = solve_milp(mp, TIGHT)
    sol.x[vm.col("u", "g1", 0)] = 0.9999999  # within 1e-6 of integral
    assert extract_commitment(sol, vm).u["g1"].tolist() == [1]
    sol.x[vm.col("u", "g1", 0)] = 0.4
    with pytest.raises(NonIntegralBinary):
        extract_commitment(sol, vm)


def test_cost_recomputation_matches_objective_all_kinds(two_bus_system):
    T = 4
    load = [100.0, 110.0, 90.0, 80.0]
    wind = [10.0, 20.0, 15.0, 5.0]
    state = SystemState.all_on(two_bus_system)
    lfc = {"l1": forecast_set("l1", load)}

    mp, vm = build_uc(two_bus_system, {"w1": forecast_set("w1", wind)}, lfc, state, T)
    sol = solve_milp(mp, TIGHT)
    disp = extract_dispatch(sol, vm)
    assert abs(disp.total_cost() - sol.objective) <= 1e-6 * (1 + abs(sol.objective))

    mp, vm = build_suc(two_bus_system, suc_inputs(two_bus_system, wind, 3),
                       lfc, state, T)
    sol = solve_milp(mp, TIGHT)
    disp = extract_dispatch(sol, vm)
    assert abs(disp.total_cost() - sol.objective) <= 1e-6 * (1 + abs(sol.objective))

    mp, vm = build_ed(two_bus_system, ed_realizations(100.0, 20.0),
                      {"g1": 1, "g2": 1},
                      SystemState({"g1": GenState(8, 60.0), "g2": GenState(8, 40.0)}))
    sol = solve_lp(mp)
    disp = extract_dispatch(sol, vm)
    assert abs(disp.total_cost() - sol.objective) <= 1e-6 * (1 + abs(sol.objective))


def test_every_row_named_and_satisfied(two_bus_system):
    T = 3
    state = SystemState.all_on(two_bus_system)
    mp, vm = build_uc(two_bus_system, {"w1": forecast_set("w1", [10.0] * T)},
                      {"l1": forecast_set("l1", [100.0] * T)}, state, T)
    assert all(name for name in mp.row_names)
    assert len(set(mp.row_names)) == len(mp.row_names)
    sol = solve_milp(mp, TIGHT)
    # Independent row evaluation from raw triplets, bypassing the solver.
    assert evaluate_rows(mp, sol.x) <= 1e-6


def test_copper_plate_never_costs_more(two_bus_system):
    T = 4
    load = [110.0, 120.0, 100.0, 90.0]
    wind = [5.0, 10.0, 20.0, 0.0]
    state = SystemState.all_on(two_bus_system)
    lfc = {"l1": forecast_set("l1", load)}
    wfc = {"w1": forecast_set("w1", wind)}
    net = solve_milp(build_uc(two_bus_system, wfc, lfc, state, T, network=True)[0], TIGHT)
    plate = solve_milp(build_uc(two_bus_system, wfc, lfc, state, T, network=False)[0], TIGHT)
    assert plate.objective <= net.objective + 1e-6 * (1 + abs(net.objective))


def test_repricing_oracle_matches_variable_cost(two_bus_system):
    state = SystemState({"g1": GenState(8, 60.0), "g2": GenState(8, 40.0)})
    mp, vm = build_ed(two_bus_system, ed_realizations(100.0, 20.0),
                      {"g1": 1, "g2": 1}, state)
    sol = solve_lp(mp)
    disp = extract_dispatch(sol, vm)
    repriced = reprice_dispatch(two_bus_system, disp.gen_mw, disp.step_h)
    assert abs(repriced - disp.cost_variable) <= 1e-6 * (1 + abs(repriced))
