"""Case execution: sequencing decision models and the emulator.

One case = one (trial, treatment) pair. The decision model sees forecasts
only; the emulator sees realizations only; system state (commitment ages
and final dispatch) threads across every hour boundary, including day
boundaries. All solver calls are recorded with their computational cost,
and all raw outputs are retained for archiving.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data_model import ForecastSet, RealizationSeries, TimeSeries, resample_stepwise
from .errors import ForecastLeakage, InfeasibleInitialState, NumericalBreakdown
from .experiment import (
    ExperimentPlan, RECEDING_HORIZON, SYNCHRONIZED, TestSet, Treatment,
)
from .formulations import (
    CommitmentSchedule, DispatchResult, SystemState, build_ed, build_suc, build_uc,
    extract_commitment, extract_dispatch,
)
from .scenario_gen import Prng, ScenarioSpec, gen_scenario_set, persistence_from_prior_day
from .solver import INFEASIBLE, NODE_LIMIT, OPTIMAL, TIME_LIMIT, solve_lp, solve_milp

HOURS_PER_DAY = 24


@dataclass(frozen=True)
class Chronology:
    """How decision-model output feeds the emulator sequence."""
    kind: str
    decision_interval_h: int
    lookahead_h: int
    apply_h: int

    def __post_init__(self):
        if not (self.lookahead_h >= self.apply_h >= 1):
            raise ValueError("need lookahead >= apply-window >= 1")

    @staticmethod
    def for_treatment(tr: Treatment, horizon_h: int) -> "Chronology":
        if tr.chronology == RECEDING_HORIZON:
            return Chronology(RECEDING_HORIZON, tr.apply_h, tr.lookahead_h, tr.apply_h)
        return Chronology(SYNCHRONIZED, horizon_h, horizon_h, horizon_h)


@dataclass
class ExecutionRecord:
    model: str        # 'uc' | 'suc' | 'ed'
    clock_h: int      # window-relative simulation hour at launch
    status: str
    objective: float
    wall_time_s: float
    iterations: int
    nodes: int
    flagged: bool = False  # incumbent used after a node/time limit


@dataclass
class StepOutput:
    """Raw output of one decision step and its applied emulator hours."""
    clock_h: int
    commitment: CommitmentSchedule
    applied_h: int
    dispatches: list[DispatchResult]
    wind_scenarios: dict[str, list[list[float]]]  # archived confounding draws


@dataclass
class CaseRun:
    test_set_id: str
    records: list[ExecutionRecord]
    steps: list[StepOutput]
    final_state: SystemState
    aborted: str | None = None

    def decision_count(self) -> int:
        return sum(1 for r in self.records if r.model != "ed")

    def ed_count(self) -> int:
        return sum(1 for r in self.records if r.model == "ed")


def expected_execution_counts(window_days: int, chron: Chronology) -> tuple[int, int]:
    """Closed-form (decision solves, emulator solves) for a window.

    The emulator runs once per hour regardless of its internal step count.
    """
    window_h = window_days * HOURS_PER_DAY
    decisions = -(-window_h // chron.apply_h)  # ceil
    return decisions, window_h


def advance_state(state: SystemState, commitment_hour: dict[str, int],
                  dispatch: DispatchResult) -> SystemState:
    """Age the commitment counters and carry the final-interval dispatch."""
    new = {}
    for gid, st in state.gens.items():
        on = bool(commitment_hour[gid])
        if on:
            hours = st.hours_in_state + 1 if st.hours_in_state > 0 else 1
            last = float(dispatch.gen_mw[gid][-1])
        else:
            hours = st.hours_in_state - 1 if st.hours_in_state < 0 else -1
            last = 0.0
        new[gid] = type(st)(hours_in_state=hours, last_dispatch=last)
    return SystemState(new)


def _hourly_window(series: TimeSeries, abs_hour: int, hours: int) -> np.ndarray:
    """Hourly values with wrap-around at the annual boundary.

    Wrap only ever reaches backwards (persistence history for a window that
    starts on day zero of the data).
    """
    n = len(series)
    idx = np.arange(abs_hour, abs_hour + hours) % n
    return series.values[idx]


def _isolation_guard(forecasts: list[ForecastSet],
                     realization_ids: set[int]) -> None:
    """Runtime leak check beyond the type system: no shared series objects."""
    for fs in forecasts:
        for ts in fs.all_series():
            if id(ts) in realization_ids:
                raise ForecastLeakage(
                    f"forecast series '{ts.provenance}' aliases a realization object")
            if ts.provenance.startswith("realization"):
                raise ForecastLeakage(
                    f"series '{ts.provenance}' entered the decision path")


def run_case(test_set: TestSet, plan: ExperimentPlan) -> CaseRun:
    """Execute one simulation case: Fig.-3-style decision/emulator loop."""
    params = plan.parameters
    sys = params.system
    tr = test_set.treatment
    trial = test_set.trial
    chron = Chronology.for_treatment(tr, params.horizon_h)
    step_s = params.emulator_resolution_s
    steps_per_hour = 3600 // step_s

    prng = Prng(trial.trial_seed)
    state = SystemState.all_on(sys)
    records: list[ExecutionRecord] = []
    outputs: list[StepOutput] = []

    window_h = trial.window_length_days * HOURS_PER_DAY
    abs_hour0 = trial.window_start_day * HOURS_PER_DAY

    # Emulator data for the whole window at emulator resolution; identical
    # across treatments by construction.
    window_fine: dict[str, TimeSeries] = {}
    for dev_id, annual in params.realizations_hourly.items():
        hourly = TimeSeries(
            start=abs_hour0 * 3600, resolution=3600,
            values=_hourly_window(annual, abs_hour0, window_h),
            provenance=annual.provenance)
        window_fine[dev_id] = resample_stepwise(hourly, step_s)
    realization_ids = {id(ts) for ts in window_fine.values()}

    scen_spec = None
    if tr.kind == "stochastic_uc":
        scen_spec = ScenarioSpec(n_scenarios=tr.n_scenarios,
                                 relative_sd=tr.relative_sd,
                                 truncation=tr.truncation)

    n_steps = -(-window_h // chron.apply_h)
    for k in range(n_steps):
        clock = k * chron.apply_h
        lookahead = chron.lookahead_h

        # Day-ahead persistence forecasts from the prior 24 h (with annual
        # wrap-around when the window starts on the first day of data).
        load_fc: dict[str, ForecastSet] = {}
        wind_fc: dict[str, ForecastSet] = {}
        wind_scen_archive: dict[str, list[list[float]]] = {}
        for load in sys.loads:
            prior = TimeSeries(
                start=(abs_hour0 + clock - 24) * 3600, resolution=3600,
                values=_hourly_window(params.realizations_hourly[load.id],
                                      abs_hour0 + clock - 24, 24),
                provenance=f"history:{load.id}")
            point = persistence_from_prior_day(
                prior, lookahead, (abs_hour0 + clock) * 3600, label=load.id)
            load_fc[load.id] = ForecastSet(load.id, lookahead, point=point)
        for gen in sys.renewable_gens:
            prior = TimeSeries(
                start=(abs_hour0 + clock - 24) * 3600, resolution=3600,
                values=_hourly_window(params.realizations_hourly[gen.id],
                                      abs_hour0 + clock - 24, 24),
                provenance=f"history:{gen.id}")
            point = persistence_from_prior_day(
                prior, lookahead, (abs_hour0 + clock) * 3600, label=gen.id)
            if scen_spec is not None:
                fs = gen_scenario_set(prng, point, scen_spec)
                wind_fc[gen.id] = fs
                wind_scen_archive[gen.id] = [s.values.tolist() for s in fs.scenarios]
            else:
                wind_fc[gen.id] = ForecastSet(gen.id, lookahead, point=point)

        _isolation_guard(list(load_fc.values()) + list(wind_fc.values()),
                         realization_ids)

        if tr.kind == "stochastic_uc":
            mp, vm = build_suc(sys, wind_fc, load_fc, state, lookahead,
                               voll=params.voll, network=params.network)
            tag = "suc"
        else:
            mp, vm = build_uc(sys, wind_fc, load_fc, state, lookahead,
                              voll=params.voll, network=params.network)
            tag = "uc"
        try:
            sol = solve_milp(mp, params.solver_settings)
        except NumericalBreakdown as exc:
            records.append(ExecutionRecord(
                model=tag, clock_h=clock, status="NumericalBreakdown",
                objective=float("nan"), wall_time_s=0.0, iterations=0, nodes=0))
            return CaseRun(test_set.id, records, outputs, state,
                           aborted=f"decision solve at hour {clock}: {exc}")
        flagged = sol.status in (NODE_LIMIT, TIME_LIMIT) and sol.x is not None
        records.append(ExecutionRecord(
            model=tag, clock_h=clock, status=sol.status, objective=sol.objective,
            wall_time_s=sol.wall_time_s, iterations=sol.iterations,
            nodes=sol.nodes, flagged=flagged))
        if sol.status == INFEASIBLE:
            raise InfeasibleInitialState(
                f"{test_set.id}: decision model infeasible at hour {clock}; "
                "the commitment seed cannot be satisfied")
        if sol.x is None:
            return CaseRun(test_set.id, records, outputs, state,
                           aborted=f"decision solve at hour {clock}: {sol.status}")
        schedule = extract_commitment(sol, vm, allow_incumbent=flagged)

        applied = min(chron.apply_h, window_h - clock)
        dispatches: list[DispatchResult] = []
        for h in range(applied):
            hour_clock = clock + h
            reals = {
                dev_id: RealizationSeries(
                    dev_id, window_fine[dev_id].slice(hour_clock * steps_per_hour,
                                                      steps_per_hour))
                for dev_id in window_fine
            }
            commit_hour = schedule.hour(h)
            mp_ed, vm_ed = build_ed(
                sys, reals, commit_hour, state, n_steps=steps_per_hour,
                step_s=step_s, voll=params.voll, network=params.network)
            try:
                sol_ed = solve_lp(mp_ed, params.solver_settings)
            except NumericalBreakdown as exc:
                records.append(ExecutionRecord(
                    model="ed", clock_h=hour_clock, status="NumericalBreakdown",
                    objective=float("nan"), wall_time_s=0.0, iterations=0, nodes=0))
                return CaseRun(test_set.id, records, outputs, state,
                               aborted=f"emulator solve at hour {hour_clock}: {exc}")
            records.append(ExecutionRecord(
                model="ed", clock_h=hour_clock, status=sol_ed.status,
                objective=sol_ed.objective, wall_time_s=sol_ed.wall_time_s,
                iterations=sol_ed.iterations, nodes=0))
            # Shed and surplus slacks make the emulator LP feasible for any
            # commitment, so anything else is a solver defect.
            assert sol_ed.status == OPTIMAL, (
                f"emulator LP returned {sol_ed.status}; must be impossible")
            disp = extract_dispatch(sol_ed, vm_ed)
            dispatches.append(disp)
            state = advance_state(state, commit_hour, disp)

        outputs.append(StepOutput(
            clock_h=clock, commitment=schedule, applied_h=applied,
            dispatches=dispatches, wind_scenarios=wind_scen_archive))

    return CaseRun(test_set.id, records, outputs, state)
