"""Algebraic models: UC and SUC decision models, ED emulator model.

All three share the same physical core per (hour, scenario) block: nodal
balance with shed and over-generation slacks, piecewise-linear variable
costs via per-segment generation variables (valid because marginal costs
are non-decreasing), ramp limits with startup/shutdown allowances, and a
DC network in bus-angle form (or a single copper-plate balance row).

Commitment models add binaries u(g,t), continuous startup indicators
v(g,t) in [0,1] (integrality implied by u), and the turn-on/turn-off
inequality sets for min-up/min-down seeded by hours-in-state. The SUC is
the two-stage extensive form: one commitment shared by all scenarios,
per-scenario dispatch weighted by scenario probability. The ED fixes the
commitment as constants and prices energy over 5-minute intervals.

Output below a unit's minimum is priced at the first segment's marginal
cost so total variable cost is continuous from zero MW.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data_model import ForecastSet, RealizationSeries, System, ThermalGen
from .errors import (
    CommitmentMissing,
    ForecastLeakage,
    HorizonMismatch,
    InfeasibleInitialState,
    NonIntegralBinary,
    StatusNotOptimal,
)
from .solver import EQ, GE, LE, OPTIMAL, Solution, StandardFormMP

DEFAULT_VOLL = 10_000.0  # $/MWh on shed and over-generation slacks


@dataclass(frozen=True)
class GenState:
    """One generator's boundary condition: signed hours in state, last MW."""
    hours_in_state: int  # > 0: on that many hours; < 0: off that many hours
    last_dispatch: float

    @property
    def on(self) -> bool:
        return self.hours_in_state > 0


@dataclass(frozen=True)
class SystemState:
    gens: Mapping[str, GenState]

    @staticmethod
    def cold_start(sys: System) -> "SystemState":
        """Everything off long enough that min-down never binds."""
        return SystemState({
            g.id: GenState(-max(g.min_down, g.min_up), 0.0) for g in sys.thermal_gens})

    @staticmethod
    def all_on(sys: System) -> "SystemState":
        """Everything on at minimum output with min-up already served."""
        return SystemState({
            g.id: GenState(+max(g.min_up, g.min_down), g.p_min) for g in sys.thermal_gens})

    def validate(self, sys: System) -> None:
        for g in sys.thermal_gens:
            st = self.gens.get(g.id)
            if st is None:
                raise InfeasibleInitialState(f"no state for generator '{g.id}'")
            if st.hours_in_state == 0:
                raise InfeasibleInitialState(f"'{g.id}': hours_in_state must be nonzero")
            if abs(st.last_dispatch) > g.p_max + 1e-9:
                raise InfeasibleInitialState(
                    f"'{g.id}': last dispatch {st.last_dispatch} exceeds p_max {g.p_max}")


@dataclass
class CommitmentSchedule:
    """Per-generator on/off and startup indicators over a decision horizon."""
    horizon_h: int
    start: int  # tick of hour 0, seconds
    u: dict[str, np.ndarray]          # int 0/1 per hour
    startup: dict[str, np.ndarray]    # int 0/1 per hour, derived from u
    initial_status: dict[str, int]    # u before hour 0

    def hour(self, t: int) -> dict[str, int]:
        return {g: int(self.u[g][t]) for g in self.u}


@dataclass
class DispatchResult:
    """Typed primal values plus the recomputed cost decomposition."""
    step_h: float
    gen_mw: dict[str, np.ndarray]
    wind_mw: dict[str, np.ndarray]
    shed_mw: dict[str, np.ndarray]
    overgen_mw: np.ndarray            # summed over buses, per interval
    flow_mw: dict[str, np.ndarray]
    cost_no_load: float
    cost_startup: float
    cost_variable: float
    cost_shed: float
    cost_overgen: float
    balance_residual_max: float

    def total_cost(self) -> float:
        return (self.cost_no_load + self.cost_startup + self.cost_variable
                + self.cost_shed + self.cost_overgen)

    def shed_total_mwh(self) -> float:
        return float(sum(arr.sum() for arr in self.shed_mw.values()) * self.step_h)


class VarMap:
    """Bijection between named model variables and standard-form columns."""

    def __init__(self, kind: str):
        self.kind = kind
        self._to_col: dict[tuple, int] = {}
        self._to_key: dict[int, tuple] = {}
        self.meta: dict = {}

    def add(self, key: tuple, col: int) -> None:
        if key in self._to_col or col in self._to_key:
            raise ValueError(f"duplicate variable mapping for {key}")
        self._to_col[key] = col
        self._to_key[col] = key

    def col(self, *key) -> int:
        return self._to_col[key]

    def has(self, *key) -> bool:
        return key in self._to_col

    def key(self, col: int) -> tuple:
        return self._to_key[col]

    def __len__(self) -> int:
        return len(self._to_col)


# -- forecast plumbing ---------------------------------------------------------


def _guard_forecast(fs, owner: str) -> ForecastSet:
    if not isinstance(fs, ForecastSet):
        raise ForecastLeakage(
            f"decision model for '{owner}' requires a ForecastSet, got {type(fs).__name__}")
    for ts in fs.all_series():
        if not ts.provenance.startswith("forecast"):
            raise ForecastLeakage(
                f"series for '{owner}' has provenance '{ts.provenance}', not a forecast")
    return fs


def _point_values(fs: ForecastSet, owner: str, horizon_h: int) -> np.ndarray:
    fs = _guard_forecast(fs, owner)
    if fs.point is None:
        raise HorizonMismatch(f"'{owner}': point forecast required")
    if fs.point.resolution != 3600 or len(fs.point) < horizon_h:
        raise HorizonMismatch(
            f"'{owner}': need {horizon_h} hourly values, have {len(fs.point)}"
            f" at {fs.point.resolution}s")
    return fs.point.values[:horizon_h]


def _scenario_values(fs: ForecastSet, owner: str, horizon_h: int) -> tuple[np.ndarray, tuple[float, ...]]:
    """(S, horizon) array of scenario values plus probabilities."""
    fs = _guard_forecast(fs, owner)
    if not fs.scenarios:
        raise HorizonMismatch(f"'{owner}': scenario set required")
    rows = []
    for s in fs.scenarios:
        if s.resolution != 3600 or len(s) < horizon_h:
            raise HorizonMismatch(
                f"'{owner}': need {horizon_h} hourly values per scenario, have {len(s)}")
        rows.append(s.values[:horizon_h])
    return np.vstack(rows), fs.probabilities


def _forced_prefixes(gen: ThermalGen, st: GenState) -> tuple[int, int]:
    """(hours forced on, hours forced off) implied by hours-in-state."""
    if st.on:
        return max(0, gen.min_up - st.hours_in_state), 0
    return 0, max(0, gen.min_down + st.hours_in_state)  # hours_in_state < 0


def _pre_horizon_status(st: GenState, tau: int) -> int:
    """Commitment status at pre-horizon hour tau < 0.

    hours_in_state counts hours since the last transition, so the state
    flips exactly once when looking back past that boundary.
    """
    h = abs(st.hours_in_state)
    in_current = tau >= -h
    if st.on:
        return 1 if in_current else 0
    return 0 if in_current else 1


# -- shared physical block ------------------------------------------------------


def _add_dispatch_block(
    mp: StandardFormMP,
    vm: VarMap,
    sys: System,
    t: int,
    s: int,
    weight: float,          # probability x interval hours, multiplies $/h terms
    step_h: float,
    load_mw: dict[str, float],
    wind_cap: dict[str, float],
    voll: float,
    network: bool,
    u_col: dict[str, int] | None,    # commitment columns, or None when fixed
    u_fixed: dict[str, int] | None,  # fixed commitment for emulator models
) -> None:
    """Columns and balance/flow/capacity rows for one (hour, scenario) block."""
    tag = f"t{t}s{s}"
    # Per-gen segment columns.
    for g in sys.thermal_gens:
        widths = g.segment_widths()
        committed = 1 if u_fixed is None else u_fixed[g.id]
        for k, (w, (bp, mc)) in enumerate(zip(widths, g.cost_curve)):
            if w <= 0:
                continue
            cap = w if committed else 0.0
            col = mp.add_col(f"pseg_{g.id}_{k}_{tag}", 0.0, cap, weight * mc)
            vm.add(("pseg", g.id, k, t, s), col)
    for w in sys.renewable_gens:
        col = mp.add_col(f"wind_{w.id}_{tag}", 0.0, wind_cap[w.id], 0.0)
        vm.add(("wind", w.id, t, s), col)
    for l in sys.loads:
        col = mp.add_col(f"shed_{l.id}_{tag}", 0.0, load_mw[l.id], weight * voll)
        vm.add(("shed", l.id, t, s), col)

    base_mc = {g.id: g.cost_curve[0][1] for g in sys.thermal_gens}

    if network:
        ref = sys.reference_bus()
        for b in sys.buses:
            hi = 0.0 if b.id == ref else np.inf
            lo = 0.0 if b.id == ref else -np.inf
            col = mp.add_col(f"theta_{b.id}_{tag}", lo, hi, 0.0)
            vm.add(("theta", b.id, t, s), col)
        for b in sys.buses:
            col = mp.add_col(f"over_{b.id}_{tag}", 0.0, np.inf, weight * voll)
            vm.add(("over", b.id, t, s), col)
        # Nodal balance rows; line flows are expressed in bus angles.
        for b in sys.buses:
            coeffs: list[tuple[int, float]] = []
            rhs = 0.0
            for g in sys.thermal_gens:
                if g.bus != b.id:
                    continue
                for k, w in enumerate(g.segment_widths()):
                    if w > 0:
                        coeffs.append((vm.col("pseg", g.id, k, t, s), 1.0))
                if u_col is not None:
                    coeffs.append((u_col[g.id], g.p_min))
                else:
                    rhs -= g.p_min * u_fixed[g.id]
            for w in sys.renewable_gens:
                if w.bus == b.id:
                    coeffs.append((vm.col("wind", w.id, t, s), 1.0))
            for l in sys.loads:
                if l.bus == b.id:
                    coeffs.append((vm.col("shed", l.id, t, s), 1.0))
                    rhs += load_mw[l.id]
            coeffs.append((vm.col("over", b.id, t, s), -1.0))
            for line in sys.lines:
                if line.from_bus == b.id or line.to_bus == b.id:
                    k = sys.base_power * line.susceptance
                    sign = -1.0 if line.from_bus == b.id else 1.0
                    # flow = k * (theta_from - theta_to); outflow subtracts.
                    coeffs.append((vm.col("theta", line.from_bus, t, s), sign * k))
                    coeffs.append((vm.col("theta", line.to_bus, t, s), -sign * k))
            mp.add_row(f"balance_{b.id}_{tag}", EQ, rhs, coeffs)
        for line in sys.lines:
            k = sys.base_power * line.susceptance
            pair = [(vm.col("theta", line.from_bus, t, s), k),
                    (vm.col("theta", line.to_bus, t, s), -k)]
            mp.add_range_row(f"flow_{line.id}_{tag}", -line.flow_limit,
                             line.flow_limit, pair)
    else:
        col = mp.add_col(f"over_sys_{tag}", 0.0, np.inf, weight * voll)
        vm.add(("over", "__system__", t, s), col)
        coeffs = []
        rhs = 0.0
        for g in sys.thermal_gens:
            for k, w in enumerate(g.segment_widths()):
                if w > 0:
                    coeffs.append((vm.col("pseg", g.id, k, t, s), 1.0))
            if u_col is not None:
                coeffs.append((u_col[g.id], g.p_min))
            else:
                rhs -= g.p_min * u_fixed[g.id]
        for w in sys.renewable_gens:
            coeffs.append((vm.col("wind", w.id, t, s), 1.0))
        for l in sys.loads:
            coeffs.append((vm.col("shed", l.id, t, s), 1.0))
            rhs += load_mw[l.id]
        coeffs.append((col, -1.0))
        mp.add_row(f"balance_sys_{tag}", EQ, rhs, coeffs)

    # Base-block energy priced at the first segment's marginal cost.
    for g in sys.thermal_gens:
        if u_col is not None:
            mp.obj[u_col[g.id]] += weight * base_mc[g.id] * g.p_min
        else:
            mp.obj_offset += weight * base_mc[g.id] * g.p_min * u_fixed[g.id]


def _seg_cols(vm: VarMap, g: ThermalGen, t: int, s: int) -> list[tuple[int, float]]:
    return [(vm.col("pseg", g.id, k, t, s), 1.0)
            for k, w in enumerate(g.segment_widths()) if w > 0]


def _p_max_above_min(g: ThermalGen) -> float:
    return g.p_max - g.p_min


# -- commitment models -----------------------------------------------------------


def _build_commitment_model(
    kind: str,
    sys: System,
    wind_rows: dict[str, np.ndarray],     # gen id -> (S, T) MW
    probs: tuple[float, ...],
    load_rows: dict[str, np.ndarray],     # load id -> (T,) MW
    state: SystemState,
    horizon_h: int,
    voll: float,
    network: bool,
) -> tuple[StandardFormMP, VarMap]:
    state.validate(sys)
    T = horizon_h
    S = len(probs)
    mp = StandardFormMP(f"{kind}_{T}h_{S}s")
    vm = VarMap(kind)
    vm.meta.update({
        "system": sys, "horizon_h": T, "n_scenarios": S, "probs": probs,
        "step_h": 1.0, "voll": voll, "network": network, "state": state,
        "load_mw": load_rows, "commit_hours": 1.0,
    })

    # Commitment variables with forced prefixes from hours-in-state.
    u_cols: dict[str, list[int]] = {}
    v_cols: dict[str, list[int]] = {}
    for g in sys.thermal_gens:
        st = state.gens[g.id]
        on_pref, off_pref = _forced_prefixes(g, st)
        ucs, vcs = [], []
        for t in range(T):
            lo = 1.0 if t < on_pref else 0.0
            hi = 0.0 if t < off_pref else 1.0
            if lo > hi:
                raise InfeasibleInitialState(
                    f"'{g.id}': contradictory min-up/min-down seed at hour {t}")
            col = mp.add_col(f"u_{g.id}_t{t}", lo, hi, g.no_load_cost, integral=True)
            vm.add(("u", g.id, t), col)
            ucs.append(col)
            col = mp.add_col(f"v_{g.id}_t{t}", 0.0, 1.0, g.startup_cost)
            vm.add(("v", g.id, t), col)
            vcs.append(col)
        u_cols[g.id] = ucs
        v_cols[g.id] = vcs

    # Startup logic and min-up/min-down windows (turn-on inequalities).
    for g in sys.thermal_gens:
        st = state.gens[g.id]
        u0 = 1 if st.on else 0
        ucs, vcs = u_cols[g.id], v_cols[g.id]
        for t in range(T):
            if t == 0:
                mp.add_row(f"start_{g.id}_t0", GE, -u0,
                           [(vcs[0], 1.0), (ucs[0], -1.0)])
                mp.add_row(f"nostart_{g.id}_t0", LE, 1 - u0, [(vcs[0], 1.0)])
            else:
                mp.add_row(f"start_{g.id}_t{t}", GE, 0.0,
                           [(vcs[t], 1.0), (ucs[t], -1.0), (ucs[t - 1], 1.0)])
                mp.add_row(f"nostart_{g.id}_t{t}", LE, 1.0,
                           [(vcs[t], 1.0), (ucs[t - 1], 1.0)])
        for t in range(T):
            window = [(vcs[tau], 1.0) for tau in range(max(0, t - g.min_up + 1), t + 1)]
            mp.add_row(f"minup_{g.id}_t{t}", LE, 0.0, window + [(ucs[t], -1.0)])
        for t in range(T):
            window = [(vcs[tau], 1.0) for tau in range(max(0, t - g.min_down + 1), t + 1)]
            ref = t - g.min_down
            if ref >= 0:
                mp.add_row(f"mindown_{g.id}_t{t}", LE, 1.0, window + [(ucs[ref], 1.0)])
            else:
                u_ref = _pre_horizon_status(st, ref)
                mp.add_row(f"mindown_{g.id}_t{t}", LE, 1.0 - u_ref, window)

    # Per-scenario dispatch blocks.
    for s in range(S):
        for t in range(T):
            load_mw = {lid: float(load_rows[lid][t]) for lid in load_rows}
            wind_cap = {wid: float(wind_rows[wid][s][t]) for wid in wind_rows}
            _add_dispatch_block(
                mp, vm, sys, t, s, weight=probs[s], step_h=1.0,
                load_mw=load_mw, wind_cap=wind_cap, voll=voll, network=network,
                u_col={g.id: u_cols[g.id][t] for g in sys.thermal_gens}, u_fixed=None)

    # Capacity link and ramps per scenario. Startup and shutdown hours get a
    # ramp allowance of max(p_min, ramp): a unit may come on at its minimum
    # and must descend to near-minimum before switching off.
    for g in sys.thermal_gens:
        st = state.gens[g.id]
        u0 = 1 if st.on else 0
        span = _p_max_above_min(g)
        su = max(g.p_min, g.ramp_up)
        sd = max(g.p_min, g.ramp_down)
        # A ramp of at least p_max can never bind against outputs in
        # [0, p_max]; skip those rows entirely.
        need_up = g.ramp_up < g.p_max
        need_down = g.ramp_down < g.p_max
        for s in range(S):
            for t in range(T):
                segs = _seg_cols(vm, g, t, s)
                if segs:
                    mp.add_row(f"pmax_{g.id}_t{t}s{s}", LE, 0.0,
                               segs + [(u_cols[g.id][t], -span)])
                # p(t) - p(t-1) <= ramp_up * u(t-1) + su * v(t)
                if need_up:
                    up = segs + [(u_cols[g.id][t], g.p_min), (v_cols[g.id][t], -su)]
                    if t == 0:
                        mp.add_row(f"rampup_{g.id}_t0s{s}", LE,
                                   g.ramp_up * u0 + st.last_dispatch, up)
                    else:
                        prev = _seg_cols(vm, g, t - 1, s)
                        mp.add_row(f"rampup_{g.id}_t{t}s{s}", LE, 0.0,
                                   up + [(c, -w) for c, w in prev]
                                   + [(u_cols[g.id][t - 1], -(g.p_min + g.ramp_up))])
                # p(t-1) - p(t) <= ramp_down * u(t) + sd * (u(t-1) - u(t) + v(t))
                if need_down:
                    down = [(c, -w) for c, w in segs]
                    down.append((u_cols[g.id][t], sd - g.ramp_down - g.p_min))
                    down.append((v_cols[g.id][t], -sd))
                    if t == 0:
                        mp.add_row(f"rampdn_{g.id}_t0s{s}", LE,
                                   sd * u0 - st.last_dispatch, down)
                    else:
                        prev = _seg_cols(vm, g, t - 1, s)
                        mp.add_row(f"rampdn_{g.id}_t{t}s{s}", LE, 0.0,
                                   down + [(c, w) for c, w in prev]
                                   + [(u_cols[g.id][t - 1], g.p_min - sd)])
    return mp, vm


def build_uc(
    sys: System,
    wind_forecasts: Mapping[str, ForecastSet],
    load_forecasts: Mapping[str, ForecastSet],
    state: SystemState,
    horizon_h: int,
    voll: float = DEFAULT_VOLL,
    network: bool = True,
) -> tuple[StandardFormMP, VarMap]:
    """Deterministic day-ahead unit commitment MILP on point forecasts."""
    wind_rows = {
        w.id: _point_values(wind_forecasts[w.id], w.id, horizon_h)[None, :]
        for w in sys.renewable_gens
    }
    load_rows = {
        l.id: _point_values(load_forecasts[l.id], l.id, horizon_h)
        for l in sys.loads
    }
    return _build_commitment_model(
        "uc", sys, wind_rows, (1.0,), load_rows, state, horizon_h, voll, network)


def build_suc(
    sys: System,
    wind_scenarios: Mapping[str, ForecastSet],
    load_forecasts: Mapping[str, ForecastSet],
    state: SystemState,
    horizon_h: int,
    voll: float = DEFAULT_VOLL,
    network: bool = True,
) -> tuple[StandardFormMP, VarMap]:
    """Two-stage stochastic UC, extensive form.

    First-stage commitment is shared across scenarios by construction
    (nonanticipativity); dispatch, shed, and flows are per scenario and
    weighted by scenario probability in the objective.
    """
    wind_rows: dict[str, np.ndarray] = {}
    probs: tuple[float, ...] | None = None
    for w in sys.renewable_gens:
        rows, p = _scenario_values(wind_scenarios[w.id], w.id, horizon_h)
        if probs is None:
            probs = p
        elif len(p) != len(probs) or any(abs(a - b) > 1e-12 for a, b in zip(p, probs)):
            raise HorizonMismatch("wind scenario sets must share count and probabilities")
        wind_rows[w.id] = rows
    if probs is None:
        probs = (1.0,)
    load_rows = {
        l.id: _point_values(load_forecasts[l.id], l.id, horizon_h)
        for l in sys.loads
    }
    return _build_commitment_model(
        "suc", sys, wind_rows, probs, load_rows, state, horizon_h, voll, network)


# -- emulator model -----------------------------------------------------------------


def build_ed(
    sys: System,
    realizations: Mapping[str, RealizationSeries],
    commitment: Mapping[str, int],
    state: SystemState,
    n_steps: int = 12,
    step_s: int = 300,
    voll: float = DEFAULT_VOLL,
    network: bool = True,
) -> tuple[StandardFormMP, VarMap]:
    """Economic-dispatch LP over one committed hour at emulator resolution.

    The commitment is data, not variables; ramp limits scale to the step
    length and couple interval 0 to the previous hour's final dispatch
    unless the unit's status changed at the hour boundary. Commitment costs
    are deliberately absent: they are priced once, in the decision stage.
    """
    state.validate(sys)
    for g in sys.thermal_gens:
        if g.id not in commitment:
            raise CommitmentMissing(f"no commitment for generator '{g.id}'")
    step_h = step_s / 3600.0
    mp = StandardFormMP(f"ed_{n_steps}x{step_s}s")
    vm = VarMap("ed")
    u_fixed = {g.id: int(commitment[g.id]) for g in sys.thermal_gens}

    load_vals: dict[str, np.ndarray] = {}
    wind_vals: dict[str, np.ndarray] = {}
    for l in sys.loads:
        rs = realizations.get(l.id)
        if not isinstance(rs, RealizationSeries):
            raise ForecastLeakage(
                f"emulator requires a RealizationSeries for '{l.id}', got {type(rs).__name__}")
        if len(rs.series) < n_steps or rs.series.resolution != step_s:
            raise HorizonMismatch(
                f"'{l.id}': need {n_steps} steps at {step_s}s, have {len(rs.series)}"
                f" at {rs.series.resolution}s")
        load_vals[l.id] = rs.series.values[:n_steps]
    for w in sys.renewable_gens:
        rs = realizations.get(w.id)
        if not isinstance(rs, RealizationSeries):
            raise ForecastLeakage(
                f"emulator requires a RealizationSeries for '{w.id}', got {type(rs).__name__}")
        if len(rs.series) < n_steps or rs.series.resolution != step_s:
            raise HorizonMismatch(f"'{w.id}': need {n_steps} steps at {step_s}s")
        wind_vals[w.id] = rs.series.values[:n_steps]

    vm.meta.update({
        "system": sys, "horizon_h": n_steps, "n_scenarios": 1, "probs": (1.0,),
        "step_h": step_h, "voll": voll, "network": network, "state": state,
        "load_mw": load_vals, "commitment": u_fixed, "commit_hours": 0.0,
    })

    for t in range(n_steps):
        _add_dispatch_block(
            mp, vm, sys, t, 0, weight=step_h, step_h=step_h,
            load_mw={lid: float(load_vals[lid][t]) for lid in load_vals},
            wind_cap={wid: float(wind_vals[wid][t]) for wid in wind_vals},
            voll=voll, network=network, u_col=None, u_fixed=u_fixed)

    # Ramps between intervals, scaled to the step length.
    for g in sys.thermal_gens:
        if not u_fixed[g.id]:
            continue  # output fixed at zero by segment bounds
        st = state.gens[g.id]
        ru = g.ramp_up * step_h
        rd = g.ramp_down * step_h
        for t in range(n_steps):
            segs = _seg_cols(vm, g, t, 0)
            if t == 0:
                # Status flip at the hour boundary exempts the first step.
                if (st.hours_in_state > 0) != bool(u_fixed[g.id]):
                    continue
                base = st.last_dispatch - g.p_min  # segment-space previous point
                mp.add_row(f"rampup_{g.id}_t0", LE, ru + base, segs)
                mp.add_row(f"rampdn_{g.id}_t0", GE, -rd + base, segs)
            else:
                prev = _seg_cols(vm, g, t - 1, 0)
                both = segs + [(c, -w) for c, w in prev]
                mp.add_row(f"rampup_{g.id}_t{t}", LE, ru, both)
                mp.add_row(f"rampdn_{g.id}_t{t}", GE, -rd, both)
    return mp, vm


# -- extraction ----------------------------------------------------------------------


def extract_commitment(solution: Solution, vm: VarMap,
                       integrality_tol: float = 1e-6,
                       allow_incumbent: bool = False) -> CommitmentSchedule:
    """Round solved binaries into a schedule; startups derive from u.

    allow_incumbent accepts a NodeLimit/TimeLimit solution that carries an
    incumbent, mirroring operational practice of dispatching the best
    schedule found when the solver is cut off.
    """
    usable = solution.status == OPTIMAL or (
        allow_incumbent and solution.x is not None)
    if not usable:
        raise StatusNotOptimal(f"cannot extract commitment from status {solution.status}")
    sys: System = vm.meta["system"]
    state: SystemState = vm.meta["state"]
    T = vm.meta["horizon_h"]
    u: dict[str, np.ndarray] = {}
    startup: dict[str, np.ndarray] = {}
    initial: dict[str, int] = {}
    for g in sys.thermal_gens:
        vals = np.array([solution.x[vm.col("u", g.id, t)] for t in range(T)])
        if np.any(np.abs(vals - np.round(vals)) > integrality_tol):
            worst = float(np.max(np.abs(vals - np.round(vals))))
            raise NonIntegralBinary(f"'{g.id}': commitment off integer by {worst:.2e}")
        arr = np.round(vals).astype(int)
        u0 = 1 if state.gens[g.id].on else 0
        prev = np.concatenate([[u0], arr[:-1]])
        u[g.id] = arr
        startup[g.id] = np.maximum(arr - prev, 0)
        initial[g.id] = u0
    return CommitmentSchedule(horizon_h=T, start=0, u=u, startup=startup,
                              initial_status=initial)


def extract_dispatch(solution: Solution, vm: VarMap, scenario: int = 0) -> DispatchResult:
    """Typed dispatch for one scenario plus the full cost recomputation.

    Cost components are recomputed from primal values and parameters over
    all scenarios (probability-weighted), so their sum reproduces the
    solver objective; the MW arrays describe the requested scenario.
    """
    if solution.status != OPTIMAL:
        raise StatusNotOptimal(f"cannot extract dispatch from status {solution.status}")
    sys: System = vm.meta["system"]
    T = vm.meta["horizon_h"]
    S = vm.meta["n_scenarios"]
    probs = vm.meta["probs"]
    step_h = vm.meta["step_h"]
    voll = vm.meta["voll"]
    network = vm.meta["network"]
    x = solution.x

    def p_gen(g: ThermalGen, t: int, s: int) -> float:
        if vm.kind == "ed":
            committed = vm.meta["commitment"][g.id]
        else:
            committed = x[vm.col("u", g.id, t)]
        total = g.p_min * committed
        for k, w in enumerate(g.segment_widths()):
            if w > 0:
                total += x[vm.col("pseg", g.id, k, t, s)]
        return float(total)

    gen_mw = {g.id: np.array([p_gen(g, t, scenario) for t in range(T)])
              for g in sys.thermal_gens}
    wind_mw = {w.id: np.array([x[vm.col("wind", w.id, t, scenario)] for t in range(T)])
               for w in sys.renewable_gens}
    shed_mw = {l.id: np.array([x[vm.col("shed", l.id, t, scenario)] for t in range(T)])
               for l in sys.loads}
    if network:
        over = np.array([
            sum(x[vm.col("over", b.id, t, scenario)] for b in sys.buses)
            for t in range(T)])
        flow_mw = {}
        for line in sys.lines:
            k = sys.base_power * line.susceptance
            flow_mw[line.id] = np.array([
                k * (x[vm.col("theta", line.from_bus, t, scenario)]
                     - x[vm.col("theta", line.to_bus, t, scenario)])
                for t in range(T)])
    else:
        over = np.array([x[vm.col("over", "__system__", t, scenario)] for t in range(T)])
        flow_mw = {}

    # Cost recomputation across all scenarios (double-entry vs objective).
    cost_no_load = cost_startup = 0.0
    commit_hours = vm.meta.get("commit_hours", 0.0)
    if vm.kind in ("uc", "suc"):
        for g in sys.thermal_gens:
            for t in range(T):
                cost_no_load += g.no_load_cost * x[vm.col("u", g.id, t)] * commit_hours
                cost_startup += g.startup_cost * x[vm.col("v", g.id, t)]
    cost_variable = cost_shed = cost_overgen = 0.0
    for s in range(S):
        w_s = probs[s] * step_h
        for g in sys.thermal_gens:
            base_mc = g.cost_curve[0][1]
            for t in range(T):
                if vm.kind == "ed":
                    committed = vm.meta["commitment"][g.id]
                else:
                    committed = x[vm.col("u", g.id, t)]
                cost_variable += w_s * base_mc * g.p_min * committed
                for k, (w, (bp, mc)) in enumerate(zip(g.segment_widths(), g.cost_curve)):
                    if w > 0:
                        cost_variable += w_s * mc * x[vm.col("pseg", g.id, k, t, s)]
        for l in sys.loads:
            for t in range(T):
                cost_shed += w_s * voll * x[vm.col("shed", l.id, t, s)]
        if network:
            for b in sys.buses:
                for t in range(T):
                    cost_overgen += w_s * voll * x[vm.col("over", b.id, t, s)]
        else:
            for t in range(T):
                cost_overgen += w_s * voll * x[vm.col("over", "__system__", t, s)]

    # Nodal balance residual from the typed values, not solver rows.
    load_mw = vm.meta["load_mw"]
    resid_max = 0.0
    for t in range(T):
        if network:
            for b in sys.buses:
                r = 0.0
                for g in sys.thermal_gens:
                    if g.bus == b.id:
                        r += gen_mw[g.id][t]
                for w in sys.renewable_gens:
                    if w.bus == b.id:
                        r += wind_mw[w.id][t]
                for l in sys.loads:
                    if l.bus == b.id:
                        r += shed_mw[l.id][t] - float(load_mw[l.id][t])
                for line in sys.lines:
                    if line.from_bus == b.id:
                        r -= flow_mw[line.id][t]
                    elif line.to_bus == b.id:
                        r += flow_mw[line.id][t]
                r -= x[vm.col("over", b.id, t, scenario)]
                resid_max = max(resid_max, abs(r))
        else:
            r = sum(gen_mw[g.id][t] for g in sys.thermal_gens)
            r += sum(wind_mw[w.id][t] for w in sys.renewable_gens)
            r += sum(shed_mw[l.id][t] for l in sys.loads)
            r -= sum(float(load_mw[l.id][t]) for l in sys.loads)
            r -= over[t]
            resid_max = max(resid_max, abs(r))

    return DispatchResult(
        step_h=step_h,
        gen_mw=gen_mw, wind_mw=wind_mw, shed_mw=shed_mw,
        overgen_mw=over, flow_mw=flow_mw,
        cost_no_load=float(cost_no_load), cost_startup=float(cost_startup),
        cost_variable=float(cost_variable), cost_shed=float(cost_shed),
        cost_overgen=float(cost_overgen),
        balance_residual_max=float(resid_max),
    )
