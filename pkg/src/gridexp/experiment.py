"""Experiment plan: parameters, confounding trials, treatments, test sets.

The data hierarchy has three levels: a single set of experiment parameters
fixed for the whole experiment, confounding trials that vary the data
window and random draws, and independent-variable treatments (the decision
models under comparison). One test set is one (trial, treatment) pair; the
plan is the full cross-product.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .data_model import System, TimeSeries, parse_system, parse_timeseries, resample_stepwise
from .errors import MalformedFile, WindowOverrun
from .scenario_gen import splitmix64
from .solver import SolverSettings

DAYS_PER_YEAR = 365

TREATMENT_KINDS = ("deterministic_uc", "stochastic_uc", "rolling_uc")

SYNCHRONIZED = "Synchronized"
RECEDING_HORIZON = "RecedingHorizon"


@dataclass(frozen=True)
class Treatment:
    """One independent-variable setting: a decision model and its forecasts."""
    kind: str
    name: str
    n_scenarios: int = 0        # stochastic_uc only
    relative_sd: float = 0.0
    truncation: tuple[float, float] = (0.0, 2.0)
    lookahead_h: int = 24
    apply_h: int = 24

    def __post_init__(self):
        if self.kind not in TREATMENT_KINDS:
            raise MalformedFile(f"unknown treatment kind '{self.kind}'")
        if self.kind == "stochastic_uc" and self.n_scenarios < 1:
            raise MalformedFile("stochastic_uc requires n_scenarios >= 1")
        if self.kind == "rolling_uc" and self.lookahead_h <= self.apply_h:
            raise MalformedFile("rolling_uc requires lookahead_h > apply_h")

    @property
    def chronology(self) -> str:
        return RECEDING_HORIZON if self.kind == "rolling_uc" else SYNCHRONIZED

    @staticmethod
    def from_dict(d: dict) -> "Treatment":
        kind = d.get("kind", "")
        n = int(d.get("scenarios", 0))
        name = d.get("name") or (f"{kind}_n{n}" if kind == "stochastic_uc" else kind)
        return Treatment(
            kind=kind,
            name=name,
            n_scenarios=n,
            relative_sd=float(d.get("relative_sd", 0.30)),
            truncation=tuple(d.get("truncation", (0.0, 2.0))),
            lookahead_h=int(d.get("lookahead_h", 36 if kind == "rolling_uc" else 24)),
            apply_h=int(d.get("apply_h", 24)),
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "name": self.name, "scenarios": self.n_scenarios,
            "relative_sd": self.relative_sd, "truncation": list(self.truncation),
            "lookahead_h": self.lookahead_h, "apply_h": self.apply_h,
        }


@dataclass(frozen=True)
class ExperimentParameters:
    """Everything held constant across the experiment, loaded and resolved."""
    experiment_id: str
    system: System
    system_file: str
    timeseries_dir: str
    master_seed: int
    voll: float
    emulator_resolution_s: int
    horizon_h: int
    network: bool
    solver_settings: SolverSettings
    realizations_hourly: dict[str, TimeSeries]  # device id -> annual MW series
    config_verbatim: dict

    def annual_days(self) -> int:
        lengths = {len(ts) // 24 for ts in self.realizations_hourly.values()}
        return min(lengths) if lengths else 0


@dataclass(frozen=True)
class ConfoundingTrial:
    trial_index: int
    window_start_day: int
    window_length_days: int
    trial_seed: int


@dataclass(frozen=True)
class TestSet:
    id: str
    trial: ConfoundingTrial
    treatment: Treatment


@dataclass(frozen=True)
class ExperimentPlan:
    parameters: ExperimentParameters
    trials: tuple[ConfoundingTrial, ...]
    treatments: tuple[Treatment, ...]
    test_sets: tuple[TestSet, ...]


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Trial seeds are consecutive splitmix64 outputs of the master seed."""
    state = master_seed
    out = 0
    for _ in range(trial_index + 1):
        state, out = splitmix64(state)
    return out


def window_starts(n_trials: int, window_days: int, year_days: int = DAYS_PER_YEAR) -> list[int]:
    """Evenly spaced window start days covering the year."""
    if n_trials == 1:
        return [0]
    span = year_days - window_days
    return [i * span // (n_trials - 1) for i in range(n_trials)]


def build_plan(params: ExperimentParameters, n_trials: int, window_days: int,
               treatments: list[Treatment]) -> ExperimentPlan:
    """Cross every evenly spaced trial window with every treatment."""
    if n_trials < 1:
        raise WindowOverrun("need at least one trial")
    year_days = min(params.annual_days(), DAYS_PER_YEAR) or DAYS_PER_YEAR
    if window_days > year_days:
        raise WindowOverrun(
            f"{window_days}-day window exceeds {year_days} days of annual data")
    if params.emulator_resolution_s >= params.horizon_h * 3600:
        raise WindowOverrun("emulator step must be finer than the decision interval")
    names = [t.name for t in treatments]
    if len(set(names)) != len(names):
        raise MalformedFile(f"duplicate treatment names: {names}")
    starts = window_starts(n_trials, window_days, year_days)
    if any(s + window_days > year_days for s in starts):
        raise WindowOverrun("windows exceed annual data extent")
    trials = tuple(
        ConfoundingTrial(
            trial_index=i,
            window_start_day=starts[i],
            window_length_days=window_days,
            trial_seed=derive_trial_seed(params.master_seed, i),
        )
        for i in range(n_trials)
    )
    test_sets = tuple(
        TestSet(id=f"t{trial.trial_index:03d}__{tr.name}", trial=trial, treatment=tr)
        for trial in trials
        for tr in treatments
    )
    return ExperimentPlan(parameters=params, trials=trials,
                          treatments=tuple(treatments), test_sets=test_sets)


# -- config loading ------------------------------------------------------------


REQUIRED_CONFIG_KEYS = (
    "system_file", "timeseries_dir", "master_seed", "n_trials", "window_days",
    "treatments",
)


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MalformedFile(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    for key in REQUIRED_CONFIG_KEYS:
        if key not in cfg:
            raise MalformedFile(f"{path}: missing config key '{key}'")
    return cfg


def load_experiment(config_path: str | Path,
                    overrides: dict | None = None) -> tuple[ExperimentParameters, ExperimentPlan]:
    """Parse config + data files and build the full plan.

    Paths inside the config resolve relative to the config file. Overrides
    (master_seed, n_trials, window_days, scenarios) take precedence and are
    recorded verbatim in the manifest later.
    """
    config_path = Path(config_path)
    cfg = load_config(config_path)
    overrides = dict(overrides or {})
    base = config_path.parent

    master_seed = int(overrides.get("master_seed", cfg["master_seed"]))
    n_trials = int(overrides.get("n_trials", cfg["n_trials"]))
    window_days = int(overrides.get("window_days", cfg["window_days"]))

    system_file = base / cfg["system_file"]
    system = parse_system(system_file)
    ts_dir = base / cfg["timeseries_dir"]

    realizations: dict[str, TimeSeries] = {}
    for load in system.loads:
        if not load.profile:
            raise MalformedFile(f"load '{load.id}' has no profile reference")
        prof = parse_timeseries(ts_dir / f"{load.profile}.csv", role="load")
        realizations[load.id] = TimeSeries(
            start=prof.start, resolution=prof.resolution,
            values=prof.values * load.peak,
            provenance=f"realization:{load.id}")
    for gen in system.renewable_gens:
        if not gen.profile:
            raise MalformedFile(f"renewable '{gen.id}' has no profile reference")
        prof = parse_timeseries(ts_dir / f"{gen.profile}.csv", role="wind")
        realizations[gen.id] = TimeSeries(
            start=prof.start, resolution=prof.resolution,
            values=prof.values * gen.installed_capacity,
            provenance=f"realization:{gen.id}")

    solver_cfg = dict(cfg.get("solver", {}))
    settings = SolverSettings(
        feasibility_tol=float(solver_cfg.get("feasibility_tol", 1e-9)),
        optimality_tol=float(solver_cfg.get("optimality_tol", 1e-9)),
        integrality_tol=float(solver_cfg.get("integrality_tol", 1e-6)),
        mip_gap=float(solver_cfg.get("mip_gap", 1e-4)),
        node_limit=solver_cfg.get("node_limit"),
        time_limit_s=solver_cfg.get("time_limit_s"),
        pivot_rule=str(solver_cfg.get("pivot_rule", "devex_bland")),
        refactor_every=int(solver_cfg.get("refactor_every", 100)),
    )

    treatments = [Treatment.from_dict(d) for d in cfg["treatments"]]
    if "scenarios" in overrides:
        n_scen = int(overrides["scenarios"])
        treatments = [
            Treatment.from_dict({**t.to_dict(), "scenarios": n_scen,
                                 "name": f"{t.kind}_n{n_scen}"})
            if t.kind == "stochastic_uc" else t
            for t in treatments
        ]

    params = ExperimentParameters(
        experiment_id=str(cfg.get("experiment_id", config_path.stem)),
        system=system,
        system_file=str(system_file),
        timeseries_dir=str(ts_dir),
        master_seed=master_seed,
        voll=float(cfg.get("voll", 10_000.0)),
        emulator_resolution_s=int(cfg.get("emulator_resolution_s", 300)),
        horizon_h=int(cfg.get("horizon_h", 24)),
        network=bool(cfg.get("network", True)),
        solver_settings=settings,
        realizations_hourly=realizations,
        config_verbatim=cfg,
    )
    plan = build_plan(params, n_trials, window_days, treatments)
    return params, plan
