"""Results workflow: archive raw output, compute metrics, aggregate, report.

Raw simulation output is archived per test set before any aggregation, so
metrics can always be recomputed from disk alone. Wall-clock measurements
live in dedicated timing files that are listed, but not digested, by the
manifest: two runs of the same experiment produce byte-identical digested
files while still reporting honest computational cost.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .data_model import System
from .errors import EmptyGroup, IncompleteRun, IoFailure
from .experiment import ExperimentPlan
from .simulation import CaseRun, ExecutionRecord

COST_METRICS = ("fuel_cost_total", "cost_commitment", "cost_variable", "ens_MWh")
TIMING_METRICS = ("solve_time_decision_avg", "solve_time_decision_max",
                  "solve_time_ed_avg")
ALL_METRICS = COST_METRICS + TIMING_METRICS


@dataclass(frozen=True)
class MetricRecord:
    trial_index: int
    treatment: str
    metric: str
    value: float


@dataclass(frozen=True)
class SummaryStats:
    treatment: str
    metric: str
    min: float
    p5: float
    q1: float
    median: float
    q3: float
    p95: float
    max: float
    mean: float
    n: int


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


# -- archiving -------------------------------------------------------------------


def _case_run_doc(run: CaseRun) -> dict:
    """JSON document for a case run, wall times excluded by design."""
    return {
        "test_set_id": run.test_set_id,
        "aborted": run.aborted,
        "records": [
            {"model": r.model, "clock_h": r.clock_h, "status": r.status,
             "objective": r.objective, "iterations": r.iterations,
             "nodes": r.nodes, "flagged": r.flagged}
            for r in run.records
        ],
        "steps": [
            {
                "clock_h": s.clock_h,
                "applied_h": s.applied_h,
                "commitment": {g: arr.tolist() for g, arr in s.commitment.u.items()},
                "startup": {g: arr.tolist() for g, arr in s.commitment.startup.items()},
                "initial_status": s.commitment.initial_status,
                "wind_scenarios": s.wind_scenarios,
                "dispatch_costs": [
                    {"no_load": d.cost_no_load, "startup": d.cost_startup,
                     "variable": d.cost_variable, "shed": d.cost_shed,
                     "overgen": d.cost_overgen, "shed_mwh": d.shed_total_mwh(),
                     "step_h": d.step_h,
                     "balance_residual_max": d.balance_residual_max}
                    for d in s.dispatches
                ],
            }
            for s in run.steps
        ],
        "final_state": {g: [st.hours_in_state, st.last_dispatch]
                        for g, st in run.final_state.gens.items()},
    }


def archive_case(run: CaseRun, case_dir: Path) -> dict[str, str]:
    """Write one case's raw output; returns per-file digests.

    Files: case_run.json (solves, schedules, costs), dispatch.csv (full MW
    tables), commitment.csv (applied timeline), timings.json (wall clock,
    excluded from digests).
    """
    case_dir.mkdir(parents=True, exist_ok=True)
    digests: dict[str, str] = {}

    doc = _case_run_doc(run)
    path = case_dir / "case_run.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    digests["case_run.json"] = sha256_file(path)

    path = case_dir / "dispatch.csv"
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "interval", "kind", "id", "value_mw"])
        for s in run.steps:
            for h, d in enumerate(s.dispatches):
                hour = s.clock_h + h
                for gid, arr in sorted(d.gen_mw.items()):
                    for i, v in enumerate(arr):
                        w.writerow([hour, i, "gen", gid, _fmt(float(v))])
                for gid, arr in sorted(d.wind_mw.items()):
                    for i, v in enumerate(arr):
                        w.writerow([hour, i, "wind", gid, _fmt(float(v))])
                for lid, arr in sorted(d.shed_mw.items()):
                    for i, v in enumerate(arr):
                        w.writerow([hour, i, "shed", lid, _fmt(float(v))])
                for i, v in enumerate(d.overgen_mw):
                    w.writerow([hour, i, "overgen", "system", _fmt(float(v))])
                for lid, arr in sorted(d.flow_mw.items()):
                    for i, v in enumerate(arr):
                        w.writerow([hour, i, "flow", lid, _fmt(float(v))])
    digests["dispatch.csv"] = sha256_file(path)

    path = case_dir / "commitment.csv"
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "gen", "on", "startup"])
        for s in run.steps:
            for h in range(s.applied_h):
                for gid in sorted(s.commitment.u):
                    w.writerow([s.clock_h + h, gid,
                                int(s.commitment.u[gid][h]),
                                int(s.commitment.startup[gid][h])])
    digests["commitment.csv"] = sha256_file(path)

    path = case_dir / "timings.json"
    path.write_text(json.dumps(
        {"wall_time_s": [r.wall_time_s for r in run.records]}, indent=1) + "\n")

    return digests


@dataclass
class LoadedCase:
    """The archive-backed view of a case, sufficient for all metrics."""
    test_set_id: str
    trial_index: int
    treatment: str
    aborted: str | None
    records: list[ExecutionRecord]
    applied_commitment: dict[str, list[tuple[int, int]]]  # gen -> [(on, startup)]
    dispatch_costs: list[dict]


def load_case(case_dir: Path) -> LoadedCase:
    doc = json.loads((case_dir / "case_run.json").read_text())
    timings = json.loads((case_dir / "timings.json").read_text())["wall_time_s"]
    records = [
        ExecutionRecord(model=r["model"], clock_h=r["clock_h"], status=r["status"],
                        objective=r["objective"], wall_time_s=timings[i],
                        iterations=r["iterations"], nodes=r["nodes"],
                        flagged=r.get("flagged", False))
        for i, r in enumerate(doc["records"])
    ]
    applied: dict[str, list[tuple[int, int]]] = {}
    costs: list[dict] = []
    for s in doc["steps"]:
        for g, u in s["commitment"].items():
            row = applied.setdefault(g, [])
            for h in range(s["applied_h"]):
                row.append((int(u[h]), int(s["startup"][g][h])))
        costs.extend(s["dispatch_costs"])
    trial_index, treatment = _split_test_set_id(doc["test_set_id"])
    return LoadedCase(
        test_set_id=doc["test_set_id"], trial_index=trial_index,
        treatment=treatment, aborted=doc["aborted"], records=records,
        applied_commitment=applied, dispatch_costs=costs)


def _split_test_set_id(ts_id: str) -> tuple[int, str]:
    trial_part, treatment = ts_id.split("__", 1)
    return int(trial_part[1:]), treatment


# -- metrics --------------------------------------------------------------------


def compute_metrics(case: LoadedCase, system: System) -> list[MetricRecord]:
    """Disaggregated per-case metrics from archived content.

    Commitment costs are priced once from the applied schedule; variable
    and shed quantities come from the emulator dispatches.
    """
    if case.aborted:
        raise IncompleteRun(f"{case.test_set_id}: aborted ({case.aborted})")
    gens = {g.id: g for g in system.thermal_gens}
    cost_commitment = 0.0
    for gid, rows in case.applied_commitment.items():
        g = gens[gid]
        for on, startup in rows:
            cost_commitment += g.no_load_cost * on + g.startup_cost * startup
    cost_variable = sum(d["variable"] for d in case.dispatch_costs)
    ens = sum(d["shed_mwh"] for d in case.dispatch_costs)
    dec_times = [r.wall_time_s for r in case.records if r.model != "ed"]
    ed_times = [r.wall_time_s for r in case.records if r.model == "ed"]
    if not dec_times or not ed_times:
        raise IncompleteRun(f"{case.test_set_id}: missing solver records")
    values = {
        "fuel_cost_total": cost_commitment + cost_variable,
        "cost_commitment": cost_commitment,
        "cost_variable": cost_variable,
        "ens_MWh": ens,
        "solve_time_decision_avg": sum(dec_times) / len(dec_times),
        "solve_time_decision_max": max(dec_times),
        "solve_time_ed_avg": sum(ed_times) / len(ed_times),
    }
    return [MetricRecord(case.trial_index, case.treatment, m, float(values[m]))
            for m in ALL_METRICS]


def aggregate(records: list[MetricRecord]) -> list[SummaryStats]:
    """Cross-trial statistics with type-7 (linear interpolation) quantiles."""
    groups: dict[tuple[str, str], list[float]] = {}
    for r in records:
        groups.setdefault((r.treatment, r.metric), []).append(r.value)
    out = []
    for (treatment, metric) in sorted(groups):
        vals = np.array(groups[(treatment, metric)], dtype=float)
        if len(vals) == 0:
            raise EmptyGroup(f"no records for ({treatment}, {metric})")
        q = np.quantile(vals, [0.05, 0.25, 0.5, 0.75, 0.95])
        out.append(SummaryStats(
            treatment=treatment, metric=metric,
            min=float(vals.min()), p5=float(q[0]), q1=float(q[1]),
            median=float(q[2]), q3=float(q[3]), p95=float(q[4]),
            max=float(vals.max()), mean=float(vals.mean()), n=len(vals)))
    return out


# -- report files ----------------------------------------------------------------


_SUMMARY_COLS = ["treatment", "metric", "min", "p5", "q1", "median", "q3",
                 "p95", "max", "mean", "n"]


def _write_summary_csv(path: Path, stats: list[SummaryStats]) -> None:
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_SUMMARY_COLS)
        for s in stats:
            w.writerow([s.treatment, s.metric, _fmt(s.min), _fmt(s.p5), _fmt(s.q1),
                        _fmt(s.median), _fmt(s.q3), _fmt(s.p95), _fmt(s.max),
                        _fmt(s.mean), s.n])


def write_report(records: list[MetricRecord], out_dir: Path) -> list[Path]:
    """metrics.csv (long format, box-plot-ready) plus summary tables.

    summary.csv carries the deterministic cost/energy metrics; timing
    metrics go to summary_timing.csv so that reproduction checks can
    compare summary.csv byte-for-byte.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = out_dir / "metrics.csv"
        with open(metrics_path, "w", newline="\n") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "treatment", "metric", "value"])
            for r in sorted(records, key=lambda r: (r.trial_index, r.treatment,
                                                    ALL_METRICS.index(r.metric))):
                w.writerow([r.trial_index, r.treatment, r.metric, _fmt(r.value)])
        stats = aggregate(records)
        cost_stats = [s for s in stats if s.metric in COST_METRICS]
        timing_stats = [s for s in stats if s.metric in TIMING_METRICS]
        summary_path = out_dir / "summary.csv"
        _write_summary_csv(summary_path, cost_stats)
        timing_path = out_dir / "summary_timing.csv"
        _write_summary_csv(timing_path, timing_stats)
        return [metrics_path, summary_path, timing_path]
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out_dir}: {exc}") from exc


# -- manifest ---------------------------------------------------------------------


def write_manifest(plan: ExperimentPlan, archive_digests: dict[str, dict[str, str]],
                   out_dir: Path, overrides: dict | None = None,
                   timing_files: list[str] | None = None) -> Path:
    """Machine-readable record sufficient to verify a reproduction."""
    params = plan.parameters
    ts_dir = Path(params.timeseries_dir)
    series_digests = {
        p.name: sha256_file(p) for p in sorted(ts_dir.glob("*.csv"))
    } if ts_dir.is_dir() else {}
    doc = {
        "experiment_id": params.experiment_id,
        "config": params.config_verbatim,
        "overrides": overrides or {},
        "master_seed": params.master_seed,
        "system_file_digest": sha256_file(Path(params.system_file)),
        "timeseries_digests": series_digests,
        "solver_settings": params.solver_settings.to_dict(),
        "treatments": [t.to_dict() for t in plan.treatments],
        "trials": [
            {"index": t.trial_index, "window_start_day": t.window_start_day,
             "window_length_days": t.window_length_days,
             "trial_seed": t.trial_seed}
            for t in plan.trials
        ],
        "archive_digests": archive_digests,
        "timing_files": timing_files or [],
        "software_versions": {
            "gridexp": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_clock_note": f"{time.strftime('%Y-%m-%dT%H:%M:%S%z')} on {platform.node()}",
    }
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        return path
    except OSError as exc:
        raise IoFailure(f"cannot write manifest: {exc}") from exc


def manifest_diff(path_a: Path, path_b: Path,
                  ignore: tuple[str, ...] = ("wall_clock_note",)) -> list[str]:
    """Field-wise manifest comparison; returns the differing field paths."""
    a = json.loads(Path(path_a).read_text())
    b = json.loads(Path(path_b).read_text())
    diffs: list[str] = []

    def walk(x, y, prefix):
        if prefix in ignore:
            return
        if isinstance(x, dict) and isinstance(y, dict):
            for k in sorted(set(x) | set(y)):
                walk(x.get(k), y.get(k), f"{prefix}.{k}" if prefix else k)
        elif isinstance(x, list) and isinstance(y, list) and len(x) == len(y):
            for i, (xi, yi) in enumerate(zip(x, y)):
                walk(xi, yi, f"{prefix}[{i}]")
        elif x != y:
            diffs.append(prefix)

    walk(a, b, "")
    return diffs
