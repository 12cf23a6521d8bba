"""Command-line entry point: validate, run, report, reproduce-check.

Exit codes: 0 success, 1 semantic violations (bad data, failed checks),
2 usage or malformed input, 3 run completed with aborted cases.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .data_model import parse_system, validate_system
from .errors import GridExpError, MalformedFile, ReferentialIntegrity, WindowOverrun
from .experiment import ExperimentPlan, load_experiment
from .results import (
    archive_case, compute_metrics, load_case, manifest_diff, write_manifest,
    write_report,
)
from .simulation import run_case

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_USAGE = 2
EXIT_PARTIAL = 3


def _overrides_from_args(args) -> dict:
    out = {}
    if args.master_seed is not None:
        out["master_seed"] = args.master_seed
    if args.trials is not None:
        out["n_trials"] = args.trials
    if args.days is not None:
        out["window_days"] = args.days
    if args.scenarios is not None:
        out["scenarios"] = args.scenarios
    return out


def cmd_validate(args) -> int:
    from .experiment import load_config
    try:
        cfg = load_config(args.config)
        system_file = Path(args.config).parent / cfg["system_file"]
        system = parse_system(system_file, strict=False)
    except (MalformedFile, ReferentialIntegrity) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    violations = validate_system(system)
    for v in violations:
        print(f"violation: {v}")
    if violations:
        return EXIT_VIOLATIONS
    try:
        params, plan = load_experiment(args.config, _overrides_from_args(args))
    except (MalformedFile, ReferentialIntegrity) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WindowOverrun as exc:
        print(f"plan violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATIONS
    print(f"ok: {len(plan.trials)} trials x {len(plan.treatments)} treatments "
          f"= {len(plan.test_sets)} test sets")
    return EXIT_OK


def _run_one(job: tuple[int, "ExperimentPlan"]):
    index, plan = job
    return index, run_case(plan.test_sets[index], plan)


def cmd_run(args) -> int:
    code = cmd_validate(args)
    if code != EXIT_OK:
        return code
    overrides = _overrides_from_args(args)
    params, plan = load_experiment(args.config, overrides)
    out_dir = Path(args.out) / params.experiment_id
    archive_dir = out_dir / "archive"

    jobs = max(1, args.jobs)
    runs = [None] * len(plan.test_sets)
    if jobs == 1:
        for i, ts in enumerate(plan.test_sets):
            if args.verbose:
                print(f"[{i + 1}/{len(plan.test_sets)}] {ts.id}", file=sys.stderr)
            runs[i] = run_case(ts, plan)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, result in pool.map(_run_one, [(i, plan) for i in range(len(plan.test_sets))]):
                runs[i] = result
                if args.verbose:
                    print(f"done {plan.test_sets[i].id}", file=sys.stderr)

    # Archive in plan order regardless of completion order.
    digests: dict[str, dict[str, str]] = {}
    timing_files: list[str] = []
    aborted: list[str] = []
    for ts, run in zip(plan.test_sets, runs):
        digests[ts.id] = archive_case(run, archive_dir / ts.id)
        timing_files.append(f"{ts.id}/timings.json")
        if run.aborted:
            aborted.append(f"{ts.id}: {run.aborted}")

    records = []
    for ts, run in zip(plan.test_sets, runs):
        if run.aborted:
            continue
        records.extend(compute_metrics(load_case(archive_dir / ts.id), params.system))
    if records:
        write_report(records, out_dir)
    write_manifest(plan, digests, out_dir, overrides=overrides,
                   timing_files=timing_files)

    if aborted:
        for line in aborted:
            print(f"aborted: {line}", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"run complete: {len(plan.test_sets)} cases -> {out_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        params, plan = load_experiment(args.config, _overrides_from_args(args))
    except GridExpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out) / params.experiment_id
    archive_dir = out_dir / "archive"
    if not archive_dir.is_dir():
        print(f"error: no archive at {archive_dir}", file=sys.stderr)
        return EXIT_USAGE
    records = []
    for case_dir in sorted(archive_dir.iterdir()):
        if not (case_dir / "case_run.json").exists():
            continue
        case = load_case(case_dir)
        if case.aborted:
            print(f"skipping aborted case {case.test_set_id}", file=sys.stderr)
            continue
        records.extend(compute_metrics(case, params.system))
    if not records:
        print("error: no complete cases in archive", file=sys.stderr)
        return EXIT_VIOLATIONS
    paths = write_report(records, out_dir)
    print("wrote: " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def cmd_reproduce_check(args) -> int:
    try:
        diffs = manifest_diff(Path(args.manifest_a), Path(args.manifest_b))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if diffs:
        print(f"mismatch: {diffs[0]}" + (f" (+{len(diffs) - 1} more)" if len(diffs) > 1 else ""))
        return EXIT_VIOLATIONS
    print("manifests match (wall-clock note ignored)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gridexp",
        description="Reproducible unit-commitment experiments scored by a "
                    "dispatch emulator.",
        epilog="exit codes: 0 ok, 1 violations, 2 usage/malformed input, "
               "3 run finished with aborted cases",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="experiment config JSON")
        sp.add_argument("--out", default="out", help="output directory root")
        sp.add_argument("--master-seed", type=int, default=None,
                        help="override the config master seed")
        sp.add_argument("--trials", type=int, default=None,
                        help="override the number of trials")
        sp.add_argument("--days", type=int, default=None,
                        help="override the trial window length in days")
        sp.add_argument("--scenarios", type=int, default=None,
                        help="override stochastic treatment scenario counts")
        sp.add_argument("--jobs", type=int, default=1,
                        help="parallel case executions (output is identical for any value)")
        sp.add_argument("--verbose", action="store_true")

    common(sub.add_parser("validate", help="check config, data, and plan"))
    common(sub.add_parser("run", help="execute the full experiment"))
    common(sub.add_parser("report", help="recompute metrics from an existing archive"))

    rc = sub.add_parser("reproduce-check",
                        help="field-wise manifest comparison (wall clock ignored)")
    rc.add_argument("manifest_a")
    rc.add_argument("manifest_b")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "validate": cmd_validate,
        "run": cmd_run,
        "report": cmd_report,
        "reproduce-check": cmd_reproduce_check,
    }
    try:
        return handlers[args.command](args)
    except GridExpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATIONS


if __name__ == "__main__":
    sys.exit(main())
