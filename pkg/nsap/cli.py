from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import scipy.fft

from nsap.config import NsapSettings
from nsap.errors import CheckpointFormatError, GridMismatchError, NsapError
from nsap.harness.orchestrate import (
    SCENARIO_NAME,
    check_run,
    compare_runs,
    resume_run,
    run_scenario,
    scale_test_scenario,
)
from nsap.harness.scenario import load_scenario
from nsap.harness.sweep import load_family, run_family
from nsap.monitor.checks import MonotoneReport

logger = logging.getLogger(__name__)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, NsapError):
        return exc.exit_code
    if isinstance(exc, (GridMismatchError, CheckpointFormatError)):
        return 4
    return 1


def command_run(args: argparse.Namespace, settings: NsapSettings) -> int:
    spec = load_scenario(args.config)
    result = run_scenario(spec, args.output, settings)
    print(f"run_dir: {result.run_dir}")
    print(f"status: {result.status}")
    if result.escaped:
        print(f"escape_time: {result.manifest['escape_time']:g}")
    for name, verdict in sorted(result.manifest["verdicts"].items()):
        print(f"  {name}: {verdict}")
    return result.exit_code


def command_check(args: argparse.Namespace, settings: NsapSettings) -> int:
    reports = check_run(args.run_dir, args.id, args.p)
    for report in reports:
        if isinstance(report, MonotoneReport):
            worst = ", ".join(f"{k}={v:.3g}" for k, v in report.worst_increase.items())
            print(f"monotone: verdict={report.verdict} worst_increase: {worst}")
        else:
            print(report.summary_line())
            for note in report.notes:
                print(f"  note: {note}")
    return 0


def command_scale_test(args: argparse.Namespace, settings: NsapSettings) -> int:
    spec = load_scenario(args.config)
    payload = scale_test_scenario(spec, args.lam, with_trajectory=args.trajectory, output=args.output)
    for row in payload["reports"]:
        print(
            f"p={row['p']:g} kappa_delta={row['kappa_delta']:.3e} lN_delta={row['lN_delta']:.3e} "
            f"l2_scaling_delta={row['l2_scaling_delta']:.3e} invariant={row['invariant']}"
        )
    if "trajectory_gap" in payload:
        print(f"trajectory_gap: {payload['trajectory_gap']:.3e}")
    return 0


def command_compare(args: argparse.Namespace, settings: NsapSettings) -> int:
    comparison = compare_runs(args.dir_a, args.dir_b)
    if args.json:
        print(json.dumps(comparison.to_dict(), indent=2))
        return 0
    if not comparison.series.empty:
        print(comparison.series.to_string(index=False))
    field_diff = "n/a" if comparison.field_diff is None else f"{comparison.field_diff:.3e}"
    print(f"final field relative L2 diff: {field_diff}")
    for note in comparison.notes:
        print(f"note: {note}")
    print(f"identical: {comparison.identical}")
    return 0


def command_sweep(args: argparse.Namespace, settings: NsapSettings) -> int:
    family = load_family(args.family)
    output = args.output or (settings.runs_dir / Path(args.family).stem)
    result = run_family(family, output, settings)
    print(f"family_dir: {result.family_dir}")
    print(result.table.to_string(index=False))
    for stat in result.statistics:
        spread = "n/a" if stat.spread is None else f"{stat.spread:.4g}"
        print(f"{stat.inequality_id}: spread={spread} all_hold={stat.all_hold}")
    return 0


def command_resume(args: argparse.Namespace, settings: NsapSettings) -> int:
    checkpoint = Path(args.checkpoint)
    config = Path(args.config) if args.config else checkpoint.parent.parent / SCENARIO_NAME
    spec = load_scenario(config)
    result = resume_run(checkpoint, spec, args.t_end, args.output, settings)
    print(f"run_dir: {result.run_dir}")
    print(f"status: {result.status}")
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Pseudo-spectral Navier-Stokes runs with an a priori estimate monitor"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario and write series, checkpoints, reports and a manifest")
    run.add_argument("config", help="Scenario TOML ([grid], [ic], [solver], [monitor], [output])")
    run.add_argument("--output", default=None, help="Output directory (default: [output].directory or NSAP_RUNS_DIR)")
    run.set_defaults(func=command_run)

    check = sub.add_parser("check", help="Regenerate reports for one inequality id from a stored run")
    check.add_argument("run_dir")
    check.add_argument("id", help="Inequality id, group name (balance, integral) or 'monotone'")
    check.add_argument("--p", type=float, default=None, help="Exponent (default: every p of the run)")
    check.set_defaults(func=command_check)

    scale = sub.add_parser("scale-test", help="Invariance of kappa_p and ||.||_N under u -> lam u(lam x)")
    scale.add_argument("config")
    scale.add_argument("--lam", type=float, default=2.0, help="Power-of-two scaling factor")
    scale.add_argument("--trajectory", action="store_true", help="Also compare rescaled trajectories")
    scale.add_argument("--output", default=None)
    scale.set_defaults(func=command_scale_test)

    compare = sub.add_parser("compare", help="Diff the series and final fields of two runs")
    compare.add_argument("dir_a")
    compare.add_argument("dir_b")
    compare.add_argument("--json", action="store_true")
    compare.set_defaults(func=command_compare)

    sweep = sub.add_parser("sweep", help="Run an initial-data family at fixed kappa_p")
    sweep.add_argument("family", help="Family TOML ([base], target_kappa, p, [[members]])")
    sweep.add_argument("--output", default=None)
    sweep.set_defaults(func=command_sweep)

    resume = sub.add_parser("resume", help="Continue a run from a checkpoint")
    resume.add_argument("checkpoint")
    resume.add_argument("--t-end", type=float, required=True)
    resume.add_argument("--config", default=None, help="Scenario TOML (default: the run's scenario.toml)")
    resume.add_argument("--output", default=None)
    resume.set_defaults(func=command_resume)

    return parser


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = NsapSettings.from_env()
        settings.configure_logging()
        with scipy.fft.set_workers(settings.fft_workers()):
            code = args.func(args, settings)
    except Exception as exc:
        logger.debug("Command %s failed", args.command, exc_info=True)
        print(f"Error: {exc}", file=sys.stderr)
        raise SystemExit(exit_code_for(exc)) from None
    raise SystemExit(code)


if __name__ == "__main__":
    main()
