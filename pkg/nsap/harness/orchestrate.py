"""Run orchestration: one scenario in, one self-describing run directory out.

Layout of a run directory::

    scenario.toml  diagnostics.csv  series_meta.json  series.dat  spectrum.dat
    checkpoints/snapshot_XXXXX.nsap  reports/<id>_p<p>.json  manifest.json
    v/  w/          (coupled runs only: per-part series)
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from nsap import __version__
from nsap.config import NsapSettings
from nsap.errors import ConfigError, GridMismatchError, NumericalFailure, SeriesFormatError
from nsap.harness.initial import make_initial
from nsap.harness.scenario import ScenarioSpec, load_scenario, save_scenario
from nsap.monitor import checks
from nsap.monitor.norms import energy_spectrum, make_recorder
from nsap.monitor.perturbation import PERTURBATION_IDS, check_perturbation
from nsap.monitor.reports import InequalityReport
from nsap.monitor.scaling import require_power_of_two, scaling_test, trajectory_scaling_gap
from nsap.monitor.series import SeriesBundle
from nsap.runs import new_run_dir, prepare_output_dir
from nsap.solver.integrator import run, run_coupled
from nsap.solver.trajectory import Snapshot, Trajectory
from nsap.spectral.checkpoint import read_checkpoint, write_checkpoint
from nsap.spectral.fields import VectorField
from nsap.utils import utc_isoformat, write_json

logger = logging.getLogger(__name__)

SCENARIO_NAME = "scenario.toml"
MANIFEST_NAME = "manifest.json"
SPECTRUM_NAME = "spectrum.dat"
MONOTONE_NAME = "monotone.json"


@dataclass(frozen=True)
class RunResult:
    run_dir: Path
    manifest: dict[str, Any]

    @property
    def status(self) -> str:
        return str(self.manifest["status"])

    @property
    def escaped(self) -> bool:
        return self.status == "escaped"

    @property
    def exit_code(self) -> int:
        return 2 if self.escaped else 0


def resolve_output_dir(spec: ScenarioSpec, output_dir: str | Path | None, settings: NsapSettings) -> Path:
    if output_dir is not None:
        return Path(output_dir)
    if spec.output.directory:
        return Path(spec.output.directory)
    return new_run_dir(spec.output.name, spec.scenario_hash(), settings.runs_dir)


def _listed_files(run_dir: Path) -> list[str]:
    return sorted(
        p.relative_to(run_dir).as_posix() for p in run_dir.rglob("*") if p.is_file() and p.name != MANIFEST_NAME
    )


def _write_spectrum(path: Path, u: VectorField) -> None:
    k, energy = energy_spectrum(u)
    np.savetxt(path, np.column_stack([k, energy]), fmt="%.10e", header="k E(k)")


def _verdicts(reports: list[InequalityReport]) -> dict[str, str]:
    return {Path(r.file_name()).stem: r.verdict for r in reports}


def write_reports(
    bundle: SeriesBundle, spec: ScenarioSpec, reports_dir: Path
) -> tuple[list[InequalityReport], checks.MonotoneReport | None]:
    """Every enabled report for a stored series; ``monotone`` is handled apart from the registry."""
    wanted = [c for c in spec.monitor.checks if c != "monotone"]
    reports = checks.run_checks(bundle, wanted, tuple(spec.monitor.p_set)) if wanted else []
    for report in reports:
        report.write(reports_dir)
    monotone = None
    if "monotone" in spec.monitor.checks:
        monotone = checks.check_monotone(bundle)
        write_json(reports_dir / MONOTONE_NAME, monotone.to_dict())
    return reports, monotone


def _write_manifest(run_dir: Path, payload: dict[str, Any]) -> dict[str, Any]:
    manifest = {**payload, "files": _listed_files(run_dir)}
    write_json(run_dir / MANIFEST_NAME, manifest)
    return manifest


def run_scenario(
    spec: ScenarioSpec,
    output_dir: str | Path | None = None,
    settings: NsapSettings | None = None,
    *,
    initial: VectorField | None = None,
    t0: float = 0.0,
) -> RunResult:
    """Integrate a scenario, persist the series and every enabled report.

    Reports are computed from the CSV as re-read from disk, so ``check_run``
    reproduces them exactly. A :class:`NumericalFailure` still leaves a
    manifest (status ``"failed"``) behind before it propagates.
    """
    settings = settings or NsapSettings.from_env()
    run_dir = prepare_output_dir(resolve_output_dir(spec, output_dir, settings))
    save_scenario(spec, run_dir / SCENARIO_NAME)
    grid = spec.grid.build()
    u0 = initial if initial is not None else make_initial(spec.ic, grid)
    if u0.grid != grid:
        raise GridMismatchError(f"initial field grid {u0.grid} does not match scenario grid {grid}")

    seeds = {"ic": spec.ic.seed}
    if spec.perturbation is not None:
        seeds["perturbation"] = spec.perturbation.seed
    manifest: dict[str, Any] = {
        "scenario_hash": spec.scenario_hash(),
        "version": __version__,
        "start": utc_isoformat(),
        "seeds": seeds,
        "t0": t0,
        "coupled": spec.coupled,
    }
    logger.info("Running scenario %s into %s", spec.output.name, run_dir)
    started = time.perf_counter()

    checkpoint_dir = run_dir / "checkpoints"
    counter = {"index": 0}

    def save_snapshot(snapshot: Snapshot) -> None:
        if not spec.output.checkpoints:
            return
        write_checkpoint(checkpoint_dir / f"snapshot_{counter['index']:05d}.nsap", snapshot.u, snapshot.t)
        counter["index"] += 1

    recorder = make_recorder(spec.monitor)
    try:
        if spec.perturbation is not None:
            if t0 != 0.0:
                raise ConfigError("coupled scenarios cannot be resumed")
            w0 = make_initial(spec.perturbation, grid)
            coupled = run_coupled(
                u0, w0, spec.solver, recorder=recorder, scenario_id=spec.output.name,
                keep_snapshots=spec.output.checkpoints, record_stride=spec.monitor.cadence,
            )
            for snapshot in coupled.combined.snapshots:
                save_snapshot(snapshot)
            trajectory: Trajectory = coupled.combined
        else:
            coupled = None
            trajectory = run(
                u0, spec.solver, recorder=recorder, scenario_id=spec.output.name, t0=t0,
                keep_snapshots=False, record_stride=spec.monitor.cadence, on_snapshot=save_snapshot,
            )
    except NumericalFailure as exc:
        logger.error("Scenario %s failed: %s", spec.output.name, exc)
        _write_manifest(
            run_dir,
            {**manifest, "end": utc_isoformat(), "walltime_s": time.perf_counter() - started,
             "status": "failed", "error": str(exc), "escape_time": None, "verdicts": {}},
        )
        raise

    p_set = spec.monitor.p_set
    SeriesBundle.from_trajectory(trajectory, p_set).save(run_dir)
    bundle = SeriesBundle.load(run_dir)
    reports, monotone = write_reports(bundle, spec, run_dir / "reports")
    verdicts = _verdicts(reports)
    if monotone is not None:
        verdicts["monotone"] = monotone.verdict

    if coupled is not None:
        SeriesBundle.from_trajectory(coupled.v, p_set).save(run_dir / "v")
        SeriesBundle.from_trajectory(coupled.w, p_set).save(run_dir / "w")
        parts = (SeriesBundle.load(run_dir / "v"), SeriesBundle.load(run_dir / "w"))
        for p in p_set:
            perturbation_reports = list(check_perturbation(parts, p).values())
            for report in perturbation_reports:
                report.write(run_dir / "reports")
            verdicts.update(_verdicts(perturbation_reports))

    if spec.output.spectrum:
        _write_spectrum(run_dir / SPECTRUM_NAME, trajectory.final.u)

    final = _write_manifest(
        run_dir,
        {
            **manifest,
            "end": utc_isoformat(),
            "walltime_s": time.perf_counter() - started,
            "status": trajectory.status,
            "escape_time": trajectory.escape_time,
            "t_final": trajectory.final.t,
            "verdicts": verdicts,
        },
    )
    logger.info("Scenario %s finished with status %s", spec.output.name, trajectory.status)
    return RunResult(run_dir=run_dir, manifest=final)


def load_run_spec(run_dir: str | Path) -> ScenarioSpec:
    return load_scenario(Path(run_dir) / SCENARIO_NAME)


def check_run(
    run_dir: str | Path, check_id: str, p: float | None = None
) -> list[InequalityReport | checks.MonotoneReport]:
    """Regenerate reports for one id from the stored series and rewrite them under ``reports/``."""
    run_dir = Path(run_dir)
    bundle = SeriesBundle.load(run_dir)
    reports_dir = run_dir / "reports"
    reports_dir.mkdir(exist_ok=True)
    p_values = [p] if p is not None else list(bundle.p_set)

    if check_id == "monotone":
        monotone = checks.check_monotone(bundle, [p] if p is not None else None)
        write_json(reports_dir / MONOTONE_NAME, monotone.to_dict())
        return [monotone]

    if check_id in PERTURBATION_IDS:
        if not (run_dir / "v").is_dir() or not (run_dir / "w").is_dir():
            raise SeriesFormatError(f"{run_dir} is not a coupled run (no v/ and w/ series)")
        parts = (SeriesBundle.load(run_dir / "v"), SeriesBundle.load(run_dir / "w"))
        out: list[InequalityReport | checks.MonotoneReport] = []
        for value in p_values:
            report = check_perturbation(parts, value)[check_id]
            report.write(reports_dir)
            out.append(report)
        return out

    out = []
    for member in checks.expand_ids([check_id]):
        for value in [None] if member in checks.P_INDEPENDENT else p_values:
            report = checks.run_check(bundle, member, value)
            report.write(reports_dir)
            out.append(report)
    return out


# ----------------------------------------------------------------------
# Scaling
# ----------------------------------------------------------------------
def scale_test_scenario(
    spec: ScenarioSpec, lam: float, *, with_trajectory: bool = False, output: str | Path | None = None
) -> dict[str, Any]:
    try:
        require_power_of_two(lam)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    grid = spec.grid.build()
    u0 = make_initial(spec.ic, grid)
    rows = [scaling_test(u0, lam, p).to_dict() for p in spec.monitor.p_set if p > grid.dim]
    if not rows:
        raise ConfigError(f"scale test needs some p > N={grid.dim} in p_set, got {spec.monitor.p_set}")
    payload: dict[str, Any] = {
        "scenario_hash": spec.scenario_hash(),
        "lambda": float(lam),
        "reports": rows,
        "invariant": all(row["invariant"] for row in rows),
    }
    if with_trajectory:
        payload["trajectory_gap"] = trajectory_scaling_gap(u0, spec.solver, lam)
    if output is not None:
        out = Path(output)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "scale_test.json", payload)
    return payload


# ----------------------------------------------------------------------
# Compare
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class RunComparison:
    series: pd.DataFrame
    field_diff: float | None
    notes: list[str] = field(default_factory=list)

    @property
    def max_series_diff(self) -> float:
        if self.series.empty:
            return 0.0
        return float(self.series["max_abs_diff"].max())

    @property
    def identical(self) -> bool:
        return self.max_series_diff == 0.0 and (self.field_diff is None or self.field_diff == 0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "series": self.series.to_dict(orient="records"),
            "field_diff": self.field_diff,
            "max_series_diff": self.max_series_diff,
            "identical": self.identical,
            "notes": list(self.notes),
        }


def _final_checkpoint(run_dir: Path) -> Path | None:
    found = sorted((run_dir / "checkpoints").glob("snapshot_*.nsap"))
    return found[-1] if found else None


def compare_runs(dir_a: str | Path, dir_b: str | Path) -> RunComparison:
    """Column-wise differences on common sample times plus the final-field L2 gap."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    a, b = SeriesBundle.load(dir_a), SeriesBundle.load(dir_b)
    if a.dim != b.dim or not math.isclose(a.box_length, b.box_length, rel_tol=1e-12):
        raise GridMismatchError(
            f"runs are on different boxes: N={a.dim}, L={a.box_length} vs N={b.dim}, L={b.box_length}"
        )

    notes: list[str] = []
    merged = pd.merge(a.frame, b.frame, on="t", suffixes=("_a", "_b"))
    if len(merged) < max(len(a.frame), len(b.frame)):
        notes.append(f"compared {len(merged)} common sample times of {len(a.frame)} and {len(b.frame)}")
    common = [c for c in a.frame.columns if c != "t" and c in b.frame.columns]
    rows = []
    for name in common:
        diff = (merged[f"{name}_a"] - merged[f"{name}_b"]).abs()
        scale = merged[[f"{name}_a", f"{name}_b"]].abs().max(axis=1)
        rel = (diff / scale.where(scale > 0)).fillna(0.0)
        rows.append(
            {
                "column": name,
                "max_abs_diff": float(diff.max()) if len(diff) else 0.0,
                "max_rel_diff": float(rel.max()) if len(rel) else 0.0,
            }
        )
    series = pd.DataFrame(rows, columns=["column", "max_abs_diff", "max_rel_diff"])

    field_diff = None
    ckpt_a, ckpt_b = _final_checkpoint(dir_a), _final_checkpoint(dir_b)
    if ckpt_a is not None and ckpt_b is not None:
        (u_a, t_a), (u_b, t_b) = read_checkpoint(ckpt_a), read_checkpoint(ckpt_b)
        if u_a.grid != u_b.grid:
            raise GridMismatchError(f"final checkpoints are on different grids: {u_a.grid} vs {u_b.grid}")
        if t_a != t_b:
            notes.append(f"final checkpoints are at different times: {t_a:g} vs {t_b:g}")
        scale = float(np.sqrt(np.sum(u_a.values**2)))
        gap = float(np.sqrt(np.sum((u_a.values - u_b.values) ** 2)))
        field_diff = 0.0 if gap == 0.0 else gap / (scale if scale > 0 else 1.0)
    else:
        notes.append("no checkpoints to compare")
    return RunComparison(series=series, field_diff=field_diff, notes=notes)


# ----------------------------------------------------------------------
# Resume
# ----------------------------------------------------------------------
def resume_run(
    checkpoint: str | Path,
    spec: ScenarioSpec,
    t_end: float,
    output_dir: str | Path | None = None,
    settings: NsapSettings | None = None,
) -> RunResult:
    """Continue from a stored snapshot up to ``t_end`` into a fresh run directory."""
    u, t = read_checkpoint(checkpoint)
    if u.grid != spec.grid.build():
        raise ConfigError(f"checkpoint grid {u.grid} does not match scenario grid {spec.grid.build()}")
    if not t_end > t:
        raise ConfigError(f"t_end ({t_end:g}) must exceed the checkpoint time ({t:g})")
    resumed = spec.with_updates("solver", t_end=t_end)
    logger.info("Resuming from %s at t=%g to t=%g", checkpoint, t, t_end)
    result = run_scenario(resumed, output_dir, settings, initial=u, t0=t)
    manifest = {**result.manifest, "resumed_from": str(checkpoint)}
    write_json(result.run_dir / MANIFEST_NAME, manifest)
    return RunResult(run_dir=result.run_dir, manifest=manifest)
