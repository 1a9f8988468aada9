from __future__ import annotations

import json
from pathlib import Path

import pytest

from nsap.config import NsapSettings
from nsap.errors import ConfigError, GridMismatchError, SeriesFormatError, UnknownInequalityError
from nsap.harness.orchestrate import (
    MANIFEST_NAME,
    RunResult,
    check_run,
    compare_runs,
    load_run_spec,
    resume_run,
    run_scenario,
    scale_test_scenario,
)
from nsap.harness.scenario import ScenarioSpec, parse_scenario
from nsap.monitor.checks import MonotoneReport

EXPECTED_REPORTS = [
    "1.2.json", "2.1_p4.json", "2.2_p4.json", "2.3_p4.json", "2.4_p4.json", "2.6_p4.json", "monotone.json",
]


@pytest.fixture
def settings(runs_root: Path) -> NsapSettings:
    return NsapSettings(threads=1, runs_dir=runs_root, log_level="INFO")


@pytest.fixture
def completed(small_scenario: ScenarioSpec, tmp_path: Path, settings: NsapSettings) -> RunResult:
    return run_scenario(small_scenario, tmp_path / "run", settings)


def test_run_directory_layout(completed: RunResult, small_scenario: ScenarioSpec) -> None:
    run_dir = completed.run_dir
    for name in ("scenario.toml", "diagnostics.csv", "series_meta.json", "series.dat", "spectrum.dat", MANIFEST_NAME):
        assert (run_dir / name).is_file()
    assert sorted(p.name for p in (run_dir / "reports").iterdir()) == EXPECTED_REPORTS
    assert sorted(p.name for p in (run_dir / "checkpoints").iterdir()) == [
        "snapshot_00000.nsap",
        "snapshot_00001.nsap",
        "snapshot_00002.nsap",
    ]
    assert load_run_spec(run_dir) == small_scenario


def test_manifest(completed: RunResult, small_scenario: ScenarioSpec) -> None:
    manifest = json.loads((completed.run_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    assert manifest == completed.manifest
    assert manifest["status"] == "complete"
    assert manifest["scenario_hash"] == small_scenario.scenario_hash()
    assert manifest["seeds"] == {"ic": 3}
    assert manifest["t_final"] == pytest.approx(0.02)
    assert manifest["escape_time"] is None
    assert "reports/2.3_p4.json" in manifest["files"]
    assert "checkpoints/snapshot_00002.nsap" in manifest["files"]
    assert manifest["verdicts"]["1.2"] == "holds-with-C"
    assert manifest["verdicts"]["2.6_p4"] == "holds-with-C"
    assert completed.exit_code == 0


def test_check_regenerates_reports_exactly(completed: RunResult) -> None:
    path = completed.run_dir / "reports" / "2.3_p4.json"
    before = path.read_bytes()
    reports = check_run(completed.run_dir, "2.3")
    assert len(reports) == 1
    assert path.read_bytes() == before


def test_check_groups_and_monotone(completed: RunResult) -> None:
    assert [r.inequality_id for r in check_run(completed.run_dir, "balance")] == ["2.2", "2.4", "2.6"]
    assert check_run(completed.run_dir, "1.2")[0].p is None
    (monotone,) = check_run(completed.run_dir, "monotone")
    assert isinstance(monotone, MonotoneReport)
    integral = check_run(completed.run_dir, "integral", 4.0)
    assert all(r.verdict == "inconclusive" for r in integral)


def test_check_errors(completed: RunResult, tmp_path: Path) -> None:
    with pytest.raises(UnknownInequalityError):
        check_run(completed.run_dir, "9.9")
    with pytest.raises(SeriesFormatError, match="not a coupled run"):
        check_run(completed.run_dir, "3.4")
    with pytest.raises(SeriesFormatError):
        check_run(tmp_path / "nowhere", "1.2")


def test_default_output_goes_under_runs_dir(
    small_scenario: ScenarioSpec, settings: NsapSettings, runs_root: Path
) -> None:
    spec = small_scenario.with_updates("output", checkpoints=False, spectrum=False)
    result = run_scenario(spec, settings=settings)
    assert result.run_dir.parent == runs_root
    assert result.run_dir.name.startswith(f"small_{spec.scenario_hash()[:8]}_")
    assert not any((result.run_dir / "checkpoints").iterdir())
    assert not (result.run_dir / "spectrum.dat").exists()


def test_compare_identical_runs(
    completed: RunResult, small_scenario: ScenarioSpec, tmp_path: Path, settings: NsapSettings
) -> None:
    again = run_scenario(small_scenario, tmp_path / "again", settings)
    comparison = compare_runs(completed.run_dir, again.run_dir)
    assert comparison.identical
    assert comparison.field_diff == 0.0
    assert comparison.to_dict()["max_series_diff"] == 0.0


def test_compare_rejects_other_boxes(completed: RunResult, tmp_path: Path, settings: NsapSettings) -> None:
    flat = parse_scenario(
        {
            "grid": {"dim": 2, "n": 8},
            "solver": {"dt": 0.01, "t_end": 0.02, "snapshot_interval": 0.01},
            "monitor": {"p_set": [4.0], "checks": ["1.2"]},
            "output": {"name": "flat"},
        }
    )
    other = run_scenario(flat, tmp_path / "flat", settings)
    with pytest.raises(GridMismatchError):
        compare_runs(completed.run_dir, other.run_dir)


def test_resume_reproduces_the_final_field(
    completed: RunResult, small_scenario: ScenarioSpec, tmp_path: Path, settings: NsapSettings
) -> None:
    checkpoint = completed.run_dir / "checkpoints" / "snapshot_00001.nsap"
    resumed = resume_run(checkpoint, small_scenario, 0.02, tmp_path / "resumed", settings)
    assert resumed.manifest["t0"] == pytest.approx(0.01)
    assert resumed.manifest["resumed_from"] == str(checkpoint)
    assert json.loads((resumed.run_dir / MANIFEST_NAME).read_text(encoding="utf-8"))["resumed_from"] == str(checkpoint)
    comparison = compare_runs(completed.run_dir, resumed.run_dir)
    assert comparison.field_diff is not None
    assert comparison.field_diff < 1e-10


def test_resume_validation(completed: RunResult, small_scenario: ScenarioSpec, tmp_path: Path) -> None:
    checkpoint = completed.run_dir / "checkpoints" / "snapshot_00002.nsap"
    with pytest.raises(ConfigError, match="must exceed"):
        resume_run(checkpoint, small_scenario, 0.01, tmp_path / "early")
    with pytest.raises(ConfigError, match="does not match"):
        resume_run(checkpoint, small_scenario.with_updates("grid", n=8), 0.05, tmp_path / "coarse")


def test_escaped_run(small_scenario: ScenarioSpec, tmp_path: Path, settings: NsapSettings) -> None:
    spec = small_scenario.with_updates("ic", amplitude=1000.0).with_updates("solver", blowup_factor=2.0)
    result = run_scenario(spec, tmp_path / "escaped", settings)
    assert result.escaped
    assert result.exit_code == 2
    assert result.manifest["escape_time"] is not None
    assert result.manifest["verdicts"]["monotone"] == "inconclusive"


def test_coupled_run(tmp_path: Path, settings: NsapSettings) -> None:
    spec = parse_scenario(
        {
            "grid": {"dim": 2, "n": 16},
            "ic": {"kind": "taylor_green"},
            "perturbation": {"kind": "random_solenoidal", "amplitude": 0.01, "seed": 9},
            "solver": {"dt": 0.005, "t_end": 0.02, "snapshot_interval": 0.01},
            "monitor": {"p_set": [4.0], "checks": ["1.2"]},
            "output": {"name": "coupled"},
        }
    )
    result = run_scenario(spec, tmp_path / "coupled", settings)
    assert result.manifest["coupled"] is True
    assert result.manifest["seeds"] == {"ic": 0, "perturbation": 9}
    assert (result.run_dir / "v" / "diagnostics.csv").is_file()
    assert (result.run_dir / "w" / "diagnostics.csv").is_file()
    assert (result.run_dir / "reports" / "3.4_p4.json").is_file()
    assert result.manifest["verdicts"]["3.9-w_p4"] == "holds-with-C"
    assert check_run(result.run_dir, "3.4")[0].inequality_id == "3.4"
    checkpoint = result.run_dir / "checkpoints" / "snapshot_00001.nsap"
    with pytest.raises(ConfigError, match="cannot be resumed"):
        resume_run(checkpoint, spec, 0.03, tmp_path / "resumed")


def test_scale_test(small_scenario: ScenarioSpec, tmp_path: Path) -> None:
    payload = scale_test_scenario(small_scenario, 2.0, output=tmp_path / "scale")
    assert payload["invariant"]
    assert [row["p"] for row in payload["reports"]] == [4.0]
    assert (tmp_path / "scale" / "scale_test.json").is_file()
    with pytest.raises(ConfigError):
        scale_test_scenario(small_scenario, 3.0)
    with pytest.raises(ConfigError, match="p > N"):
        scale_test_scenario(small_scenario.with_updates("monitor", p_set=[3.0]), 2.0)
