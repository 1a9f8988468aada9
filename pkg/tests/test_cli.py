from __future__ import annotations

import json
from pathlib import Path

import pytest

from nsap.cli import build_parser, exit_code_for, main
from nsap.errors import (
    CheckpointFormatError,
    ConfigError,
    GridMismatchError,
    NumericalFailure,
    SeriesFormatError,
    UnknownInequalityError,
)
from nsap.harness.scenario import parse_scenario, save_scenario


@pytest.fixture(autouse=True)
def isolated_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("NSAP_THREADS", "1")
    monkeypatch.setenv("NSAP_RUNS_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("NSAP_LOG_LEVEL", "WARNING")


def _scenario(tmp_path: Path, name: str, **ic: object) -> Path:
    spec = parse_scenario(
        {
            "grid": {"dim": 2, "n": 16},
            "ic": {"kind": "random_solenoidal", "amplitude": 0.1, "seed": 4, **ic},
            "solver": {"dt": 0.002, "t_end": 0.02, "snapshot_interval": 0.01, "blowup_factor": 2.0},
            "monitor": {"p_set": [4.0], "checks": ["1.2", "2.6", "monotone"]},
            "output": {"name": name},
        }
    )
    return save_scenario(spec, tmp_path / f"{name}.toml")


def _exit_code(argv: list[str]) -> int:
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    return int(excinfo.value.code)


def test_parser_requires_a_command() -> None:
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_run_and_check(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _scenario(tmp_path, "quiet", amplitude=0.0)
    assert _exit_code(["run", str(config), "--output", str(tmp_path / "quiet")]) == 0
    out = capsys.readouterr().out
    assert "status: complete" in out
    assert "1.2:" in out

    assert _exit_code(["check", str(tmp_path / "quiet"), "2.6", "--p", "4"]) == 0
    assert "2.6 p=4" in capsys.readouterr().out

    assert _exit_code(["check", str(tmp_path / "quiet"), "9.9"]) == 4
    assert "Error:" in capsys.readouterr().err


def test_missing_config_exits_with_config_code(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert _exit_code(["run", str(tmp_path / "missing.toml")]) == 4
    assert "Error:" in capsys.readouterr().err


def test_escaped_run_exit_code(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _scenario(tmp_path, "loud", amplitude=1000.0)
    assert _exit_code(["run", str(config), "--output", str(tmp_path / "loud")]) == 2
    assert "status: escaped" in capsys.readouterr().out


def test_compare_json(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _scenario(tmp_path, "twin")
    assert _exit_code(["run", str(config), "--output", str(tmp_path / "a")]) == 0
    assert _exit_code(["run", str(config), "--output", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    assert _exit_code(["compare", str(tmp_path / "a"), str(tmp_path / "b"), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["identical"] is True


def test_scale_test_command(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _scenario(tmp_path, "scaled")
    assert _exit_code(["scale-test", str(config), "--lam", "2"]) == 0
    assert "invariant=True" in capsys.readouterr().out
    assert _exit_code(["scale-test", str(config), "--lam", "3"]) == 4


def test_resume_uses_the_stored_scenario(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _scenario(tmp_path, "long")
    run_dir = tmp_path / "long"
    assert _exit_code(["run", str(config), "--output", str(run_dir)]) == 0
    checkpoint = run_dir / "checkpoints" / "snapshot_00001.nsap"
    code = _exit_code(["resume", str(checkpoint), "--t-end", "0.03", "--output", str(tmp_path / "resumed")])
    assert code == 0
    assert "status: complete" in capsys.readouterr().out


@pytest.mark.parametrize(
    ("exc", "code"),
    [
        (NumericalFailure("nan"), 3),
        (GridMismatchError("grid"), 4),
        (CheckpointFormatError("magic"), 4),
        (ConfigError("bad"), 4),
        (UnknownInequalityError("9.9"), 4),
        (SeriesFormatError("columns"), 4),
        (RuntimeError("boom"), 1),
    ],
)
def test_exit_code_for(exc: BaseException, code: int) -> None:
    assert exit_code_for(exc) == code
