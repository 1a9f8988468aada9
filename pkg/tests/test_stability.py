from __future__ import annotations

import pytest

from nsap.harness.initial import random_solenoidal, taylor_green
from nsap.monitor.stability import (
    alpha_integral,
    closedness_probe,
    find_smallness_threshold,
    norm_recorder,
    stability_probe,
)
from nsap.monitor.norms import lp_norm
from nsap.solver.config import SolverConfig
from nsap.solver.integrator import run
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import Grid

SHORT = SolverConfig(dt=0.01, t_end=0.05, snapshot_interval=0.05)
STOKES = SolverConfig(nonlinear=False, dt=0.01, t_end=0.05, snapshot_interval=0.05)


def test_norm_recorder(taylor_green2: VectorField) -> None:
    row = norm_recorder([4.0, 6.0])(taylor_green2, 0.5).as_row()
    assert set(row) == {"t", "l2", "lN", "lp_4", "lp_6"}
    assert row["lN"] == row["l2"]


def test_alpha_integral_of_stokes_decay(taylor_green2: VectorField) -> None:
    config = SolverConfig(nonlinear=False, dt=0.01, t_end=4.0, snapshot_interval=4.0)
    trajectory = run(taylor_green2, config, recorder=norm_recorder([4.0]), keep_snapshots=False)
    value, decayed = alpha_integral(trajectory, 4.0)
    # ||u||_4 decays like exp(-2t) and alpha = 8 in two dimensions
    assert decayed
    assert value == pytest.approx(lp_norm(taylor_green2, 4.0) ** 8 / 16.0, rel=1e-2)


def test_stability_probe(taylor_green2: VectorField, random_field2: VectorField) -> None:
    report = stability_probe(taylor_green2, random_field2.scaled(0.1), SHORT, 4.0, levels=3)
    assert [row.status for row in report.rows] == ["ok", "ok", "ok"]
    assert [row.scale for row in report.rows] == [1.0, 0.5, 0.25]
    assert report.converging
    assert not report.base_decayed
    assert list(report.table().columns) == ["level", "scale", "integral", "delta", "status"]


def test_probe_marks_large_perturbations(taylor_green2: VectorField, random_field2: VectorField) -> None:
    report = stability_probe(taylor_green2, random_field2.scaled(4.0), SHORT, 4.0, levels=1)
    assert report.rows[0].status == "outside regime"
    assert report.rows[0].integral is None
    assert report.to_dict()["richardson_ratios"] == []


def test_closedness_probe(taylor_green2: VectorField, random_field2: VectorField) -> None:
    report = closedness_probe(taylor_green2, random_field2.scaled(0.1), SHORT, 4.0, levels=2)
    assert report.kind == "closed"
    assert all(row.status == "ok" for row in report.rows)
    assert report.rows[1].delta < report.rows[0].delta


def test_threshold_search_without_a_bracket(grid2: Grid) -> None:
    bracket = find_smallness_threshold(
        lambda amplitude: taylor_green(grid2, amplitude), STOKES, [4.0], start=1.0, max_trials=3
    )
    assert [amplitude for amplitude, _ in bracket.trials] == [1.0, 2.0, 4.0]
    assert bracket.lower == 4.0
    assert bracket.upper is None
    assert bracket.ratio is None
    assert bracket.lower_critical_norm == pytest.approx(lp_norm(taylor_green(grid2, 4.0), 2.0))


def test_threshold_search_brackets_a_nonlinear_3d_flow(grid3: Grid) -> None:
    config = SolverConfig(dt=0.01, t_end=0.05, snapshot_interval=0.05, blowup_factor=2.0)
    bracket = find_smallness_threshold(
        lambda amplitude: random_solenoidal(grid3, amplitude=amplitude, seed=11), config, [4.0], start=1.0
    )
    assert bracket.lower is not None
    assert bracket.upper is not None
    assert bracket.lower < bracket.upper
    assert bracket.ratio <= 2.0
    assert bracket.lower_critical_norm > 0
    assert {monotone for _, monotone in bracket.trials} == {True, False}


@pytest.mark.parametrize(("start", "factor"), [(0.0, 2.0), (1.0, 1.0)])
def test_threshold_search_validation(grid2: Grid, start: float, factor: float) -> None:
    with pytest.raises(ValueError):
        find_smallness_threshold(lambda a: taylor_green(grid2, a), STOKES, [4.0], start=start, factor=factor)
