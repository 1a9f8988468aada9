from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from nsap.errors import ConfigError, UnknownInequalityError
from nsap.monitor.checks import (
    TORUS_NOTE,
    check_energy,
    check_integral_bounds,
    check_interpolation,
    check_kappa_dominance,
    check_lp_balance,
    check_monotone,
    check_ode_bound,
    check_sobolev,
    expand_ids,
    run_check,
    run_checks,
)
from nsap.harness.initial import random_solenoidal
from nsap.monitor.norms import MonitorConfig, compute_record, make_recorder
from nsap.monitor.series import SeriesBundle
from nsap.solver.config import SolverConfig
from nsap.solver.integrator import run
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import make_grid

MONITOR = MonitorConfig(p_set=[4.0])


def stokes_bundle(u0: VectorField, *, dt: float, t_end: float) -> SeriesBundle:
    config = SolverConfig(nonlinear=False, dt=dt, t_end=t_end, snapshot_interval=t_end)
    trajectory = run(u0, config, recorder=make_recorder(MONITOR), keep_snapshots=False)
    return SeriesBundle.from_trajectory(trajectory, MONITOR.p_set)


def bundle_from_fields(fields: list[VectorField], *, dt: float = 0.01) -> SeriesBundle:
    rows = [compute_record(u, i * dt, MONITOR).as_row() for i, u in enumerate(fields)]
    grid = fields[0].grid
    return SeriesBundle(
        frame=pd.DataFrame(rows), dim=grid.dim, viscosity=1.0, box_length=grid.box_length, dt=dt, p_set=(4.0,)
    )


def synthetic_bundle(
    columns: dict[str, list[float]], *, dim: int = 2, dt: float = 0.1, status: str = "complete"
) -> SeriesBundle:
    return SeriesBundle(
        frame=pd.DataFrame(columns), dim=dim, viscosity=1.0, box_length=1.0, dt=dt, p_set=(4.0,), status=status
    )


@pytest.fixture
def stokes_tg(taylor_green2: VectorField) -> SeriesBundle:
    return stokes_bundle(taylor_green2, dt=0.005, t_end=0.05)


def test_energy_inequality_holds_for_stokes_decay(stokes_tg: SeriesBundle) -> None:
    report = check_energy(stokes_tg)
    assert report.inequality_id == "1.2"
    assert report.verdict == "holds-with-C"
    assert report.fixed_constant == 1.0
    assert len(report.lhs) == len(stokes_tg.t) - 1


def test_energy_growth_is_a_violation() -> None:
    bundle = synthetic_bundle({"t": [0.0, 0.1, 0.2], "l2": [1.0, 1.1, 1.2], "grad_l2": [0.0, 0.0, 0.0]})
    report = check_energy(bundle)
    assert report.verdict == "violated-beyond-tolerance"
    assert report.header["t0"] == [0.0, 0.0]


def test_integration_by_parts_identity_on_taylor_green(stokes_tg: SeriesBundle) -> None:
    reports = check_lp_balance(stokes_tg, 4.0)
    assert set(reports) == {"2.2", "2.4", "2.6"}
    assert reports["2.6"].verdict == "holds-with-C"
    assert reports["2.4"].verdict == "holds-with-C"
    assert reports["2.2"].c_emp is not None


def test_ode_bound_header_carries_alpha(stokes_tg: SeriesBundle) -> None:
    assert check_ode_bound(stokes_tg, 4.0).header["alpha"] == "8"
    assert check_ode_bound(stokes_tg, 4.0, dim=3).header["alpha"] == "12"
    low = check_ode_bound(stokes_tg, 2.0)
    assert low.verdict == "inconclusive"
    assert "p > N=2" in low.notes[0]


def test_coarse_cadence_is_inconclusive() -> None:
    frame = {"t": [0.0, 1.0, 2.0], "lp_4": [1.0, 0.9, 0.8], "D_4": [1.0, 1.0, 1.0]}
    report = check_ode_bound(synthetic_bundle(frame, dt=0.01), 4.0)
    assert report.verdict == "inconclusive"


def test_pointwise_chains_hold(random_field3: VectorField) -> None:
    bundle = bundle_from_fields([random_field3, random_field3.scaled(0.8), random_field3.scaled(0.5)])
    assert check_interpolation(bundle, 4.0).verdict == "holds-with-C"
    assert check_kappa_dominance(bundle, 4.0).verdict == "holds-with-C"
    assert run_check(bundle, "kappa-holder", 3.0).verdict == "inconclusive"


def test_single_field_sobolev_report(random_field3: VectorField) -> None:
    report = check_sobolev(random_field3, 4.0)
    assert report.verdict == "holds-with-C"
    assert report.c_emp > 0
    assert TORUS_NOTE in report.notes


def test_monotone_for_stokes_decay(stokes_tg: SeriesBundle) -> None:
    report = check_monotone(stokes_tg)
    assert report.monotone
    assert set(report.columns) == {"l2", "lN", "lp_4"}


def test_monotone_detects_growth_and_escape() -> None:
    frame = {"t": [0.0, 0.1], "l2": [1.0, 1.0], "lN": [1.0, 1.0], "lp_4": [1.0, 1.5]}
    report = check_monotone(synthetic_bundle(frame))
    assert report.verdict == "non-monotone"
    assert report.worst_increase["lp_4"] == pytest.approx(0.5)
    assert check_monotone(synthetic_bundle(frame, status="escaped")).verdict == "inconclusive"


def test_integral_bounds_need_decay(stokes_tg: SeriesBundle) -> None:
    reports = check_integral_bounds(stokes_tg, 4.0)
    assert all(r.verdict == "inconclusive" for r in reports.values())
    assert "insufficient decay" in reports["1.4"].notes[0]


def test_integral_bounds_for_a_decayed_run(taylor_green2: VectorField) -> None:
    bundle = stokes_bundle(taylor_green2, dt=0.05, t_end=4.0)
    reports = check_integral_bounds(bundle, 4.0)
    assert reports["1.3"].c_emp == pytest.approx(1.0)
    assert reports["2.13"].c_emp == pytest.approx(1.0)
    assert reports["kappa-power"].verdict == "holds-with-C"
    assert reports["1.4"].verdict == "holds-with-C"
    assert reports["2.11"].verdict == "inconclusive"


def test_expand_ids() -> None:
    assert expand_ids(["balance", "2.2"]) == ["2.2", "2.4", "2.6"]
    with pytest.raises(UnknownInequalityError):
        expand_ids(["9.9"])


def test_run_check_dispatch(stokes_tg: SeriesBundle) -> None:
    with pytest.raises(UnknownInequalityError):
        run_check(stokes_tg, "9.9", 4.0)
    with pytest.raises(ConfigError):
        run_check(stokes_tg, "2.3")
    assert run_check(stokes_tg, "1.2").inequality_id == "1.2"
    assert run_check(stokes_tg, "2.6", 4.0) == check_lp_balance(stokes_tg, 4.0)["2.6"]


def test_run_checks_order(stokes_tg: SeriesBundle) -> None:
    reports = run_checks(stokes_tg, ["1.2", "2.1", "balance", "2.3"], (4.0,))
    assert [r.inequality_id for r in reports] == ["1.2", "2.1", "2.2", "2.4", "2.6", "2.3"]


@pytest.fixture(scope="module")
def beltrami_run() -> SeriesBundle:
    """Perturbed Beltrami flow: |u| stays near 1, so the odd-p weight is smooth."""
    grid = make_grid(3, 16, 2.0 * np.pi)
    z = grid.coordinates[2]
    background = VectorField.from_values(grid, np.stack([np.sin(z), np.cos(z), np.zeros_like(z)]), solenoidal=True)
    u0 = background + random_solenoidal(grid, amplitude=0.02, seed=11)
    monitor = MonitorConfig(p_set=[3.0, 4.0, 6.0])
    config = SolverConfig(dt=0.005, t_end=0.02, snapshot_interval=0.01)
    trajectory = run(u0, config, recorder=make_recorder(monitor), keep_snapshots=False)
    return SeriesBundle.from_trajectory(trajectory, monitor.p_set)


@pytest.mark.parametrize("p", [3.0, 4.0, 6.0])
def test_integration_by_parts_identity_along_a_3d_run(beltrami_run: SeriesBundle, p: float) -> None:
    report = check_lp_balance(beltrami_run, p)["2.6"]
    assert len(report.times) == len(beltrami_run.t) >= 3
    assert report.verdict == "holds-with-C"
    assert max(lhs / rhs for lhs, rhs in zip(report.lhs, report.rhs)) <= 1e-8
