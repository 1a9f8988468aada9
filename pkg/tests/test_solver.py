from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from nsap.harness.initial import random_solenoidal
from nsap.monitor.norms import lp_norm
from nsap.solver.config import SolverConfig
from nsap.solver.integrator import advise_dt, run, run_coupled, step
from nsap.solver.trajectory import Snapshot
from nsap.spectral.fields import VectorField


def test_config_validation() -> None:
    with pytest.raises(ValidationError):
        SolverConfig(dt=0.1, snapshot_interval=0.01)
    with pytest.raises(ValidationError):
        SolverConfig(t_end=0.1, snapshot_times=[0.05, 0.02])
    with pytest.raises(ValidationError):
        SolverConfig(viscosity=0.0)
    assert SolverConfig(scheme="etdrk2").order == 2


@pytest.mark.parametrize("scheme", ["etdrk2", "etdrk4"])
def test_stokes_flow_decays_each_mode_exactly(random_field3: VectorField, scheme: str) -> None:
    config = SolverConfig(nonlinear=False, dt=0.01, t_end=0.05, snapshot_interval=0.05, viscosity=0.7, scheme=scheme)
    trajectory = run(random_field3, config)
    grid = random_field3.grid
    expected = random_field3.coefficients * np.exp(-0.7 * 0.05 * grid.k_squared)
    got = trajectory.final.u.coefficients
    assert trajectory.final.t == pytest.approx(0.05)
    assert float(np.max(np.abs(got - expected))) <= 1e-12 * float(np.max(np.abs(expected)))


@pytest.mark.parametrize("scheme", ["etdrk2", "etdrk4"])
def test_self_convergence_matches_the_scheme_order(grid3, scheme: str) -> None:
    u0 = random_solenoidal(grid3, amplitude=1.0, seed=11)
    t_end = 1.0 / 16.0
    finals = []
    for dt in (1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0):
        config = SolverConfig(viscosity=0.1, dt=dt, t_end=t_end, snapshot_interval=t_end, scheme=scheme)
        finals.append(run(u0, config, keep_snapshots=False).final.u)
    coarse = lp_norm(finals[0] - finals[1], 2.0)
    fine = lp_norm(finals[1] - finals[2], 2.0)
    assert fine > 0
    assert abs(math.log2(coarse / fine) - config.order) <= 0.2


def test_taylor_green_decays_like_the_exact_solution(taylor_green2: VectorField) -> None:
    config = SolverConfig(dt=0.01, t_end=0.2, snapshot_interval=0.1)
    trajectory = run(taylor_green2, config)
    for snapshot in trajectory.snapshots:
        ratio = lp_norm(snapshot.u, 2) / lp_norm(taylor_green2, 2)
        assert ratio == pytest.approx(math.exp(-2.0 * snapshot.t), rel=1e-8)


def test_snapshots_land_on_event_times(random_field3: VectorField) -> None:
    config = SolverConfig(nonlinear=False, dt=0.015, t_end=0.05, snapshot_interval=0.02)
    trajectory = run(random_field3, config)
    np.testing.assert_allclose(trajectory.times, [0.0, 0.02, 0.04, 0.05], atol=1e-12)
    assert trajectory.status == "complete"


def test_explicit_snapshot_times_are_hit(random_field3: VectorField) -> None:
    config = SolverConfig(nonlinear=False, dt=0.01, t_end=0.03, snapshot_interval=0.03, snapshot_times=[0.005])
    trajectory = run(random_field3, config)
    np.testing.assert_allclose(trajectory.times, [0.0, 0.005, 0.03], atol=1e-12)


def test_recorder_receives_every_step_and_the_final_time(random_field3: VectorField) -> None:
    seen: list[float] = []

    def recorder(u: VectorField, t: float, dudt: VectorField | None = None) -> float:
        seen.append(t)
        assert dudt is not None
        return t

    config = SolverConfig(dt=0.01, t_end=0.05, snapshot_interval=0.05)
    trajectory = run(random_field3, config, recorder=recorder, record_stride=2)
    np.testing.assert_allclose(seen, [0.0, 0.02, 0.04, 0.05], atol=1e-12)
    assert trajectory.records == seen


def test_non_solenoidal_initial_data_is_rejected(grid3) -> None:
    values = np.zeros((3, *grid3.shape))
    values[0] = np.sin(grid3.coordinates[0])
    with pytest.raises(ValueError, match="solenoidal"):
        run(VectorField.from_values(grid3, values), SolverConfig(t_end=0.01, snapshot_interval=0.01))


def test_single_step_matches_run(random_field3: VectorField) -> None:
    config = SolverConfig(dt=0.01, t_end=0.01, snapshot_interval=0.01)
    stepped = step(Snapshot(t=0.0, u=random_field3), config)
    ran = run(random_field3, config).final
    assert stepped.t == pytest.approx(ran.t)
    np.testing.assert_allclose(stepped.u.values, ran.u.values, atol=1e-14)


def test_resumed_run_starts_at_t0(random_field3: VectorField) -> None:
    config = SolverConfig(nonlinear=False, dt=0.01, t_end=0.05, snapshot_interval=0.01)
    trajectory = run(random_field3, config, t0=0.03)
    np.testing.assert_allclose(trajectory.times, [0.03, 0.04, 0.05], atol=1e-12)


def test_coupled_run_reproduces_the_direct_run(random_field3: VectorField) -> None:
    from nsap.harness.initial import random_solenoidal

    w0 = random_solenoidal(random_field3.grid, amplitude=0.02, seed=21)
    config = SolverConfig(dt=0.005, t_end=0.02, snapshot_interval=0.01)
    coupled = run_coupled(random_field3, w0, config)
    direct = run(random_field3 + w0, config)
    gap = coupled.combined.final.u.values - direct.final.u.values
    assert float(np.linalg.norm(gap)) <= 1e-10 * float(np.linalg.norm(direct.final.u.values))
    assert not coupled.escaped


def test_cfl_advisor() -> None:
    from nsap.spectral.grid import make_grid

    grid = make_grid(2, 8, 1.0)
    assert advise_dt(VectorField.zeros(grid), SolverConfig()) == math.inf
