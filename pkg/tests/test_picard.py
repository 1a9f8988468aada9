from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from nsap.duhamel.picard import PicardConfig, duhamel_residual, heat_semigroup, oracle_distance, picard_solve
from nsap.harness.initial import random_solenoidal
from nsap.monitor.norms import lp_norm
from nsap.solver.config import SolverConfig
from nsap.solver.integrator import run
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import Grid


def test_config_validation() -> None:
    with pytest.raises(ValidationError):
        PicardConfig(time_nodes=9)
    with pytest.raises(ValidationError):
        PicardConfig(time_nodes=4)
    with pytest.raises(ValidationError):
        PicardConfig(quadrature="simpson")
    assert PicardConfig(t_end=0.1, time_nodes=8).node_times[-1] == pytest.approx(0.1)


def test_heat_semigroup(random_field3: VectorField) -> None:
    with pytest.raises(ValueError):
        heat_semigroup(random_field3, -1.0)
    np.testing.assert_allclose(heat_semigroup(random_field3, 0.0).values, random_field3.values, atol=1e-15)
    later = heat_semigroup(random_field3, 0.1, viscosity=0.5)
    expected = random_field3.coefficients * np.exp(-0.05 * random_field3.grid.k_squared)
    np.testing.assert_allclose(later.coefficients, expected, atol=1e-14)


def test_zero_data_converges_immediately(grid3: Grid) -> None:
    result = picard_solve(VectorField.zeros(grid3), PicardConfig(time_nodes=8))
    assert result.converged
    assert result.iterations == 1
    assert result.distance == 0.0


@pytest.mark.parametrize("quadrature", ["trapezoid", "exponential"])
def test_small_data_contracts(grid3: Grid, quadrature: str) -> None:
    u0 = random_solenoidal(grid3, amplitude=0.1, seed=2)
    config = PicardConfig(t_end=0.05, time_nodes=16, quadrature=quadrature)
    result = picard_solve(u0, config)
    assert result.converged
    assert result.distance <= config.tol
    assert all(r < 0.5 for r in result.ratios)
    residual = duhamel_residual(result.samples, u0, config)
    assert residual.shape == (17,)
    assert float(np.max(residual)) <= 1e-8


def test_oracle_matches_the_time_stepper(grid3: Grid) -> None:
    u0 = random_solenoidal(grid3, amplitude=0.1, seed=4)
    picard = picard_solve(u0, PicardConfig(t_end=0.05, time_nodes=32, quadrature="exponential"))
    config = SolverConfig(dt=0.05 / 64, t_end=0.05, snapshot_interval=0.0125, nonlinear_form="divergence")
    trajectory = run(u0, config)
    assert oracle_distance(picard, trajectory.snapshots) <= 1e-4


def test_oracle_needs_matching_times(grid3: Grid) -> None:
    u0 = random_solenoidal(grid3, amplitude=0.1, seed=4)
    picard = picard_solve(u0, PicardConfig(t_end=0.05, time_nodes=8, max_iter=2))
    trajectory = run(u0, SolverConfig(dt=0.01, t_end=0.01, snapshot_interval=0.01))
    with pytest.raises(ValueError, match="no snapshot time"):
        oracle_distance(picard, trajectory.snapshots[1:])


def test_non_converging_attempts_halve_the_horizon(grid3: Grid) -> None:
    u0 = random_solenoidal(grid3, amplitude=0.1, seed=6)
    result = picard_solve(u0, PicardConfig(t_end=0.08, time_nodes=8, max_iter=1, tol=1e-300, max_halvings=2))
    assert not result.converged
    assert result.halvings == 2
    assert result.t_end == pytest.approx(0.02)
    assert lp_norm(result.final, 2) > 0
