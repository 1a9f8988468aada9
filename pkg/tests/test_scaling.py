from __future__ import annotations

import pytest

from nsap.monitor.scaling import (
    require_power_of_two,
    rescale_field,
    scaled_config,
    scaling_test,
    trajectory_scaling_gap,
)
from nsap.solver.config import SolverConfig
from nsap.spectral.fields import VectorField


@pytest.mark.parametrize(("lam", "k"), [(1, 0), (2, 1), (8.0, 3)])
def test_power_of_two(lam: float, k: int) -> None:
    assert require_power_of_two(lam) == k


@pytest.mark.parametrize("lam", [0.5, 3, 2.5, 0, -2])
def test_power_of_two_rejects(lam: float) -> None:
    with pytest.raises(ValueError):
        require_power_of_two(lam)


def test_rescaled_field_lives_on_a_smaller_box(random_field3: VectorField) -> None:
    scaled = rescale_field(random_field3, 2)
    assert scaled.grid.box_length == pytest.approx(random_field3.grid.box_length / 2)
    assert scaled.grid.n == random_field3.grid.n
    assert float(scaled.values.max()) == pytest.approx(2 * float(random_field3.values.max()))


@pytest.mark.parametrize("p", [4.0, 6.0])
def test_kappa_is_scaling_invariant(random_field3: VectorField, p: float) -> None:
    report = scaling_test(random_field3, 2, p)
    assert report.invariant
    payload = report.to_dict()
    assert payload["kappa_delta"] <= 1e-10
    assert payload["lN_delta"] <= 1e-10
    assert payload["l2_scaling_delta"] <= 1e-10
    assert payload["lambda"] == 2.0


def test_scaled_config() -> None:
    config = SolverConfig(dt=0.004, t_end=0.04, snapshot_interval=0.02, snapshot_times=[0.01])
    scaled = scaled_config(config, 2)
    assert scaled.dt == 0.001
    assert scaled.t_end == 0.01
    assert scaled.snapshot_interval == 0.005
    assert scaled.snapshot_times == [0.0025]
    assert scaled.viscosity == config.viscosity


def test_trajectory_scaling(random_field2: VectorField) -> None:
    config = SolverConfig(dt=0.005, t_end=0.02, snapshot_interval=0.01)
    assert trajectory_scaling_gap(random_field2, config, 2) < 1e-10
