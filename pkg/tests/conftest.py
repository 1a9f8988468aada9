from __future__ import annotations

import math
from pathlib import Path

import pytest

from nsap.harness.initial import random_solenoidal, taylor_green
from nsap.harness.scenario import ScenarioSpec, parse_scenario
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import Grid, make_grid


@pytest.fixture
def runs_root(tmp_path: Path) -> Path:
    return tmp_path / "runs"


@pytest.fixture
def grid3() -> Grid:
    return make_grid(3, 16, 2.0 * math.pi)


@pytest.fixture
def grid2() -> Grid:
    return make_grid(2, 32, 2.0 * math.pi)


@pytest.fixture
def random_field3(grid3: Grid) -> VectorField:
    return random_solenoidal(grid3, amplitude=0.5, seed=11)


@pytest.fixture
def random_field2(grid2: Grid) -> VectorField:
    return random_solenoidal(grid2, amplitude=0.5, seed=5)


@pytest.fixture
def taylor_green2(grid2: Grid) -> VectorField:
    return taylor_green(grid2)


@pytest.fixture
def small_scenario(tmp_path: Path) -> ScenarioSpec:
    """Desk-scale 3D run: low amplitude, two snapshots, one exponent."""
    return parse_scenario(
        {
            "grid": {"dim": 3, "n": 16},
            "ic": {"kind": "random_solenoidal", "amplitude": 0.2, "seed": 3},
            "solver": {"dt": 0.002, "t_end": 0.02, "snapshot_interval": 0.01},
            "monitor": {"p_set": [4.0], "checks": ["1.2", "2.1", "2.2", "2.3", "2.6", "monotone"]},
            "output": {"name": "small"},
        }
    )
