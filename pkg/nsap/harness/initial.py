"""Initial-condition library.

Every generated field is mean-free, Leray-projected and, except for
``taylor_green`` (an exact solution kept analytic), scaled to the requested
peak speed. Random fields are drawn from a Philox generator keyed by the
scenario seed, so one seed always gives the same bits.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from nsap.duhamel.smoothing import rough_initial
from nsap.errors import CheckpointFormatError, ConfigError
from nsap.harness.scenario import InitialSpec
from nsap.spectral.checkpoint import read_checkpoint
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import Grid
from nsap.spectral.operators import leray_coefficients
from nsap.spectral.transforms import forward_array, inverse_array

logger = logging.getLogger(__name__)


def _peak_scaled(grid: Grid, coeffs: np.ndarray, amplitude: float) -> VectorField:
    coeffs = np.where(grid.dealias_mask, coeffs, 0.0)
    u = VectorField.from_coefficients(grid, leray_coefficients(grid, coeffs), solenoidal=True)
    peak = float(np.max(u.magnitude()))
    if peak == 0.0:
        return u
    return u.scaled(amplitude / peak)


def taylor_green(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """``(sin x cos y [cos z], -cos x sin y [cos z], 0)`` in box-scaled coordinates."""
    scaled = [grid.k_unit * x for x in grid.coordinates]
    if grid.dim == 2:
        x, y = scaled
        values = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
    else:
        x, y, z = scaled
        values = np.stack(
            [np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), np.zeros(grid.shape)]
        )
    return VectorField.from_values(grid, amplitude * values, solenoidal=True)


def random_solenoidal(grid: Grid, *, amplitude: float = 1.0, k0: float = 2.0, seed: int = 0) -> VectorField:
    """Random phases under the shell spectrum ``E(k) ~ k^4 exp(-k^2/k0^2)`` (``k`` in index units)."""
    rng = np.random.Generator(np.random.Philox(seed))
    k = grid.k_magnitude / grid.k_unit
    safe = np.where(k > 0, k, 1.0)
    # shell area grows like k^(N-1)
    modal = np.where(k > 0, safe**4 * np.exp(-((safe / k0) ** 2)) / safe ** (grid.dim - 1), 0.0)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(grid.dim, *grid.spectral_shape))
    coeffs = np.sqrt(modal) * np.exp(1j * phases)
    coeffs = forward_array(grid, inverse_array(grid, coeffs))
    return _peak_scaled(grid, coeffs, amplitude)


def localized_bump(grid: Grid, *, amplitude: float = 1.0, width: float = 0.25) -> VectorField:
    """Curl of ``exp(1 - 1/(1 - (r/R)^2))`` times a fixed axis, centred at ``L/2``, ``R = width * L``."""
    radius = width * grid.box_length
    centre = 0.5 * grid.box_length
    r2 = sum((x - centre) ** 2 for x in grid.coordinates) / radius**2
    inside = r2 < 1.0
    bump = np.zeros(grid.shape)
    bump[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    grad_hat = 1j * grid.derivative_wavenumbers * forward_array(grid, bump)
    if grid.dim == 2:
        coeffs = np.stack([grad_hat[1], -grad_hat[0]])
    else:
        e = np.ones(3) / math.sqrt(3.0)
        coeffs = np.stack(
            [
                grad_hat[1] * e[2] - grad_hat[2] * e[1],
                grad_hat[2] * e[0] - grad_hat[0] * e[2],
                grad_hat[0] * e[1] - grad_hat[1] * e[0],
            ]
        )
    return _peak_scaled(grid, coeffs, amplitude)


def from_checkpoint(grid: Grid, spec: InitialSpec) -> VectorField:
    try:
        u, t = read_checkpoint(spec.checkpoint or "")
    except (OSError, CheckpointFormatError) as exc:
        raise ConfigError(f"cannot read initial checkpoint {spec.checkpoint!r}: {exc}") from exc
    if u.grid != grid:
        raise ConfigError(f"checkpoint grid {u.grid} does not match scenario grid {grid}")
    logger.info("Initial field from %s (stored at t=%g)", spec.checkpoint, t)
    if spec.amplitude is None:
        return u
    peak = float(np.max(u.magnitude()))
    return u if peak == 0.0 else u.scaled(spec.amplitude / peak)


def make_initial(spec: InitialSpec, grid: Grid) -> VectorField:
    if spec.kind == "taylor_green":
        return taylor_green(grid, spec.peak_speed)
    if spec.kind == "random_solenoidal":
        return random_solenoidal(grid, amplitude=spec.peak_speed, k0=spec.k0, seed=spec.seed)
    if spec.kind == "localized_bump":
        return localized_bump(grid, amplitude=spec.peak_speed, width=spec.width)
    if spec.kind == "from_checkpoint":
        return from_checkpoint(grid, spec)
    if spec.kind == "rough":
        try:
            return rough_initial(grid, profile=spec.profile, p=spec.p, amplitude=spec.peak_speed, seed=spec.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown initial condition kind {spec.kind!r}")
