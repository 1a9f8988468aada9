"""Array-level real FFTs.

Coefficients are normalized so that ``u(x) = sum_k c_k exp(i k.x)``, i.e.
``c = rfftn(u) / n**N``. With that scaling Parseval reads
``integral |u|^2 dx = L**N * sum_k |c_k|^2`` over the full spectrum.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft
from scipy import signal

from nsap.spectral.grid import Grid, make_grid


def _spatial_axes(grid: Grid, batch: int) -> tuple[int, ...]:
    return tuple(range(batch, batch + grid.dim))


def forward_array(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Transform the trailing ``grid.dim`` axes of ``values``."""
    batch = values.ndim - grid.dim
    coeffs = sfft.rfftn(values, axes=_spatial_axes(grid, batch))
    coeffs /= grid.point_count
    return coeffs


def inverse_array(grid: Grid, coefficients: np.ndarray) -> np.ndarray:
    batch = coefficients.ndim - grid.dim
    values = sfft.irfftn(coefficients, s=grid.shape, axes=_spatial_axes(grid, batch))
    values *= grid.point_count
    return values


def spectral_l2_squared(grid: Grid, coefficients: np.ndarray) -> float:
    """``integral |u|^2`` from half-spectrum coefficients (summed over any leading axes)."""
    weighted = grid.hermitian_weights * np.abs(coefficients) ** 2
    return float(grid.volume * np.sum(weighted))


def refine_values(grid: Grid, values: np.ndarray, factor: int) -> tuple[Grid, np.ndarray]:
    """Trigonometric interpolation of ``values`` onto a grid ``factor`` times finer.

    A band-limited field keeps its Fourier modes exactly, so products of fewer
    than ``3 * factor`` dealiased fields integrate without aliasing.
    """
    if factor < 1:
        raise ValueError(f"refinement factor must be >= 1, got {factor!r}")
    if factor == 1:
        return grid, values
    fine = make_grid(grid.dim, grid.n * factor, grid.box_length)
    batch = values.ndim - grid.dim
    out = values
    for axis in _spatial_axes(grid, batch):
        out = signal.resample(out, fine.n, axis=axis)
    return fine, out
