"""Spectral differential operators, Riesz transforms and the Leray projector.

Conventions:

- first derivatives multiply by ``i k`` with the Nyquist component zeroed;
- ``R_j`` has symbol ``-i k_j / |k|``;
- ``P = sum_jk R_j R_k (u_j u_k)`` is the kinematic pressure of
  ``du/dt + (u.grad)u = -grad P + nu lap u``, so ``-lap P = d_j d_k (u_j u_k)``
  and ``leray(div(u (x) u)) = div(u (x) u) + grad P``;
- multipliers singular at ``k = 0`` map the mean mode to zero.
"""

from __future__ import annotations

from typing import TypeVar, overload

import numpy as np

from nsap.spectral.fields import ScalarField, TensorField, VectorField, outer
from nsap.spectral.grid import Grid
from nsap.spectral.transforms import spectral_l2_squared

AnyField = TypeVar("AnyField", ScalarField, VectorField, TensorField)


def transform_forward(field: ScalarField) -> np.ndarray:
    return np.array(field.coefficients)


def transform_inverse(grid: Grid, coefficients: np.ndarray) -> ScalarField:
    return ScalarField.from_coefficients(grid, coefficients)


def parseval_l2_squared(field: ScalarField | VectorField) -> float:
    return spectral_l2_squared(field.grid, field.coefficients)


# ----------------------------------------------------------------------
# Derivatives
# ----------------------------------------------------------------------
def spectral_derivative(field: ScalarField, axis: int) -> ScalarField:
    grid = field.grid
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis must be in [0, {grid.dim}), got {axis!r}")
    return ScalarField.from_coefficients(grid, 1j * grid.derivative_wavenumbers[axis] * field.coefficients)


def scalar_gradient(field: ScalarField) -> VectorField:
    grid = field.grid
    return VectorField.from_coefficients(grid, 1j * grid.derivative_wavenumbers * field.coefficients)


def gradient(u: VectorField) -> TensorField:
    """Velocity gradient with entries ``G[j, k] = d_j u_k``."""
    grid = u.grid
    coeffs = 1j * grid.derivative_wavenumbers[:, None] * u.coefficients[None, :]
    return TensorField.from_coefficients(grid, coeffs)


def divergence(u: VectorField) -> ScalarField:
    grid = u.grid
    return ScalarField.from_coefficients(grid, np.sum(1j * grid.derivative_wavenumbers * u.coefficients, axis=0))


def tensor_divergence(tensor: TensorField) -> VectorField:
    """``(div A)_m = sum_k d_k A_mk``."""
    grid = tensor.grid
    coeffs = np.sum(1j * grid.derivative_wavenumbers[None, :] * tensor.coefficients, axis=1)
    return VectorField.from_coefficients(grid, coeffs)


@overload
def laplacian(field: ScalarField) -> ScalarField: ...
@overload
def laplacian(field: VectorField) -> VectorField: ...
def laplacian(field: ScalarField | VectorField) -> ScalarField | VectorField:
    grid = field.grid
    coeffs = -grid.derivative_k_squared * field.coefficients
    if isinstance(field, VectorField):
        return VectorField.from_coefficients(grid, coeffs, solenoidal=field.solenoidal)
    return ScalarField.from_coefficients(grid, coeffs)


# ----------------------------------------------------------------------
# Zero-order multipliers
# ----------------------------------------------------------------------
def _inverse_k_magnitude(grid: Grid) -> np.ndarray:
    k2 = grid.derivative_k_squared
    safe = np.where(k2 > 0, k2, 1.0)
    return np.where(k2 > 0, 1.0 / np.sqrt(safe), 0.0)


def riesz_apply(field: ScalarField, j: int) -> ScalarField:
    grid = field.grid
    if not 0 <= j < grid.dim:
        raise ValueError(f"j must be in [0, {grid.dim}), got {j!r}")
    symbol = -1j * grid.derivative_wavenumbers[j] * _inverse_k_magnitude(grid)
    return ScalarField.from_coefficients(grid, symbol * field.coefficients)


def riesz_contract(tensor: TensorField) -> ScalarField:
    """``sum_jk R_j R_k A_jk``, symbol ``-k_j k_k / |k|^2``."""
    grid = tensor.grid
    kk = grid.derivative_wavenumbers
    inv = _inverse_k_magnitude(grid) ** 2
    coeffs = -np.einsum("j...,k...,jk...->...", kk, kk, tensor.coefficients) * inv
    return ScalarField.from_coefficients(grid, coeffs)


def pressure_from_velocity(u: VectorField, *, dealiased: bool = True) -> ScalarField:
    product = outer(u, u)
    if dealiased:
        product = dealias(product)
    return riesz_contract(product)


def leray_coefficients(grid: Grid, coefficients: np.ndarray) -> np.ndarray:
    kk = grid.derivative_wavenumbers
    k2 = grid.derivative_k_squared
    safe = np.where(k2 > 0, k2, 1.0)
    k_dot = np.sum(kk * coefficients, axis=0)
    projected = coefficients - kk * (k_dot / safe)
    projected[:, k2 == 0] = 0.0
    return projected


def leray_project(f: VectorField) -> VectorField:
    return VectorField.from_coefficients(f.grid, leray_coefficients(f.grid, f.coefficients), solenoidal=True)


def divergence_residual(u: VectorField) -> float:
    """``max |k.u_hat| / max |u_hat|`` (0 for the zero field)."""
    grid = u.grid
    scale = float(np.max(np.abs(u.coefficients)))
    if scale == 0.0:
        return 0.0
    k_dot = np.sum(grid.derivative_wavenumbers * u.coefficients, axis=0)
    return float(np.max(np.abs(k_dot))) / (scale * grid.k_unit)


def is_solenoidal(u: VectorField, rtol: float = 1e-10) -> bool:
    mean = np.max(np.abs(u.coefficients[(slice(None),) + (0,) * u.grid.dim]))
    return divergence_residual(u) <= rtol and mean <= rtol * max(1.0, float(np.max(np.abs(u.coefficients))))


def dealias(field: AnyField) -> AnyField:
    grid = field.grid
    coeffs = np.where(grid.dealias_mask, field.coefficients, 0.0)
    if isinstance(field, VectorField):
        return VectorField.from_coefficients(grid, coeffs, solenoidal=field.solenoidal)
    if isinstance(field, TensorField):
        return TensorField.from_coefficients(grid, coeffs, symmetric=field.symmetric)
    return ScalarField.from_coefficients(grid, coeffs)


def inner_product(a: VectorField, b: VectorField) -> float:
    """Grid quadrature of ``a . b``."""
    return float(np.sum(a.values * b.values) * a.grid.cell_volume)
