"""Projected, dealiased advection terms.

Both forms are built from the bilinear operator ``B(a, b)``:

- divergence form: ``B(a, b)_m = sum_k d_k (a_m b_k)``;
- skew-symmetric form: the average of the divergence form and ``(b . grad) a``.

``nonlinear_term(u) = leray(B(u, u))``. Bilinearity gives
``nonlinear_term(v + w) = nonlinear_term(v) + perturbed_nonlinear(v, w)``.
"""

from __future__ import annotations

import numpy as np

from nsap.solver.config import NonlinearForm
from nsap.spectral.fields import VectorField, require_same_grid
from nsap.spectral.grid import Grid
from nsap.spectral.operators import leray_coefficients
from nsap.spectral.transforms import forward_array, inverse_array


def bilinear_coefficients(
    grid: Grid,
    a_values: np.ndarray,
    b_values: np.ndarray,
    a_coeffs: np.ndarray,
    *,
    form: NonlinearForm = "skew_symmetric",
    dealias: bool = True,
) -> np.ndarray:
    """Spectral coefficients of the (unprojected) ``B(a, b)``."""
    kk = grid.derivative_wavenumbers
    product = forward_array(grid, np.einsum("m...,k...->mk...", a_values, b_values))
    out = np.sum(1j * kk[None, :] * product, axis=1)
    if form == "skew_symmetric":
        grad_a = inverse_array(grid, 1j * kk[:, None] * a_coeffs[None, :])  # [k, m] = d_k a_m
        advective = forward_array(grid, np.einsum("k...,km...->m...", b_values, grad_a))
        out = 0.5 * (out + advective)
    if dealias:
        out = np.where(grid.dealias_mask, out, 0.0)
    return out


def nonlinear_coefficients(
    grid: Grid,
    u_coeffs: np.ndarray,
    *,
    form: NonlinearForm = "skew_symmetric",
    dealias: bool = True,
    u_values: np.ndarray | None = None,
) -> np.ndarray:
    values = inverse_array(grid, u_coeffs) if u_values is None else u_values
    raw = bilinear_coefficients(grid, values, values, u_coeffs, form=form, dealias=dealias)
    return leray_coefficients(grid, raw)


def perturbed_coefficients(
    grid: Grid,
    v_coeffs: np.ndarray,
    w_coeffs: np.ndarray,
    *,
    form: NonlinearForm = "skew_symmetric",
    dealias: bool = True,
) -> np.ndarray:
    v = inverse_array(grid, v_coeffs)
    w = inverse_array(grid, w_coeffs)
    raw = (
        bilinear_coefficients(grid, v, w, v_coeffs, form=form, dealias=dealias)
        + bilinear_coefficients(grid, w, v, w_coeffs, form=form, dealias=dealias)
        + bilinear_coefficients(grid, w, w, w_coeffs, form=form, dealias=dealias)
    )
    return leray_coefficients(grid, raw)


def nonlinear_term(
    u: VectorField, *, form: NonlinearForm = "skew_symmetric", dealias: bool = True
) -> VectorField:
    coeffs = nonlinear_coefficients(u.grid, u.coefficients, form=form, dealias=dealias, u_values=u.values)
    return VectorField.from_coefficients(u.grid, coeffs, solenoidal=True)


def perturbed_nonlinear(
    v: VectorField, w: VectorField, *, form: NonlinearForm = "skew_symmetric", dealias: bool = True
) -> VectorField:
    """``leray(B(v, w) + B(w, v) + B(w, w))``; in divergence form this is
    ``leray(2 div(v (x)_s w) + div(w (x) w))``."""
    grid = require_same_grid(v.grid, w.grid)
    coeffs = perturbed_coefficients(grid, v.coefficients, w.coefficients, form=form, dealias=dealias)
    return VectorField.from_coefficients(grid, coeffs, solenoidal=True)
