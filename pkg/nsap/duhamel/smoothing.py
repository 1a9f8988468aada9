"""Rough initial data, smoothing-rate fits and mixed space-time norms."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Literal, Sequence

import numpy as np
from scipy import stats

from nsap.monitor.exponents import ExponentTable
from nsap.monitor.norms import magnitude_norm
from nsap.monitor.series import time_integral
from nsap.solver.config import SolverConfig
from nsap.solver.nonlinear import nonlinear_term
from nsap.solver.trajectory import Trajectory
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import Grid
from nsap.spectral.operators import laplacian, leray_coefficients
from nsap.spectral.transforms import forward_array, inverse_array

logger = logging.getLogger(__name__)

RoughProfile = Literal["flat", "critical"]
MIN_FIT_POINTS = 3


def _scale_to_peak(grid: Grid, coeffs: np.ndarray, amplitude: float) -> VectorField:
    u = VectorField.from_coefficients(grid, leray_coefficients(grid, coeffs), solenoidal=True)
    peak = float(np.max(u.magnitude()))
    if peak == 0.0:
        return u
    return u.scaled(amplitude / peak)


def _flat(grid: Grid, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(grid.dim, *grid.spectral_shape))
    coeffs = np.where(grid.dealias_mask, np.exp(1j * phases), 0.0)
    # round trip through physical space makes the half spectrum Hermitian
    return forward_array(grid, inverse_array(grid, coeffs))


def _periodic_offsets(grid: Grid, center: Sequence[float]) -> list[np.ndarray]:
    half = 0.5 * grid.box_length
    return [((x - c + half) % grid.box_length) - half for x, c in zip(grid.coordinates, center)]


def _critical(grid: Grid, p: float, center: Sequence[float]) -> np.ndarray:
    """``u = grad(psi) x e`` with ``psi = (r^2 + h^2)^((1 - N/p)/2)``, so ``|u| ~ r^(-N/p)``."""
    offsets = _periodic_offsets(grid, center)
    r2 = sum(d**2 for d in offsets) + grid.spacing**2
    psi_hat = forward_array(grid, r2 ** (0.5 * (1.0 - grid.dim / p)))
    grad_hat = 1j * grid.derivative_wavenumbers * psi_hat
    if grid.dim == 2:
        return np.stack([grad_hat[1], -grad_hat[0]])
    e = np.ones(3) / math.sqrt(3.0)
    return np.stack(
        [
            grad_hat[1] * e[2] - grad_hat[2] * e[1],
            grad_hat[2] * e[0] - grad_hat[0] * e[2],
            grad_hat[0] * e[1] - grad_hat[1] * e[0],
        ]
    )


def rough_initial(
    grid: Grid,
    *,
    profile: RoughProfile = "critical",
    p: float = 4.0,
    amplitude: float = 1.0,
    seed: int = 0,
    center: Sequence[float] | None = None,
) -> VectorField:
    """Solenoidal data with no smoothness beyond the grid.

    ``flat``: unit coefficient magnitude with random phases up to the
    dealiasing cutoff. ``critical``: the ``L^p``-critical singular profile
    centred at ``center`` (box centre by default), regularized at grid scale.
    """
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude!r}")
    if profile == "flat":
        coeffs = _flat(grid, seed)
    elif profile == "critical":
        if p <= grid.dim:
            raise ValueError(f"critical profile needs p > N={grid.dim}, got {p!r}")
        coeffs = _critical(grid, p, center or [0.5 * grid.box_length] * grid.dim)
    else:
        raise ValueError(f"unknown rough profile {profile!r}")
    return _scale_to_peak(grid, coeffs, amplitude)


def log_spaced_times(t_min: float, t_max: float, count: int) -> list[float]:
    if not 0 < t_min < t_max:
        raise ValueError(f"need 0 < t_min < t_max, got {t_min!r}, {t_max!r}")
    if count < MIN_FIT_POINTS:
        raise ValueError(f"count must be >= {MIN_FIT_POINTS}, got {count!r}")
    return [float(t) for t in np.geomspace(t_min, t_max, count)]


# ----------------------------------------------------------------------
# Rate fits
# ----------------------------------------------------------------------
def derivative_magnitude(u: VectorField, space_order: int) -> np.ndarray:
    """Pointwise Euclidean size of all spatial derivatives of order ``space_order``."""
    if space_order < 0:
        raise ValueError(f"space_order must be >= 0, got {space_order!r}")
    grid = u.grid
    kk = grid.derivative_wavenumbers
    coeffs = np.asarray(u.coefficients)
    for _ in range(space_order):
        coeffs = (1j * kk[:, None] * coeffs[None]).reshape((-1, *grid.spectral_shape))
    values = inverse_array(grid, coeffs)
    return np.sqrt(np.sum(values**2, axis=0))


def time_derivative_field(u: VectorField, config: SolverConfig) -> VectorField:
    """``du/dt`` from the equation: ``nu lap u - P div(u (x) u)``."""
    out = laplacian(u).scaled(config.viscosity)
    if config.nonlinear:
        out = out - nonlinear_term(u, form=config.nonlinear_form, dealias=config.dealias)
    return out


@dataclass(frozen=True)
class SmoothingFit:
    sigma_hat: float
    sigma: float
    intercept: float
    rvalue: float
    points: int
    q: float
    time_order: int
    space_order: int

    @property
    def relative_error(self) -> float:
        if self.sigma == 0:
            return abs(self.sigma_hat)
        return abs(self.sigma_hat - self.sigma) / abs(self.sigma)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sigma_hat": self.sigma_hat,
            "sigma": self.sigma,
            "intercept": self.intercept,
            "rvalue": self.rvalue,
            "points": self.points,
            "q": self.q,
            "time_order": self.time_order,
            "space_order": self.space_order,
            "relative_error": self.relative_error,
        }


def _samples(source: Trajectory | Sequence[tuple[float, VectorField]]) -> list[tuple[float, VectorField]]:
    if isinstance(source, Trajectory):
        return [(s.t, s.u) for s in source.snapshots]
    return [(float(t), u) for t, u in source]


def smoothing_rate_fit(
    source: Trajectory | Sequence[tuple[float, VectorField]],
    q: float,
    *,
    p: float,
    time_order: int = 0,
    space_order: int = 0,
    window: tuple[float, float] | None = None,
    config: SolverConfig | None = None,
) -> SmoothingFit:
    """Least-squares slope of ``log ||d_t^k d_x^a u(t)||_q`` against ``-log t``.

    ``time_order`` may be 0 or 1; the time derivative is taken from the
    equation with ``config`` (a trajectory's own config when omitted).
    """
    if time_order not in (0, 1):
        raise ValueError(f"time_order must be 0 or 1, got {time_order!r}")
    if time_order == 1 and config is None:
        if not isinstance(source, Trajectory):
            raise ValueError("time_order=1 needs a solver config")
        config = source.config

    samples = [(t, u) for t, u in _samples(source) if t > 0]
    if window is not None:
        samples = [(t, u) for t, u in samples if window[0] <= t <= window[1]]
    if len(samples) < MIN_FIT_POINTS:
        raise ValueError(f"smoothing fit needs at least {MIN_FIT_POINTS} positive sample times, got {len(samples)}")

    x, y = [], []
    for t, u in samples:
        field = time_derivative_field(u, config) if time_order == 1 else u
        norm = magnitude_norm(u.grid, derivative_magnitude(field, space_order), q)
        if not norm > 0 or not math.isfinite(norm):
            raise ValueError(f"degenerate norm {norm!r} at t={t:g}")
        x.append(-math.log(t))
        y.append(math.log(norm))
    if np.ptp(x) == 0.0:
        raise ValueError("smoothing fit needs distinct sample times")

    fit = stats.linregress(x, y)
    sigma = ExponentTable.build(p, samples[0][1].grid.dim).smoothing_sigma(
        time_order=time_order, space_order=space_order, q=q
    )
    result = SmoothingFit(
        sigma_hat=float(fit.slope),
        sigma=sigma,
        intercept=float(fit.intercept),
        rvalue=float(fit.rvalue),
        points=len(samples),
        q=float(q),
        time_order=time_order,
        space_order=space_order,
    )
    logger.info("Smoothing fit q=%g k=%d |a|=%d: sigma_hat=%.4f sigma=%.4f", q, time_order, space_order,
                result.sigma_hat, result.sigma)
    return result


# ----------------------------------------------------------------------
# Mixed norms
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class MixedNormValue:
    p: float
    q: float
    r: float
    value: float
    t_end: float

    def to_dict(self) -> dict[str, float]:
        return {"p": self.p, "q": self.q, "r": self.r, "value": self.value, "t_end": self.t_end}


def mixed_norm_integral(source: Trajectory | Sequence[tuple[float, VectorField]], p: float, q: float) -> MixedNormValue:
    """``int ||u||_q^r dt`` over the sampled interval with ``2/r + N/q = N/p``; informational."""
    samples = _samples(source)
    if len(samples) < 2:
        raise ValueError("mixed norm needs at least two samples")
    grid = samples[0][1].grid
    r = ExponentTable.build(p, grid.dim).mixed_time_exponent(q)
    t = np.array([s[0] for s in samples])
    values = np.array([magnitude_norm(grid, u.magnitude(), q) ** r for _, u in samples])
    return MixedNormValue(float(p), float(q), r, time_integral(t, values), float(t[-1]))
