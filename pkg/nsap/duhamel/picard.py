"""Mild solutions by Picard iteration on the Duhamel formula.

``u(t) = e^{t nu lap} u0 - int_0^t e^{(t-s) nu lap} P div(u (x) u)(s) ds``
on ``M + 1`` equally spaced nodes. The semigroup factor is applied exactly;
only the forcing is interpolated in time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from nsap.monitor.norms import magnitude_norm
from nsap.solver.config import NonlinearForm
from nsap.solver.integrator import contour_mean
from nsap.solver.nonlinear import nonlinear_coefficients
from nsap.solver.trajectory import Snapshot
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import Grid
from nsap.spectral.operators import leray_coefficients
from nsap.spectral.transforms import inverse_array

logger = logging.getLogger(__name__)

Quadrature = Literal["trapezoid", "exponential"]


class PicardConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    t_end: float = Field(default=0.05, gt=0.0)
    time_nodes: int = Field(default=16, ge=8)
    max_iter: int = Field(default=50, ge=1)
    tol: float = Field(default=1e-10, gt=0.0)
    p_norm: float = Field(default=4.0, ge=2.0)
    viscosity: float = Field(default=1.0, gt=0.0)
    quadrature: Quadrature = "trapezoid"
    nonlinear_form: NonlinearForm = "divergence"
    dealias: bool = True
    max_halvings: int = Field(default=0, ge=0)

    @field_validator("time_nodes")
    @classmethod
    def validate_time_nodes(cls, value: int) -> int:
        if value % 2 != 0:
            raise ValueError(f"time_nodes must be even, got {value}")
        return value

    @property
    def node_times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.time_nodes + 1)


@dataclass(frozen=True)
class PicardResult:
    iterations: int
    converged: bool
    distance: float
    ratios: list[float]
    times: np.ndarray
    samples: list[VectorField]
    t_end: float
    halvings: int = 0
    distances: list[float] = field(default_factory=list)

    @property
    def final(self) -> VectorField:
        return self.samples[-1]

    def snapshots(self) -> list[Snapshot]:
        return [Snapshot(t=float(t), u=u) for t, u in zip(self.times, self.samples)]

    def summary(self) -> dict[str, object]:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "distance": self.distance,
            "ratios": list(self.ratios),
            "t_end": self.t_end,
            "halvings": self.halvings,
        }


def heat_semigroup(u0: VectorField, t: float, viscosity: float = 1.0) -> VectorField:
    """``e^{t nu lap} u0``, exact in spectral space."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    multiplier = np.exp(-viscosity * t * u0.grid.k_squared)
    return VectorField.from_coefficients(u0.grid, u0.coefficients * multiplier, solenoidal=u0.solenoidal)


@dataclass(frozen=True)
class _StepWeights:
    decay: np.ndarray
    previous: np.ndarray
    current: np.ndarray


@lru_cache(maxsize=16)
def _step_weights(grid: Grid, viscosity: float, h: float, quadrature: str) -> _StepWeights:
    """Weights of ``int_0^h e^{(h-s) nu lap} F(s) ds ~ a F(0) + b F(h)``."""
    decay = np.exp(-viscosity * h * grid.k_squared)
    if quadrature == "trapezoid":
        return _StepWeights(decay, 0.5 * h * decay, np.full_like(decay, 0.5 * h))
    unique_k2, inverse = np.unique(grid.k_squared, return_inverse=True)
    z = -viscosity * h * unique_k2
    phi1 = contour_mean(z, lambda lr: (np.exp(lr) - 1.0) / lr)[inverse].reshape(grid.spectral_shape)
    phi2 = contour_mean(z, lambda lr: (np.exp(lr) - 1.0 - lr) / lr**2)[inverse].reshape(grid.spectral_shape)
    return _StepWeights(decay, h * (phi1 - phi2), h * phi2)


def _forcing(grid: Grid, states: np.ndarray, config: PicardConfig) -> np.ndarray:
    return np.stack(
        [nonlinear_coefficients(grid, s, form=config.nonlinear_form, dealias=config.dealias) for s in states]
    )


def _duhamel_map(grid: Grid, u0_hat: np.ndarray, states: np.ndarray, config: PicardConfig) -> np.ndarray:
    h = config.t_end / config.time_nodes
    weights = _step_weights(grid, config.viscosity, h, config.quadrature)
    forcing = _forcing(grid, states, config)
    out = np.empty_like(states)
    out[0] = u0_hat
    free = u0_hat
    integral = np.zeros_like(u0_hat)
    for j in range(1, states.shape[0]):
        free = weights.decay * free
        integral = weights.decay * integral + weights.previous * forcing[j - 1] + weights.current * forcing[j]
        out[j] = free - integral
    return out


def _sup_distance(grid: Grid, a: np.ndarray, b: np.ndarray, p: float) -> float:
    worst = 0.0
    for diff in a - b:
        values = inverse_array(grid, diff)
        worst = max(worst, magnitude_norm(grid, np.sqrt(np.sum(values**2, axis=0)), p))
    return worst


def _free_evolution(grid: Grid, u0_hat: np.ndarray, config: PicardConfig) -> np.ndarray:
    times = config.node_times
    return np.stack([u0_hat * np.exp(-config.viscosity * t * grid.k_squared) for t in times])


def _iterate(u0: VectorField, config: PicardConfig) -> tuple[np.ndarray, list[float], bool]:
    grid = u0.grid
    u0_hat = leray_coefficients(grid, np.array(u0.coefficients))
    states = _free_evolution(grid, u0_hat, config)
    distances: list[float] = []
    for iteration in range(1, config.max_iter + 1):
        updated = _duhamel_map(grid, u0_hat, states, config)
        if not np.all(np.isfinite(updated)):
            logger.warning("Picard iterate %d is not finite", iteration)
            distances.append(math.inf)
            return states, distances, False
        distance = _sup_distance(grid, updated, states, config.p_norm)
        distances.append(distance)
        states = updated
        logger.debug("Picard iterate %d: sup distance %g", iteration, distance)
        if distance <= config.tol:
            return states, distances, True
        if len(distances) >= 3 and distances[-1] >= distances[-2] >= distances[-3]:
            return states, distances, False
    return states, distances, False


def _ratios(distances: Sequence[float]) -> list[float]:
    return [b / a if a > 0 else 0.0 for a, b in zip(distances, distances[1:])]


def picard_solve(u0: VectorField, config: PicardConfig) -> PicardResult:
    """Iterate to a fixed point in sup-in-time ``||.||_p``.

    Non-convergence is reported in the result. With ``max_halvings > 0`` a
    diverging attempt is retried on half the horizon.
    """
    if not u0.solenoidal:
        raise ValueError("u0 must be solenoidal")
    attempt = config
    halvings = 0
    while True:
        states, distances, converged = _iterate(u0, attempt)
        if converged or halvings >= attempt.max_halvings:
            break
        halvings += 1
        logger.warning(
            "Picard iteration did not contract on t_end=%g; halving to %g", attempt.t_end, attempt.t_end / 2
        )
        attempt = attempt.model_copy(update={"t_end": attempt.t_end / 2})

    grid = u0.grid
    samples = [VectorField.from_coefficients(grid, s, solenoidal=True) for s in states]
    return PicardResult(
        iterations=len(distances),
        converged=converged,
        distance=distances[-1] if distances else 0.0,
        ratios=_ratios(distances),
        times=attempt.node_times,
        samples=samples,
        t_end=attempt.t_end,
        halvings=halvings,
        distances=distances,
    )


def duhamel_residual(samples: Sequence[VectorField], u0: VectorField, config: PicardConfig) -> np.ndarray:
    """``||u(t_j) - Phi(u)(t_j)||_2`` at every node, ``Phi`` the discrete Duhamel map."""
    if len(samples) != config.time_nodes + 1:
        raise ValueError(f"expected {config.time_nodes + 1} samples, got {len(samples)}")
    grid = u0.grid
    states = np.stack([s.coefficients for s in samples])
    u0_hat = leray_coefficients(grid, np.array(u0.coefficients))
    mapped = _duhamel_map(grid, u0_hat, states, config)
    return np.array(
        [magnitude_norm(grid, np.sqrt(np.sum(inverse_array(grid, d) ** 2, axis=0)), 2.0) for d in states - mapped]
    )


def oracle_distance(result: PicardResult, snapshots: Sequence[Snapshot]) -> float:
    """Sup over matching times of ``||picard - other||_2 / ||other||_2``."""
    by_time = {round(float(s.t), 12): s.u for s in snapshots}
    worst = 0.0
    matched = 0
    for t, u in zip(result.times, result.samples):
        other = by_time.get(round(float(t), 12))
        if other is None:
            continue
        matched += 1
        scale = magnitude_norm(u.grid, other.magnitude(), 2.0)
        gap = magnitude_norm(u.grid, (u - other).magnitude(), 2.0)
        worst = max(worst, 0.0 if scale == 0.0 else gap / scale)
    if matched == 0:
        raise ValueError("no snapshot time matches a Picard node")
    return worst
