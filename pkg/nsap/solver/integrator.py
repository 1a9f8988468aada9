"""Exponential Runge-Kutta time stepping for the projected NS system.

The stiff diffusion ``-nu |k|^2`` is integrated exactly; the projected
nonlinearity is handled by ETDRK2 (Cox-Matthews) or ETDRK4
(Kassam-Trefethen). phi-function coefficients are evaluated with the
contour-integral mean over roots of unity, once per distinct ``|k|^2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Protocol

import numpy as np

from nsap.errors import NumericalFailure
from nsap.solver.config import SolverConfig
from nsap.solver.nonlinear import bilinear_coefficients, nonlinear_coefficients
from nsap.solver.trajectory import CoupledTrajectory, Snapshot, Trajectory
from nsap.spectral.fields import VectorField, require_same_grid
from nsap.spectral.grid import Grid
from nsap.spectral.operators import divergence_residual, leray_coefficients
from nsap.spectral.transforms import inverse_array

logger = logging.getLogger(__name__)

RhsFn = Callable[[np.ndarray], np.ndarray]

NUM_ROOTS_OF_UNITY = 32
_TIME_EPS = 1e-12


class Recorder(Protocol):
    def __call__(self, u: VectorField, t: float, dudt: VectorField | None = None) -> object: ...


@dataclass(frozen=True)
class ExponentialCoefficients:
    """Per-mode multipliers for one (grid, viscosity, dt, scheme)."""

    scheme: str
    dt: float
    exp_full: np.ndarray
    exp_half: np.ndarray
    f0: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray


def contour_mean(z: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    roots = np.exp(1j * np.pi * (np.arange(NUM_ROOTS_OF_UNITY) + 0.5) / NUM_ROOTS_OF_UNITY)
    lr = z[:, None] + roots[None, :]
    return fn(lr).mean(axis=1).real


@lru_cache(maxsize=32)
def exponential_coefficients(grid: Grid, viscosity: float, dt: float, scheme: str) -> ExponentialCoefficients:
    unique_k2, inverse = np.unique(grid.k_squared, return_inverse=True)
    z = -viscosity * unique_k2 * dt

    def expand(values: np.ndarray) -> np.ndarray:
        out = values[inverse].reshape(grid.spectral_shape)
        out.flags.writeable = False
        return out

    exp_full = expand(np.exp(z))
    exp_half = expand(np.exp(0.5 * z))
    if scheme == "etdrk2":
        phi1 = contour_mean(z, lambda lr: (np.exp(lr) - 1.0) / lr)
        phi2 = contour_mean(z, lambda lr: (np.exp(lr) - 1.0 - lr) / lr**2)
        zeros = expand(np.zeros_like(z))
        return ExponentialCoefficients(
            scheme, dt, exp_full, exp_half, expand(dt * phi1), expand(dt * phi2), zeros, zeros
        )
    if scheme == "etdrk4":
        f0 = contour_mean(z, lambda lr: (np.exp(lr / 2.0) - 1.0) / lr)
        f1 = contour_mean(z, lambda lr: (-4.0 - lr + np.exp(lr) * (4.0 - 3.0 * lr + lr**2)) / lr**3)
        f2 = contour_mean(z, lambda lr: (2.0 + lr + np.exp(lr) * (lr - 2.0)) / lr**3)
        f3 = contour_mean(z, lambda lr: (-4.0 - 3.0 * lr - lr**2 + np.exp(lr) * (4.0 - lr)) / lr**3)
        return ExponentialCoefficients(
            scheme, dt, exp_full, exp_half, expand(dt * f0), expand(dt * f1), expand(dt * f2), expand(dt * f3)
        )
    raise ValueError(f"unknown scheme {scheme!r}")


def advance(state: np.ndarray, rhs: RhsFn, coeffs: ExponentialCoefficients) -> np.ndarray:
    """One exponential RK step of ``d/dt state = L state + rhs(state)``."""
    if coeffs.scheme == "etdrk2":
        n0 = rhs(state)
        a = coeffs.exp_full * state + coeffs.f0 * n0
        n1 = rhs(a)
        return a + coeffs.f1 * (n1 - n0)

    n0 = rhs(state)
    s1 = coeffs.exp_half * state + coeffs.f0 * n0
    n1 = rhs(s1)
    s2 = coeffs.exp_half * state + coeffs.f0 * n1
    n2 = rhs(s2)
    s3 = coeffs.exp_half * s1 + coeffs.f0 * (2.0 * n2 - n0)
    n3 = rhs(s3)
    return coeffs.exp_full * state + coeffs.f1 * n0 + 2.0 * coeffs.f2 * (n1 + n2) + coeffs.f3 * n3


# ----------------------------------------------------------------------
# Right-hand sides
# ----------------------------------------------------------------------
def navier_stokes_rhs(grid: Grid, config: SolverConfig) -> RhsFn:
    def rhs(u_hat: np.ndarray) -> np.ndarray:
        if not config.nonlinear:
            return np.zeros_like(u_hat)
        return -nonlinear_coefficients(grid, u_hat, form=config.nonlinear_form, dealias=config.dealias)

    return rhs


def coupled_rhs(grid: Grid, config: SolverConfig) -> RhsFn:
    """State is stacked ``[v_hat, w_hat]``."""

    def rhs(state: np.ndarray) -> np.ndarray:
        if not config.nonlinear:
            return np.zeros_like(state)
        v_hat, w_hat = state[0], state[1]
        v = inverse_array(grid, v_hat)
        w = inverse_array(grid, w_hat)
        kwargs = {"form": config.nonlinear_form, "dealias": config.dealias}
        b_vv = bilinear_coefficients(grid, v, v, v_hat, **kwargs)
        b_cross = (
            bilinear_coefficients(grid, v, w, v_hat, **kwargs)
            + bilinear_coefficients(grid, w, v, w_hat, **kwargs)
            + bilinear_coefficients(grid, w, w, w_hat, **kwargs)
        )
        return -np.stack([leray_coefficients(grid, b_vv), leray_coefficients(grid, b_cross)])

    return rhs


def _time_derivative(grid: Grid, config: SolverConfig, state: np.ndarray, rhs: RhsFn) -> np.ndarray:
    return -config.viscosity * grid.k_squared * state + rhs(state)


def _project(grid: Grid, state: np.ndarray) -> np.ndarray:
    if state.ndim == grid.dim + 1:
        return leray_coefficients(grid, state)
    return np.stack([leray_coefficients(grid, s) for s in state])


# ----------------------------------------------------------------------
# Advisors and guards
# ----------------------------------------------------------------------
def advise_dt(u: VectorField, config: SolverConfig) -> float:
    """Advective CFL bound ``cfl * dx / max|u|`` (inf for a fluid at rest)."""
    peak = float(np.max(u.magnitude()))
    if peak == 0.0:
        return math.inf
    return config.cfl * u.grid.spacing / peak


def fast_lp_norm(grid: Grid, values: np.ndarray, p: float) -> float:
    magnitude = np.sqrt(np.sum(values**2, axis=0))
    peak = float(np.max(magnitude))
    if peak == 0.0 or not math.isfinite(peak):
        return peak
    return peak * float(np.sum((magnitude / peak) ** p) * grid.cell_volume) ** (1.0 / p)


def _require_solenoidal(u: VectorField, name: str) -> None:
    if not u.solenoidal and divergence_residual(u) > 1e-10:
        raise ValueError(f"{name} must be solenoidal (divergence residual {divergence_residual(u):.3e})")


# ----------------------------------------------------------------------
# Public operations
# ----------------------------------------------------------------------
def step(snapshot: Snapshot, config: SolverConfig, dt: float | None = None) -> Snapshot:
    u = snapshot.u
    grid = u.grid
    h = config.dt if dt is None else dt
    if h > advise_dt(u, config):
        logger.warning("dt=%g exceeds CFL advisor bound %g at t=%g", h, advise_dt(u, config), snapshot.t)
    coeffs = exponential_coefficients(grid, config.viscosity, h, config.scheme)
    state = _project(grid, advance(u.coefficients, navier_stokes_rhs(grid, config), coeffs))
    if not np.all(np.isfinite(state)):
        raise NumericalFailure(f"non-finite state after step at t={snapshot.t + h:g}")
    return Snapshot(t=snapshot.t + h, u=VectorField.from_coefficients(grid, state, solenoidal=True))


class _Stepper:
    """Drives one state through event-aligned steps."""

    def __init__(self, grid: Grid, config: SolverConfig, rhs: RhsFn, t0: float) -> None:
        self.grid = grid
        self.config = config
        self.rhs = rhs
        self.t = t0
        self.steps = 0
        events = {config.t_end}
        count = int(math.floor((config.t_end - t0) / config.snapshot_interval + _TIME_EPS))
        events.update(t0 + j * config.snapshot_interval for j in range(1, count + 1))
        events.update(t for t in (config.snapshot_times or []) if t > t0)
        self.snapshot_events = sorted(t for t in events if t > t0 + _TIME_EPS and t <= config.t_end + _TIME_EPS)

    @property
    def done(self) -> bool:
        return self.t >= self.config.t_end - _TIME_EPS * max(1.0, abs(self.config.t_end))

    def advance(self, state: np.ndarray) -> tuple[np.ndarray, bool]:
        """Return the new state and whether ``self.t`` landed on a snapshot event."""
        target = next(t for t in self.snapshot_events if t > self.t + _TIME_EPS)
        h = min(self.config.dt, target - self.t)
        landed = target - (self.t + h) <= _TIME_EPS * max(1.0, abs(target))
        coeffs = exponential_coefficients(self.grid, self.config.viscosity, h, self.config.scheme)
        state = _project(self.grid, advance(state, self.rhs, coeffs))
        self.t = target if landed else self.t + h
        self.steps += 1
        return state, landed


def run(
    u0: VectorField,
    config: SolverConfig,
    *,
    recorder: Recorder | None = None,
    scenario_id: str = "scenario",
    t0: float = 0.0,
    keep_snapshots: bool = True,
    record_stride: int = 1,
    on_snapshot: Callable[[Snapshot], None] | None = None,
) -> Trajectory:
    """Integrate ``u0`` to ``config.t_end``.

    Records are produced at ``t0``, every ``record_stride`` steps and at the
    final time. The run stops early with status ``"escaped"`` once
    ``||u||_guard_p`` exceeds ``blowup_factor * ||u0||_guard_p``.
    """
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride!r}")
    _require_solenoidal(u0, "u0")
    grid = u0.grid
    rhs = navier_stokes_rhs(grid, config)
    state = _project(grid, np.array(u0.coefficients))
    ceiling = config.blowup_factor * fast_lp_norm(grid, u0.values, config.guard_p)

    trajectory = Trajectory(config=config, scenario_id=scenario_id, t0=t0)
    first = Snapshot(t=t0, u=VectorField.from_coefficients(grid, state, solenoidal=True))
    trajectory.add_snapshot(first, keep=keep_snapshots)
    if on_snapshot is not None:
        on_snapshot(first)

    def emit(u: VectorField, t: float, current: np.ndarray) -> None:
        if recorder is None:
            return
        dudt = VectorField.from_coefficients(grid, _time_derivative(grid, config, current, rhs), solenoidal=True)
        trajectory.records.append(recorder(u, t, dudt))

    emit(first.u, t0, state)
    bound = advise_dt(first.u, config)
    if bound < config.dt:
        logger.warning("dt=%g exceeds CFL advisor bound %g for the initial field", config.dt, bound)

    stepper = _Stepper(grid, config, rhs, t0)
    cfl_warned = False
    last_recorded_step = 0
    while not stepper.done:
        state, landed = stepper.advance(state)
        values = inverse_array(grid, state)
        if not np.all(np.isfinite(values)):
            raise NumericalFailure(
                f"non-finite velocity at t={stepper.t:g} (step {stepper.steps}, scenario {scenario_id})"
            )
        norm = fast_lp_norm(grid, values, config.guard_p)
        if ceiling > 0 and norm > ceiling:
            logger.warning("Blow-up guard: ||u||_%g=%g exceeds %g at t=%g", config.guard_p, norm, ceiling, stepper.t)
            u = VectorField.from_coefficients(grid, state, solenoidal=True)
            trajectory.mark_escaped(stepper.t)
            emit(u, stepper.t, state)
            snap = Snapshot(t=stepper.t, u=u)
            trajectory.add_snapshot(snap, keep=keep_snapshots)
            if on_snapshot is not None:
                on_snapshot(snap)
            return trajectory

        record_now = stepper.steps % record_stride == 0 or stepper.done
        if record_now or landed:
            u = VectorField.from_coefficients(grid, state, solenoidal=True)
            if not cfl_warned and advise_dt(u, config) < config.dt:
                logger.warning("dt=%g exceeds CFL advisor bound %g at t=%g", config.dt, advise_dt(u, config), stepper.t)
                cfl_warned = True
            if record_now and stepper.steps != last_recorded_step:
                emit(u, stepper.t, state)
                last_recorded_step = stepper.steps
            if landed:
                snap = Snapshot(t=stepper.t, u=u)
                trajectory.add_snapshot(snap, keep=keep_snapshots)
                if on_snapshot is not None:
                    on_snapshot(snap)

    logger.info("Run %s complete: %d steps to t=%g", scenario_id, stepper.steps, stepper.t)
    return trajectory


def run_coupled(
    v0: VectorField,
    w0: VectorField,
    config: SolverConfig,
    *,
    recorder: Recorder | None = None,
    scenario_id: str = "coupled",
    keep_snapshots: bool = True,
    record_stride: int = 1,
) -> CoupledTrajectory:
    """Evolve ``v`` under NS and ``w`` under the perturbed system driven by ``v``.

    The combined trajectory holds ``u = v + w`` with its own records.
    """
    grid = require_same_grid(v0.grid, w0.grid)
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride!r}")
    _require_solenoidal(v0, "v0")
    _require_solenoidal(w0, "w0")
    rhs = coupled_rhs(grid, config)
    state = _project(grid, np.stack([v0.coefficients, w0.coefficients]))
    ceiling = config.blowup_factor * max(
        fast_lp_norm(grid, v0.values, config.guard_p),
        fast_lp_norm(grid, v0.values + w0.values, config.guard_p),
    )

    result = CoupledTrajectory(
        v=Trajectory(config=config, scenario_id=f"{scenario_id}/v"),
        w=Trajectory(config=config, scenario_id=f"{scenario_id}/w"),
        combined=Trajectory(config=config, scenario_id=f"{scenario_id}/u"),
    )

    def capture(t: float, current: np.ndarray, *, snapshot: bool, record: bool) -> None:
        fields = [VectorField.from_coefficients(grid, current[i], solenoidal=True) for i in (0, 1)]
        u = fields[0] + fields[1]
        parts = (result.v, result.w, result.combined)
        if snapshot:
            for traj, field in zip(parts, (*fields, u)):
                traj.add_snapshot(Snapshot(t=t, u=field), keep=keep_snapshots)
        if record and recorder is not None:
            derivative = _time_derivative(grid, config, current, rhs)
            dv = VectorField.from_coefficients(grid, derivative[0], solenoidal=True)
            dw = VectorField.from_coefficients(grid, derivative[1], solenoidal=True)
            for traj, field, dudt in zip(parts, (*fields, u), (dv, dw, dv + dw)):
                traj.records.append(recorder(field, t, dudt))

    capture(0.0, state, snapshot=True, record=True)
    stepper = _Stepper(grid, config, rhs, 0.0)
    while not stepper.done:
        state, landed = stepper.advance(state)
        values = inverse_array(grid, state)
        if not np.all(np.isfinite(values)):
            raise NumericalFailure(f"non-finite coupled state at t={stepper.t:g} (scenario {scenario_id})")
        norm = max(
            fast_lp_norm(grid, values[0], config.guard_p),
            fast_lp_norm(grid, values[0] + values[1], config.guard_p),
        )
        if ceiling > 0 and norm > ceiling:
            logger.warning("Blow-up guard on coupled run %s at t=%g", scenario_id, stepper.t)
            for traj in (result.v, result.w, result.combined):
                traj.mark_escaped(stepper.t)
            capture(stepper.t, state, snapshot=True, record=True)
            return result
        record_now = stepper.steps % record_stride == 0 or stepper.done
        if record_now or landed:
            capture(stepper.t, state, snapshot=landed, record=record_now)

    return result
