"""Descriptive perturbation probes around a reference initial datum.

Nothing here issues a verdict on membership of a set of initial data; the
probes report how the integral ``int ||u||_p^alpha dt`` moves when the datum
is perturbed, and where small-data monotonicity stops.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import pandas as pd

from nsap.monitor.checks import DECAY_RATIO, check_monotone, integral_with_tail
from nsap.monitor.exponents import ExponentTable
from nsap.monitor.norms import lp_norm, magnitude_norm
from nsap.monitor.perturbation import DEFAULT_EPSILON
from nsap.monitor.series import SeriesBundle
from nsap.solver.config import SolverConfig
from nsap.solver.integrator import run, run_coupled
from nsap.solver.trajectory import Trajectory
from nsap.spectral.fields import VectorField
from nsap.utils import format_p

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormRecord:
    """Lightweight record: only the norms a probe needs."""

    t: float
    norms: dict[str, float]

    def as_row(self) -> dict[str, float]:
        return {"t": self.t, **self.norms}


def norm_recorder(p_values: list[float]):
    def recorder(u: VectorField, t: float, dudt: VectorField | None = None) -> NormRecord:
        mag = u.magnitude()
        norms = {"l2": magnitude_norm(u.grid, mag, 2.0), "lN": magnitude_norm(u.grid, mag, float(u.grid.dim))}
        for p in p_values:
            norms[f"lp_{format_p(p)}"] = magnitude_norm(u.grid, mag, p)
        return NormRecord(t=float(t), norms=norms)

    return recorder


def alpha_integral(trajectory: Trajectory, p: float) -> tuple[float, bool]:
    """``int ||u||_p^alpha dt`` with the Stokes tail, and whether the run decayed enough."""
    bundle = SeriesBundle.from_trajectory(trajectory, [p])
    alpha = float(ExponentTable.build(p, bundle.dim).alpha)
    lp = bundle.per_p("lp", p)
    decayed = lp[0] == 0 or lp[-1] <= DECAY_RATIO * lp[0]
    return integral_with_tail(bundle.t, lp**alpha, alpha, bundle.decay_rate), bool(decayed)


def _within(w0: VectorField, v0: VectorField, p: float, epsilon: float) -> bool:
    for q in (float(v0.grid.dim), p, 2.0):
        w_norm, v_norm = lp_norm(w0, q), lp_norm(v0, q)
        if w_norm > epsilon * v_norm:
            return False
    return True


@dataclass(frozen=True)
class ProbeRow:
    level: int
    scale: float
    integral: float | None
    delta: float | None
    status: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "scale": self.scale,
            "integral": self.integral,
            "delta": self.delta,
            "status": self.status,
        }


@dataclass(frozen=True)
class ProbeReport:
    kind: str
    p: float
    base_integral: float
    base_decayed: bool
    rows: list[ProbeRow] = field(default_factory=list)

    @property
    def converging(self) -> bool:
        """Deltas of the in-regime rows shrink monotonically with the level."""
        deltas = [r.delta for r in self.rows if r.status == "ok" and r.delta is not None]
        return all(b <= a for a, b in zip(deltas, deltas[1:]))

    def richardson_ratios(self) -> list[float]:
        """Successive delta ratios; about 2 when the integral depends linearly on the perturbation."""
        deltas = [r.delta for r in self.rows if r.status == "ok" and r.delta is not None]
        return [a / b if b > 0 else math.inf for a, b in zip(deltas, deltas[1:])]

    def table(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.rows])

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "p": self.p,
            "base_integral": self.base_integral,
            "base_decayed": self.base_decayed,
            "converging": self.converging,
            "richardson_ratios": self.richardson_ratios(),
            "rows": [r.to_dict() for r in self.rows],
        }


def stability_probe(
    v0: VectorField,
    w0: VectorField,
    config: SolverConfig,
    p: float,
    *,
    levels: int = 4,
    epsilon: float = DEFAULT_EPSILON,
) -> ProbeReport:
    """Perturb ``v0`` by ``2^-k w0`` (k = 0..levels-1) through the coupled system.

    Rows whose perturbation fails the smallness advisor are marked
    "outside regime" and carry no integral.
    """
    recorder = norm_recorder([p])
    base = run(v0, config, recorder=recorder, keep_snapshots=False, scenario_id="probe/base")
    base_integral, base_decayed = alpha_integral(base, p)
    if not base_decayed:
        logger.warning("Stability probe: the base run has not decayed; integrals are truncated")

    rows: list[ProbeRow] = []
    for level in range(levels):
        scale = 2.0**-level
        w_level = w0.scaled(scale)
        if not _within(w_level, v0, p, epsilon):
            rows.append(ProbeRow(level, scale, None, None, "outside regime"))
            continue
        coupled = run_coupled(
            v0, w_level, config, recorder=recorder, keep_snapshots=False, scenario_id=f"probe/{level}"
        )
        if coupled.escaped:
            rows.append(ProbeRow(level, scale, None, None, "escaped"))
            continue
        value, _ = alpha_integral(coupled.combined, p)
        rows.append(ProbeRow(level, scale, value, abs(value - base_integral), "ok"))
        logger.info("Stability probe level %d: integral %g (base %g)", level, value, base_integral)
    return ProbeReport("open", float(p), base_integral, base_decayed, rows)


def closedness_probe(
    u0: VectorField,
    w0: VectorField,
    config: SolverConfig,
    p: float,
    *,
    levels: int = 4,
) -> ProbeReport:
    """Direct runs from ``u0 + 2^-k w0`` compared with the run from the limit ``u0``."""
    recorder = norm_recorder([p])
    limit = run(u0, config, recorder=recorder, keep_snapshots=False, scenario_id="closed/limit")
    limit_integral, limit_decayed = alpha_integral(limit, p)

    rows: list[ProbeRow] = []
    for level in range(levels):
        scale = 2.0**-level
        member = run(u0 + w0.scaled(scale), config, recorder=recorder, keep_snapshots=False,
                     scenario_id=f"closed/{level}")
        if member.escaped:
            rows.append(ProbeRow(level, scale, None, None, "escaped"))
            continue
        value, _ = alpha_integral(member, p)
        rows.append(ProbeRow(level, scale, value, abs(value - limit_integral), "ok"))
    return ProbeReport("closed", float(p), limit_integral, limit_decayed, rows)


# ----------------------------------------------------------------------
# Small-data threshold
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ThresholdBracket:
    """``lower`` gives a monotone run, ``upper`` a non-monotone one (``None`` if never found)."""

    lower: float | None
    upper: float | None
    lower_critical_norm: float | None
    trials: list[tuple[float, bool]]

    @property
    def ratio(self) -> float | None:
        if self.lower is None or self.upper is None or self.lower == 0:
            return None
        return self.upper / self.lower

    def to_dict(self) -> dict[str, Any]:
        return {
            "lower_amplitude": self.lower,
            "upper_amplitude": self.upper,
            "epsilon_hat": self.lower_critical_norm,
            "ratio": self.ratio,
            "trials": [{"amplitude": a, "monotone": m} for a, m in self.trials],
        }


def find_smallness_threshold(
    make_field: Callable[[float], VectorField],
    config: SolverConfig,
    p_values: list[float],
    *,
    start: float = 1.0,
    factor: float = 2.0,
    max_trials: int = 12,
) -> ThresholdBracket:
    """Double or halve the amplitude until monotone and non-monotone runs are ``factor`` apart.

    ``epsilon_hat`` is ``||u0||_N`` at the largest monotone amplitude found.
    """
    if not start > 0:
        raise ValueError(f"start amplitude must be > 0, got {start!r}")
    if not factor > 1:
        raise ValueError(f"factor must be > 1, got {factor!r}")
    recorder = norm_recorder(p_values)
    trials: list[tuple[float, bool]] = []

    def monotone_at(amplitude: float) -> bool:
        trajectory = run(make_field(amplitude), config, recorder=recorder, keep_snapshots=False,
                         scenario_id=f"threshold/{amplitude:g}")
        if trajectory.escaped:
            result = False
        else:
            result = check_monotone(SeriesBundle.from_trajectory(trajectory, p_values), p_values).monotone
        trials.append((amplitude, result))
        logger.info("Threshold trial amplitude=%g monotone=%s", amplitude, result)
        return result

    amplitude = start
    going_up = monotone_at(amplitude)
    while len(trials) < max_trials and len({m for _, m in trials}) < 2:
        amplitude = amplitude * factor if going_up else amplitude / factor
        monotone_at(amplitude)

    passing = [a for a, m in trials if m]
    failing = [a for a, m in trials if not m]
    lower = max(passing) if passing else None
    upper = min(failing) if failing else None
    if lower is None or upper is None:
        logger.warning("No bracket after %d trials: lower=%s upper=%s", len(trials), lower, upper)
    critical = None
    if lower is not None:
        field_at_lower = make_field(lower)
        critical = lp_norm(field_at_lower, float(field_at_lower.grid.dim))
    return ThresholdBracket(lower, upper, critical, trials)
