"""Reports for the perturbed system ``u = v + w`` around a reference solution ``v``."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from nsap.monitor.checks import DECAY_RATIO, as_bundle, check_interpolation, integral_with_tail
from nsap.monitor.exponents import ExponentTable
from nsap.monitor.norms import kappa_from_norms
from nsap.monitor.reports import InequalityReport, evaluate, inconclusive
from nsap.monitor.series import SeriesBundle
from nsap.solver.trajectory import CoupledTrajectory, Trajectory
from nsap.utils import format_p

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1
PERTURBATION_IDS = ("3.1", "3.4", "3.6", "3.7", "3.8", "3.9-v", "3.9-w")


@dataclass(frozen=True)
class SmallnessAdvice:
    """Relative size of ``w0`` against ``v0`` in the ``N``, ``p`` and ``2`` norms."""

    epsilon: float
    ratios: dict[str, float]

    @property
    def within(self) -> bool:
        return all(r <= self.epsilon for r in self.ratios.values())

    def to_dict(self) -> dict[str, Any]:
        return {"epsilon": self.epsilon, "ratios": dict(self.ratios), "within": self.within}


def _ratio(w_norm: float, v_norm: float) -> float:
    if w_norm == 0.0:
        return 0.0
    return float("inf") if v_norm == 0.0 else w_norm / v_norm


def advise_smallness(
    v: SeriesBundle, w: SeriesBundle, p: float, epsilon: float = DEFAULT_EPSILON
) -> SmallnessAdvice:
    ratios = {
        "lN": _ratio(w.column("lN")[0], v.column("lN")[0]),
        f"lp_{format_p(p)}": _ratio(w.per_p("lp", p)[0], v.per_p("lp", p)[0]),
        "l2": _ratio(w.column("l2")[0], v.column("l2")[0]),
    }
    return SmallnessAdvice(epsilon, ratios)


def _split(source: CoupledTrajectory | tuple[SeriesBundle | Trajectory, SeriesBundle | Trajectory]):
    v, w = source if not isinstance(source, CoupledTrajectory) else (source.v, source.w)
    return as_bundle(v), as_bundle(w)


def _with_tail(bundle: SeriesBundle, y: np.ndarray, degree: float) -> float:
    return integral_with_tail(bundle.t, y, degree, bundle.decay_rate)


def check_perturbation(
    source: CoupledTrajectory | tuple[SeriesBundle | Trajectory, SeriesBundle | Trajectory],
    p: float,
    *,
    epsilon: float = DEFAULT_EPSILON,
    decay_ratio: float = DECAY_RATIO,
) -> dict[str, InequalityReport]:
    """Bounds on ``w`` in terms of ``w0`` and ``v0``; every constant is reported as ``C_emp``."""
    v, w = _split(source)
    n = v.dim
    if p <= n:
        return {i: inconclusive(i, f"needs p > N={n}", p=p, dim=n) for i in PERTURBATION_IDS}
    table = ExponentTable.build(p, n)
    alpha = float(table.alpha)

    if v.escaped or w.escaped:
        return {i: inconclusive(i, "coupled run escaped", p=p, dim=n) for i in PERTURBATION_IDS}

    advice = advise_smallness(v, w, p, epsilon)
    v_l2, v_lp = float(v.column("l2")[0]), float(v.per_p("lp", p)[0])
    w_l2, w_ln, w_lp = float(w.column("l2")[0]), float(w.column("lN")[0]), float(w.per_p("lp", p)[0])
    kappa_v = kappa_from_norms(v_l2, v_lp, p, n).value if v_lp > 0 else 0.0
    header = {"alpha": str(table.alpha), "kappa_v0": kappa_v, "smallness": advice.to_dict()}
    if not advice.within:
        logger.warning("Perturbation outside the smallness regime: %s", advice.ratios)
        return {
            i: inconclusive(i, "w0 outside the smallness regime", p=p, dim=n, header=header)
            for i in PERTURBATION_IDS
        }

    reports: dict[str, InequalityReport] = {}
    t = w.t
    end = [float(t[-1])]
    reports["3.4"] = evaluate(
        "3.4", w.column("lN"), np.full(t.size, w_ln), t, p=p, dim=n, header=header
    )
    reports["3.9-v"] = check_interpolation(v, p, inequality_id="3.9-v")
    reports["3.9-w"] = check_interpolation(w, p, inequality_id="3.9-w")

    v_lp_series = v.per_p("lp", p)
    w_lp_series = w.per_p("lp", p)
    undecayed = [
        name
        for name, series, start in (("v", v_lp_series, v_lp), ("w", w_lp_series, w_lp))
        if start > 0 and series[-1] > decay_ratio * start
    ]
    if undecayed:
        reason = f"insufficient decay of {', '.join(undecayed)} in the L^p norm"
        for i in ("3.1", "3.6", "3.7", "3.8"):
            reports[i] = inconclusive(i, reason, p=p, dim=n, header=header)
        return reports

    reports["3.1"] = evaluate(
        "3.1", [_with_tail(v, v_lp_series**alpha, alpha)], [v_lp**p], end,
        p=p, dim=n, min_samples=1, header=header,
    )
    energy_excess = float(np.max(w.column("l2") ** 2)) + _with_tail(w, w.column("grad_l2"), 2.0) - w_l2**2
    reports["3.6"] = evaluate(
        "3.6", [energy_excess], [w_ln**2 * v_l2**2], end, p=p, dim=n, min_samples=1,
        header={**header, "initial_term": w_l2**2},
    )
    lp_excess = float(np.max(w_lp_series**p)) + _with_tail(w, w.per_p("D", p), p) - w_lp**p
    reports["3.7"] = evaluate(
        "3.7", [lp_excess], [w_ln**p * v_lp**p], end, p=p, dim=n, min_samples=1,
        header={**header, "initial_term": w_lp**p},
    )
    reports["3.8"] = evaluate(
        "3.8", [_with_tail(w, w_lp_series**alpha, alpha)], [w_lp**p + w_ln**p * v_lp**p], end,
        p=p, dim=n, min_samples=1, header=header,
    )
    return reports


def consistency_gap(coupled: CoupledTrajectory, direct: Trajectory) -> float:
    """``||(v + w) - u||_2 / ||u||_2`` at the final time of a directly computed ``u``."""
    combined = coupled.combined.final
    reference = direct.final
    if abs(combined.t - reference.t) > 1e-12 * max(1.0, abs(reference.t)):
        raise ValueError(f"final times differ: {combined.t!r} vs {reference.t!r}")
    scale = float(np.sqrt(np.sum(reference.u.values**2)))
    diff = float(np.sqrt(np.sum((combined.u.values - reference.u.values) ** 2)))
    return 0.0 if scale == 0.0 else diff / scale
