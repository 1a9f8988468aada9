"""Machine-checkable versions of the a priori estimates.

Every check consumes a :class:`SeriesBundle` (or a trajectory, converted on
the fly) and returns :class:`InequalityReport` objects. Unknown constants are
reported as ``C_emp``; only inequalities with an explicit constant can be
"violated-beyond-tolerance".
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from nsap.errors import ConfigError, UnknownInequalityError
from nsap.monitor.exponents import ExponentTable
from nsap.monitor.norms import IDENTITY_RTOL, dissipation, kappa_from_norms, lp_norm
from nsap.monitor.reports import InequalityReport, evaluate, inconclusive
from nsap.monitor.series import SeriesBundle, cumulative_integral, time_derivative, time_integral
from nsap.solver.trajectory import Trajectory
from nsap.spectral.fields import VectorField
from nsap.utils import format_p

logger = logging.getLogger(__name__)

TORUS_NOTE = "periodic box: embedding constants differ from the whole-space ones (mean-free fields)"
ENERGY_RTOL = 1e-6
FD_RTOL = 1e-3
MONOTONE_SLACK = 1e-8
DECAY_RATIO = 1e-3
MAX_CADENCE = 4.0


def as_bundle(source: SeriesBundle | Trajectory) -> SeriesBundle:
    if isinstance(source, SeriesBundle):
        return source
    frame = source.series()
    p_set = sorted({float(c.split("_", 1)[1]) for c in frame.columns if c.startswith("lp_")})
    return SeriesBundle.from_trajectory(source, p_set)


def _constant(value: float, size: int) -> np.ndarray:
    return np.full(size, float(value))


# ----------------------------------------------------------------------
# Sobolev embedding
# ----------------------------------------------------------------------
def check_sobolev(u: VectorField, p: float) -> InequalityReport:
    """Single-field embedding check; ``C_emp = ||u||_{3p}^p / D_p`` in three dimensions.

    In two dimensions the Ladyzhenskaya-type form
    ``||u||_{2p}^p <= C ||u||_p^(p/2) D_p^(1/2)`` is used.
    """
    dim = u.grid.dim
    d_p = dissipation(u, p)
    if dim == 3:
        lhs = lp_norm(u, 3 * p) ** p
        rhs = d_p
    else:
        lhs = lp_norm(u, 2 * p) ** p
        rhs = lp_norm(u, p) ** (p / 2) * math.sqrt(d_p)
    return evaluate("2.1", [lhs], [rhs], [0.0], p=p, dim=dim, min_samples=1, notes=[TORUS_NOTE])


def check_sobolev_series(source: SeriesBundle | Trajectory, p: float) -> InequalityReport:
    bundle = as_bundle(source)
    if bundle.dim == 3:
        lhs = bundle.per_p("l3p", p) ** p
        rhs = bundle.per_p("D", p)
    else:
        lhs = bundle.per_p("l2p", p) ** p
        rhs = bundle.per_p("lp", p) ** (p / 2) * np.sqrt(bundle.per_p("D", p))
    return evaluate("2.1", lhs, rhs, bundle.t, p=p, dim=bundle.dim, min_samples=1, notes=[TORUS_NOTE])


# ----------------------------------------------------------------------
# Energy inequality
# ----------------------------------------------------------------------
def check_energy(source: SeriesBundle | Trajectory, rtol: float = ENERGY_RTOL) -> InequalityReport:
    """``||u(t)||^2 + 2 nu int_t0^t ||grad u||^2 <= ||u(t0)||^2 (1 + rtol)`` for all sampled ``t0 < t``.

    For each ``t`` only the worst ``t0`` is stored.
    """
    bundle = as_bundle(source)
    t = bundle.t
    energy = bundle.column("l2") ** 2
    dissipated = 2.0 * bundle.viscosity * cumulative_integral(t, bundle.column("grad_l2"), rule="simpson")
    if t.size < 2:
        return inconclusive("1.2", "need at least two samples", dim=bundle.dim)

    # slack(i, j) = g_i - h_j with g_i = E_i (1 + rtol) + F_i, h_j = E_j + F_j
    g = energy * (1.0 + rtol) + dissipated
    worst = np.empty(t.size - 1, dtype=np.int64)
    best_i = 0
    for j in range(1, t.size):
        if g[j - 1] < g[best_i]:
            best_i = j - 1
        worst[j - 1] = best_i
    later = np.arange(1, t.size)
    lhs = energy[later] + dissipated[later] - dissipated[worst]
    rhs = energy[worst]
    return evaluate(
        "1.2",
        lhs,
        rhs,
        t[later],
        fixed_constant=1.0,
        rtol=rtol,
        dim=bundle.dim,
        min_samples=1,
        header={"viscosity": bundle.viscosity, "t0": [float(x) for x in t[worst]]},
    )


# ----------------------------------------------------------------------
# L^p balance
# ----------------------------------------------------------------------
def _cadence_ok(bundle: SeriesBundle) -> bool:
    return bundle.cadence_ratio() <= MAX_CADENCE * (1.0 + 1e-9)


def _lp_derivative(bundle: SeriesBundle, p: float) -> np.ndarray:
    """``(1/p) d/dt ||u||_p^p`` by centered differences."""
    return time_derivative(bundle.t, bundle.per_p("lp", p) ** p / p)


def check_lp_balance(
    source: SeriesBundle | Trajectory,
    p: float,
    *,
    fd_rtol: float = FD_RTOL,
    identity_rtol: float = IDENTITY_RTOL,
) -> dict[str, InequalityReport]:
    """Three reports: "2.4" (time-derivative pairing), "2.6" (integration by parts), "2.2"."""
    bundle = as_bundle(source)
    dim = bundle.dim
    t = bundle.t
    d_p = bundle.per_p("D", p)
    lappair = bundle.per_p("lappair", p)
    cross = bundle.per_p("cross", p)
    reports: dict[str, InequalityReport] = {}

    reports["2.6"] = evaluate(
        "2.6",
        np.abs(lappair - (d_p + cross)),
        np.abs(lappair),
        t,
        fixed_constant=identity_rtol,
        p=p,
        dim=dim,
        min_samples=1,
        header={"identity": "-int lap(u).|u|^(p-2)u = D_p + (p-2) int |u|^(p-4) sum_j (u.d_j u)^2"},
    )

    if not _cadence_ok(bundle):
        reason = f"cadence too coarse: {bundle.cadence_ratio():.3g} steps between samples (max {MAX_CADENCE:g})"
        reports["2.4"] = inconclusive("2.4", reason, p=p, dim=dim)
        reports["2.2"] = inconclusive("2.2", reason, p=p, dim=dim)
        return reports

    derivative = _lp_derivative(bundle, p)
    column = f"dtpair_{format_p(p)}"
    if column in bundle.frame.columns:
        pair = bundle.column(column)
        scale = float(np.max(np.abs(pair))) if pair.size else 0.0
        reports["2.4"] = evaluate(
            "2.4",
            np.abs(derivative - pair),
            _constant(scale, t.size),
            t,
            fixed_constant=fd_rtol,
            p=p,
            dim=dim,
            header={"scale": scale, "finite_difference": "centered, one-sided at ends"},
        )
    else:
        reports["2.4"] = inconclusive("2.4", f"series has no {column} column", p=p, dim=dim)

    a, b = (float(e) for e in ExponentTable.build(p, dim).balance_exponents)
    lp = bundle.per_p("lp", p)
    reports["2.2"] = evaluate(
        "2.2",
        derivative + d_p,
        lp**a * d_p**b,
        t,
        p=p,
        dim=dim,
        header={"lp_exponent": a, "dissipation_exponent": b},
    )
    return reports


def check_ode_bound(source: SeriesBundle | Trajectory, p: float, dim: int | None = None) -> InequalityReport:
    """``(1/p) d/dt ||u||_p^p + D_p / 2 <= C ||u||_p^alpha``."""
    bundle = as_bundle(source)
    n = bundle.dim if dim is None else dim
    if p <= n:
        return inconclusive("2.3", f"needs p > N={n}", p=p, dim=n)
    table = ExponentTable.build(p, n)
    alpha = table.alpha
    header = {"alpha": str(alpha), "alpha_value": float(alpha)}
    if not _cadence_ok(bundle):
        return inconclusive("2.3", "cadence too coarse for the time derivative", p=p, dim=n, header=header)
    lhs = _lp_derivative(bundle, p) + 0.5 * bundle.per_p("D", p)
    rhs = bundle.per_p("lp", p) ** float(alpha)
    return evaluate("2.3", lhs, rhs, bundle.t, p=p, dim=n, header=header)


# ----------------------------------------------------------------------
# Monotonicity
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class MonotoneReport:
    columns: dict[str, bool]
    worst_increase: dict[str, float]
    verdict: str
    slack: float = MONOTONE_SLACK
    notes: list[str] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return self.verdict == "monotone"

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": "monotone",
            "verdict": self.verdict,
            "slack": self.slack,
            "columns": dict(self.columns),
            "worst_increase": dict(self.worst_increase),
            "notes": list(self.notes),
        }


def relative_increases(values: np.ndarray) -> np.ndarray:
    if values.size < 2:
        return np.zeros(0)
    prev = values[:-1]
    scale = np.where(prev > 0, prev, 1.0)
    return (values[1:] - prev) / scale


def check_monotone(
    source: SeriesBundle | Trajectory,
    p_values: list[float] | None = None,
    slack: float = MONOTONE_SLACK,
) -> MonotoneReport:
    """Non-increase of ``||u||_2``, ``||u||_N`` and ``||u||_p`` (each sample within ``slack``)."""
    bundle = as_bundle(source)
    if bundle.escaped:
        return MonotoneReport({}, {}, "inconclusive", slack, ["trajectory escaped"])
    names = ["l2", "lN"] + [f"lp_{format_p(p)}" for p in (p_values or bundle.p_set)]
    columns: dict[str, bool] = {}
    worst: dict[str, float] = {}
    for name in names:
        increases = relative_increases(bundle.column(name))
        worst[name] = float(np.max(increases)) if increases.size else 0.0
        columns[name] = worst[name] <= slack
    verdict = "monotone" if all(columns.values()) else "non-monotone"
    return MonotoneReport(columns, worst, verdict, slack)


# ----------------------------------------------------------------------
# Integral bounds
# ----------------------------------------------------------------------
def integral_with_tail(t: np.ndarray, y: np.ndarray, degree: float, rate: float) -> float:
    """Trapezoid integral plus the tail of a final value decaying like ``exp(-degree * rate * t)``."""
    tail = y[-1] / (degree * rate) if y.size and degree > 0 else 0.0
    return time_integral(t, y) + tail


def check_integral_bounds(
    source: SeriesBundle | Trajectory,
    p: float,
    dim: int | None = None,
    decay_ratio: float = DECAY_RATIO,
) -> dict[str, InequalityReport]:
    """Time-integrated and uniform bounds for a decaying solution.

    ``C_emp`` values compare each quantity to its right-hand side built from
    ``u0``: ``||u0||_p^p``, ``||u0||_N^(2p/(p-N)) ||u0||_p^p`` or powers of ``kappa_p(u0)``.
    """
    bundle = as_bundle(source)
    n = bundle.dim if dim is None else dim
    ids = ["1.3", "1.4", "lemma2.2-3", "2.9", "2.10", "2.11", "2.12", "2.12-holder", "2.13", "kappa-power"]
    if p <= n:
        return {i: inconclusive(i, f"needs p > N={n}", p=p, dim=n) for i in ids}
    table = ExponentTable.build(p, n)
    alpha = float(table.alpha)
    header = {"alpha": str(table.alpha), "exponents": table.to_dict()}

    if bundle.escaped:
        return {i: inconclusive(i, "trajectory escaped", p=p, dim=n, header=header) for i in ids}

    t = bundle.t
    lp = bundle.per_p("lp", p)
    lp0, l20, ln0 = float(lp[0]), float(bundle.column("l2")[0]), float(bundle.column("lN")[0])
    if lp0 > 0 and lp[-1] > decay_ratio * lp0:
        reason = f"insufficient decay: ||u(t_end)||_p / ||u0||_p = {lp[-1] / lp0:.3e} > {decay_ratio:g}"
        logger.warning("Integral bounds skipped: %s", reason)
        return {i: inconclusive(i, reason, p=p, dim=n, header=header) for i in ids}

    rate = bundle.decay_rate
    end = [float(t[-1])]
    scalar = {"p": p, "dim": n, "min_samples": 1, "header": header}
    reports: dict[str, InequalityReport] = {}

    reports["1.3"] = evaluate("1.3", lp, _constant(lp0, lp.size), t, p=p, dim=n, header=header)
    reports["2.9"] = evaluate("2.9", [float(np.max(lp)) ** p], [lp0**p], end, **scalar)

    i_alpha = integral_with_tail(t, lp**alpha, alpha, rate)
    header_alpha = {**header, "integral": i_alpha}
    reports["1.4"] = evaluate("1.4", [i_alpha], [lp0**p], end, p=p, dim=n, min_samples=1, header=header_alpha)
    power = float(table.initial_bound_exponent)
    reports["lemma2.2-3"] = evaluate(
        "lemma2.2-3", [i_alpha], [ln0**power * lp0**p], end, p=p, dim=n, min_samples=1,
        header={**header_alpha, "lN_exponent": power},
    )

    i_dissipation = integral_with_tail(t, bundle.per_p("D", p), p, rate)
    reports["2.10"] = evaluate("2.10", [i_dissipation], [lp0**p], end, **scalar)

    k_value = kappa_from_norms(l20, lp0, p, n) if lp0 > 0 else None
    kappa0 = 0.0 if k_value is None else k_value.value
    reports["2.13"] = evaluate(
        "2.13", [float(np.max(bundle.column("lN")))], [kappa0], end, p=p, dim=n, min_samples=1,
        header={**header, "kappa": kappa0},
    )
    residual = 0.0 if k_value is None else k_value.power_identity_residual()
    reports["kappa-power"] = evaluate(
        "kappa-power", [residual], [1.0], end, fixed_constant=1e-10, p=p, dim=n, min_samples=1,
        header={**header, "kappa": kappa0},
    )

    if n == 2:
        note = "no finite Sobolev exponent in two dimensions"
        for i in ("2.11", "2.12", "2.12-holder"):
            reports[i] = inconclusive(i, note, p=p, dim=n, header=header)
        return reports

    sob = bundle.per_p("l3p", p) ** p
    i_sobolev = integral_with_tail(t, sob, p, rate)
    reports["2.11"] = evaluate("2.11", [i_sobolev], [lp0**p], end, **scalar)

    i_nine = integral_with_tail(t, bundle.column("l9") ** 3, 3.0, rate)
    reports["2.12"] = evaluate(
        "2.12", [i_nine], [kappa0**3], end, p=p, dim=n, min_samples=1, header={**header, "kappa": kappa0}
    )

    w6, w3p = (float(e) for e in table.holder_split)
    truncated_nine = time_integral(t, bundle.column("l9") ** 3)
    chain = time_integral(t, bundle.column("l6") ** 2) ** w6 * time_integral(t, sob) ** w3p
    reports["2.12-holder"] = evaluate(
        "2.12-holder", [truncated_nine], [chain], end, fixed_constant=1.0, rtol=IDENTITY_RTOL, p=p, dim=n,
        min_samples=1, header={**header, "weights": [w6, w3p], "window": "sampled interval"},
    )
    return reports


# ----------------------------------------------------------------------
# Pointwise interpolation chains
# ----------------------------------------------------------------------
def check_interpolation(
    source: SeriesBundle | Trajectory, p: float, *, inequality_id: str = "interpolation"
) -> InequalityReport:
    """``||u||_p <= ||u||_N^theta ||u||_{Np/(N-2)}^(1-theta)`` at every sample (``||u||_inf`` for N=2)."""
    bundle = as_bundle(source)
    theta = float(ExponentTable.build(p, bundle.dim).interpolation_theta)
    upper = bundle.per_p("l3p", p) if bundle.dim == 3 else bundle.column("linf")
    rhs = bundle.column("lN") ** theta * upper ** (1.0 - theta)
    return evaluate(
        inequality_id, bundle.per_p("lp", p), rhs, bundle.t, fixed_constant=1.0, rtol=IDENTITY_RTOL,
        p=p, dim=bundle.dim, min_samples=1, header={"theta": theta},
    )


def check_kappa_dominance(source: SeriesBundle | Trajectory, p: float) -> InequalityReport:
    """``||u||_N <= kappa_p(u)`` at every sample."""
    bundle = as_bundle(source)
    table = ExponentTable.build(p, bundle.dim)
    a, b = (float(e) for e in table.kappa_exponents)
    kappas = bundle.per_p("lp", p) ** a * bundle.column("l2") ** b
    return evaluate(
        "kappa-holder", bundle.column("lN"), kappas, bundle.t, fixed_constant=1.0, rtol=IDENTITY_RTOL,
        p=p, dim=bundle.dim, min_samples=1,
    )


# ----------------------------------------------------------------------
# Dispatch by id
# ----------------------------------------------------------------------
BALANCE_IDS = ("2.2", "2.4", "2.6")
INTEGRAL_IDS = ("1.3", "1.4", "lemma2.2-3", "2.9", "2.10", "2.11", "2.12", "2.12-holder", "2.13", "kappa-power")
GROUPS = {"balance": BALANCE_IDS, "integral": INTEGRAL_IDS}
P_INDEPENDENT = ("1.2",)
KNOWN_IDS = ("1.2", "2.1", *BALANCE_IDS, "2.3", *INTEGRAL_IDS, "interpolation", "kappa-holder")


def expand_ids(ids: list[str] | tuple[str, ...]) -> list[str]:
    """Resolve group names; unknown ids raise :class:`UnknownInequalityError`."""
    out: list[str] = []
    for check_id in ids:
        members = GROUPS.get(check_id, (check_id,))
        for member in members:
            if member not in KNOWN_IDS:
                raise UnknownInequalityError(
                    f"unknown inequality id {member!r}; known: {', '.join(KNOWN_IDS)} or {', '.join(GROUPS)}"
                )
            if member not in out:
                out.append(member)
    return out


def run_check(bundle: SeriesBundle, check_id: str, p: float | None = None) -> InequalityReport:
    """Regenerate one report from a stored series."""
    if check_id not in KNOWN_IDS:
        expand_ids([check_id])
    if check_id == "1.2":
        return check_energy(bundle)
    if p is None:
        raise ConfigError(f"inequality {check_id!r} needs an exponent p")
    if check_id == "2.1":
        return check_sobolev_series(bundle, p)
    if check_id in BALANCE_IDS:
        return check_lp_balance(bundle, p)[check_id]
    if check_id == "2.3":
        return check_ode_bound(bundle, p)
    if check_id in INTEGRAL_IDS:
        return check_integral_bounds(bundle, p)[check_id]
    if check_id == "interpolation":
        if p <= bundle.dim:
            return inconclusive(check_id, f"needs p > N={bundle.dim}", p=p, dim=bundle.dim)
        return check_interpolation(bundle, p)
    if p <= bundle.dim:
        return inconclusive(check_id, f"needs p > N={bundle.dim}", p=p, dim=bundle.dim)
    return check_kappa_dominance(bundle, p)


def run_checks(
    bundle: SeriesBundle, ids: list[str] | tuple[str, ...], p_set: tuple[float, ...]
) -> list[InequalityReport]:
    """Every requested report; balance and integral groups are computed once per ``p``."""
    wanted = expand_ids(ids)
    reports: list[InequalityReport] = []
    if "1.2" in wanted:
        reports.append(check_energy(bundle))
    for p in p_set:
        if "2.1" in wanted:
            reports.append(check_sobolev_series(bundle, p))
        if any(i in wanted for i in BALANCE_IDS):
            balance = check_lp_balance(bundle, p)
            reports.extend(balance[i] for i in BALANCE_IDS if i in wanted)
        if "2.3" in wanted:
            reports.append(check_ode_bound(bundle, p))
        if any(i in wanted for i in INTEGRAL_IDS):
            integral = check_integral_bounds(bundle, p)
            reports.extend(integral[i] for i in INTEGRAL_IDS if i in wanted)
        for extra in ("interpolation", "kappa-holder"):
            if extra in wanted:
                reports.append(run_check(bundle, extra, p))
    logger.info("Computed %d reports for p in %s", len(reports), list(p_set))
    return reports
