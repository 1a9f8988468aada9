"""Norms, weighted dissipation, kappa values and the per-time diagnostic record."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from nsap.monitor.exponents import ExponentTable
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import Grid
from nsap.spectral.operators import gradient, laplacian
from nsap.spectral.transforms import refine_values, spectral_l2_squared
from nsap.utils import format_p

COMPENSATED_FROM_Q = 6.0
TAIL_BAND = 0.05
IDENTITY_RTOL = 1e-8
# odd-p refinement stops once the integration-by-parts gap is below this fraction of IDENTITY_RTOL
REFINE_MARGIN = 0.1

logger = logging.getLogger(__name__)


class MonitorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    p_set: list[float] = Field(default_factory=lambda: [4.0, 6.0, 9.0])
    q_set: list[float] = Field(default_factory=list)
    cadence: int = Field(default=1, ge=1)
    # grid refinement for the D_p, lappair and cross quadratures
    refine: int = Field(default=2, ge=1, le=4)
    # cap on the refined grid size when |u|^(p-2) is not a polynomial
    max_refined_n: int = Field(default=64, ge=8)
    checks: list[str] = Field(
        default_factory=lambda: ["1.2", "2.1", "2.2", "2.3", "2.6", "integral", "monotone"]
    )

    @field_validator("p_set")
    @classmethod
    def validate_p_set(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("p_set must not be empty")
        if any(p < 2 for p in value):
            raise ValueError(f"every p must be >= 2, got {value}")
        return sorted(set(value))

    @field_validator("q_set")
    @classmethod
    def validate_q_set(cls, value: list[float]) -> list[float]:
        if any(q < 1 for q in value):
            raise ValueError(f"every q must be >= 1, got {value}")
        return sorted(set(value))


# ----------------------------------------------------------------------
# Pointwise quadratures
# ----------------------------------------------------------------------
def _quadrature(grid: Grid, integrand: np.ndarray, *, compensated: bool = False) -> float:
    if compensated:
        # pairwise sums per slab, compensated across slabs
        partial = np.sum(integrand.reshape(integrand.shape[0], -1), axis=1)
        return math.fsum(partial.tolist()) * grid.cell_volume
    return float(np.sum(integrand)) * grid.cell_volume


def magnitude_norm(grid: Grid, magnitude: np.ndarray, q: float) -> float:
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q!r}")
    peak = float(np.max(magnitude))
    if q == math.inf or peak == 0.0:
        return peak
    # normalizing by the peak keeps |u|^q inside double range for large q
    total = _quadrature(grid, (magnitude / peak) ** q, compensated=q >= COMPENSATED_FROM_Q)
    return peak * total ** (1.0 / q)


def lp_norm(u: VectorField, q: float) -> float:
    """``(integral |u|^q dx)^(1/q)`` with the Euclidean pointwise magnitude."""
    return magnitude_norm(u.grid, u.magnitude(), q)


def grad_squared(u: VectorField, grad: np.ndarray | None = None) -> np.ndarray:
    """Pointwise ``|grad u|^2 = sum_jk (d_j u_k)^2``."""
    g = gradient(u).values if grad is None else grad
    return np.sum(g**2, axis=(0, 1))


def dissipation(u: VectorField, p: float, grad: np.ndarray | None = None) -> float:
    """``D_p(u) = integral |u|^(p-2) |grad u|^2 dx``."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p!r}")
    weight = u.magnitude() ** (p - 2)
    return _quadrature(u.grid, weight * grad_squared(u, grad), compensated=p >= COMPENSATED_FROM_Q)


def _safe_power(magnitude: np.ndarray, exponent: float) -> np.ndarray:
    if exponent >= 0:
        return magnitude**exponent
    out = np.zeros_like(magnitude)
    np.power(magnitude, exponent, out=out, where=magnitude > 0)
    return out


def balance_terms(
    u: VectorField,
    p: float,
    *,
    grad: np.ndarray | None = None,
    lap: np.ndarray | None = None,
) -> dict[str, float]:
    """Pairings of the L^p energy method for one field.

    ``lappair = -integral lap(u) . |u|^(p-2) u``,
    ``cross = (p-2) integral |u|^(p-4) sum_j (sum_k u_k d_j u_k)^2``.
    """
    grid = u.grid
    mag = u.magnitude()
    g = gradient(u).values if grad is None else grad
    lap_values = laplacian(u).values if lap is None else lap
    weighted = _safe_power(mag, p - 2) * u.values
    compensated = p >= COMPENSATED_FROM_Q

    out = {"lappair": -_quadrature(grid, np.sum(lap_values * weighted, axis=0), compensated=compensated)}
    if p == 2:
        out["cross"] = 0.0
    else:
        u_dot_grad = np.einsum("k...,jk...->j...", u.values, g)  # sum_k u_k d_j u_k
        integrand = _safe_power(mag, p - 4) * np.sum(u_dot_grad**2, axis=0)
        out["cross"] = (p - 2) * _quadrature(grid, integrand, compensated=compensated)
    return out


def time_pairing(u: VectorField, dudt: VectorField, p: float) -> float:
    """``integral du/dt . |u|^(p-2) u`` on the native grid.

    Pointwise chain rule makes this exactly ``(1/p) d/dt`` of the sampled ``||u||_p^p``.
    """
    weighted = _safe_power(u.magnitude(), p - 2) * u.values
    return _quadrature(u.grid, np.sum(dudt.values * weighted, axis=0), compensated=p >= COMPENSATED_FROM_Q)


def refined(u: VectorField, factor: int) -> VectorField:
    if factor == 1:
        return u
    grid, values = refine_values(u.grid, u.values, factor)
    return VectorField.from_values(grid, values, solenoidal=u.solenoidal)


def tail_mass(u: VectorField, band: float = TAIL_BAND) -> float:
    """Fraction of ``||u||_2^2`` within ``band * L`` of any face of the box."""
    grid = u.grid
    total = float(np.sum(u.values**2))
    if total == 0.0:
        return 0.0
    axis = np.arange(grid.n) * grid.spacing
    near = (axis < band * grid.box_length) | (axis >= (1.0 - band) * grid.box_length)
    mask = np.zeros(grid.shape, dtype=bool)
    for dim_axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[dim_axis] = grid.n
        mask |= near.reshape(shape)
    return float(np.sum(u.values[:, mask] ** 2)) / total


def energy_spectrum(u: VectorField) -> tuple[np.ndarray, np.ndarray]:
    """Shell sums ``E(k)`` with ``sum E = 1/2 ||u||_2^2``; shells are integer multiples of 2pi/L."""
    grid = u.grid
    shells = np.rint(grid.k_magnitude / grid.k_unit).astype(np.int64)
    density = 0.5 * grid.volume * grid.hermitian_weights * np.sum(np.abs(u.coefficients) ** 2, axis=0)
    energy = np.bincount(shells.ravel(), weights=density.ravel())
    return np.arange(energy.size) * grid.k_unit, energy


# ----------------------------------------------------------------------
# kappa
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class KappaValue:
    p: float
    dim: int
    value: float
    l2: float
    lp: float

    def power_identity_residual(self) -> float:
        """Relative gap between ``kappa^N`` and ``||u||_p^(p(N-2)/(p-2)) ||u||_2^(2(p-N)/(p-2))``."""
        p, n = self.p, self.dim
        direct = self.lp ** (p * (n - 2) / (p - 2)) * self.l2 ** (2 * (p - n) / (p - 2))
        powered = self.value**n
        scale = max(abs(direct), abs(powered))
        return 0.0 if scale == 0.0 else abs(direct - powered) / scale


def kappa_from_norms(l2: float, lp: float, p: float, dim: int) -> KappaValue:
    table = ExponentTable.build(p, dim)
    if table.p <= dim:
        raise ValueError(f"kappa needs p > N={dim}, got p={p!r}")
    a, b = (float(e) for e in table.kappa_exponents)
    return KappaValue(p=float(p), dim=dim, value=(lp**a) * (l2**b), l2=l2, lp=lp)


def kappa(u: VectorField, p: float, dim: int | None = None) -> KappaValue:
    n = u.grid.dim if dim is None else dim
    return kappa_from_norms(lp_norm(u, 2), lp_norm(u, p), p, n)


# ----------------------------------------------------------------------
# Diagnostic records
# ----------------------------------------------------------------------
def norm_columns(dim: int, monitor: MonitorConfig) -> dict[str, float]:
    """Column name -> exponent for every norm recorded."""
    columns: dict[str, float] = {"l2": 2.0, "l3": 3.0, "lN": float(dim), "linf": math.inf}
    if dim == 3:
        columns.update({"l6": 6.0, "l9": 9.0})
    for q in monitor.q_set:
        columns.setdefault(f"l{format_p(q)}", q)
    for p in monitor.p_set:
        tag = format_p(p)
        columns[f"lp_{tag}"] = p
        columns[f"l3p_{tag}"] = 3 * p
        if dim == 2:
            columns[f"l2p_{tag}"] = 2 * p
    return columns


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    norms: dict[str, float]
    dissipation: dict[str, float]
    grad_l2: float
    energy: float
    tail_mass: float
    balance: dict[str, float] = field(default_factory=dict)

    def as_row(self) -> dict[str, float]:
        row = {"t": self.t, "energy": self.energy, "grad_l2": self.grad_l2, "tail_mass": self.tail_mass}
        row.update(self.norms)
        row.update(self.dissipation)
        row.update(self.balance)
        return row

    def parseval_gap(self, u: VectorField) -> float:
        spectral = math.sqrt(spectral_l2_squared(u.grid, u.coefficients))
        scale = max(spectral, self.norms["l2"])
        return 0.0 if scale == 0.0 else abs(spectral - self.norms["l2"]) / scale


def _even_power(p: float) -> bool:
    return float(p).is_integer() and int(p) % 2 == 0


def identity_gap(terms: dict[str, float], d_p: float) -> float:
    """Relative gap ``|lappair - (D_p + cross)| / |lappair|`` of one quadrature."""
    gap = abs(terms["lappair"] - (d_p + terms["cross"]))
    scale = abs(terms["lappair"])
    return gap / scale if scale > 0 else gap


def _refined_balance(
    levels: dict[int, tuple[VectorField, np.ndarray, np.ndarray]],
    u: VectorField,
    p: float,
    monitor: MonitorConfig,
) -> tuple[float, dict[str, float], int]:
    """``D_p`` and the balance pairings, refined until the identity closes.

    For even p the weight ``|u|^(p-2)`` is a polynomial and the starting factor
    is exact. Otherwise the factor doubles while the gap exceeds the target and
    the refined grid stays within ``max_refined_n``.
    """

    def at(factor: int) -> tuple[float, dict[str, float]]:
        if factor not in levels:
            fine = refined(u, factor)
            levels[factor] = (fine, gradient(fine).values, laplacian(fine).values)
        fine, grad, lap = levels[factor]
        return dissipation(fine, p, grad), balance_terms(fine, p, grad=grad, lap=lap)

    factor = monitor.refine
    d_p, terms = at(factor)
    if _even_power(p):
        return d_p, terms, factor
    target = REFINE_MARGIN * IDENTITY_RTOL
    gap = identity_gap(terms, d_p)
    while gap > target and 2 * factor * u.grid.n <= monitor.max_refined_n:
        factor *= 2
        d_p, terms = at(factor)
        gap = identity_gap(terms, d_p)
    if gap > target:
        logger.warning(
            "L^%s balance gap %.3e above %.1e at refined n=%d",
            format_p(p), gap, target, factor * u.grid.n,
        )
    return d_p, terms, factor


def compute_record(
    u: VectorField, t: float, monitor: MonitorConfig, dudt: VectorField | None = None
) -> DiagnosticRecord:
    grid = u.grid
    mag = u.magnitude()
    grad = gradient(u).values
    norms = {name: magnitude_norm(grid, mag, q) for name, q in norm_columns(grid.dim, monitor).items()}

    levels: dict[int, tuple[VectorField, np.ndarray, np.ndarray]] = {}
    dissipations: dict[str, float] = {}
    balance: dict[str, float] = {}
    for p in monitor.p_set:
        tag = format_p(p)
        d_p, terms, factor = _refined_balance(levels, u, p, monitor)
        dissipations[f"D_{tag}"] = d_p
        for key, value in terms.items():
            balance[f"{key}_{tag}"] = value
        balance[f"refine_{tag}"] = float(factor)
        if dudt is not None:
            balance[f"dtpair_{tag}"] = time_pairing(u, dudt, p)

    grad_l2 = _quadrature(grid, grad_squared(u, grad))
    return DiagnosticRecord(
        t=float(t),
        norms=norms,
        dissipation=dissipations,
        grad_l2=grad_l2,
        energy=0.5 * norms["l2"] ** 2,
        tail_mass=tail_mass(u),
        balance=balance,
    )


def make_recorder(monitor: MonitorConfig):
    """Adapter with the solver's recorder signature."""

    def recorder(u: VectorField, t: float, dudt: VectorField | None = None) -> DiagnosticRecord:
        return compute_record(u, t, monitor, dudt)

    return recorder
