"""Exact exponent bookkeeping for the L^p estimates in dimension N."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def as_fraction(value: float | int | Fraction) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(value).limit_denominator(10**6)


@dataclass(frozen=True)
class ExponentTable:
    dim: int
    p: Fraction

    @classmethod
    def build(cls, p: float | int | Fraction, dim: int) -> "ExponentTable":
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim!r}")
        frac = as_fraction(p)
        if frac < 2:
            raise ValueError(f"p must be >= 2, got {p!r}")
        return cls(dim=dim, p=frac)

    def _require_supercritical(self) -> None:
        if self.p <= self.dim:
            raise ValueError(f"p must exceed N={self.dim}, got p={self.p}")

    @property
    def alpha(self) -> Fraction:
        """Time-integrability exponent ``p(p-N+2)/(p-N)``."""
        self._require_supercritical()
        p, n = self.p, self.dim
        return p * (p - n + 2) / (p - n)

    @property
    def sobolev_pair(self) -> tuple[Fraction, Fraction] | None:
        if self.dim == 2:
            return None
        return Fraction(2), Fraction(2 * self.dim, self.dim - 2)

    @property
    def sobolev_target(self) -> Fraction | None:
        """``Np/(N-2)``; there is no finite counterpart in two dimensions."""
        if self.dim == 2:
            return None
        return self.dim * self.p / (self.dim - 2)

    @property
    def kappa_exponents(self) -> tuple[Fraction, Fraction]:
        """Exponents on (``||u||_p``, ``||u||_2``) in the kappa value."""
        if self.p == 2:
            raise ValueError("kappa needs p > 2")
        p, n = self.p, self.dim
        return p * (n - 2) / (n * (p - 2)), 2 * (p - n) / (n * (p - 2))

    @property
    def balance_exponents(self) -> tuple[Fraction, Fraction]:
        """Exponents on (``||u||_p``, ``D_p``) bounding the cubic term of the L^p balance."""
        p, n = self.p, self.dim
        return 1 + (p - n) / 2, (p + n) / (2 * p)

    @property
    def initial_bound_exponent(self) -> Fraction:
        """Exponent on ``||u0||_N`` in the bound of ``int ||u||_p^alpha``."""
        self._require_supercritical()
        return 2 * self.p / (self.p - self.dim)

    @property
    def interpolation_theta(self) -> Fraction:
        """``||u||_p <= ||u||_N^theta ||u||_{Np/(N-2)}^(1-theta)``."""
        return Fraction(2) / (self.p - self.dim + 2)

    @property
    def holder_split(self) -> tuple[Fraction, Fraction]:
        """Time-Hoelder weights on (``int ||u||_6^2``, ``int ||u||_3p^p``), three dimensions only."""
        if self.dim != 3:
            raise ValueError("the L^9 splitting is only defined for N=3")
        self._require_supercritical()
        return (self.p - 3) / (self.p - 2), Fraction(1) / (self.p - 2)

    def smoothing_sigma(self, *, time_order: int, space_order: int, q: float) -> float:
        """``k + |alpha|/2 + (N/2)(1/p - 1/q)``."""
        inv_q = 0.0 if q == float("inf") else 1.0 / q
        return time_order + space_order / 2 + (self.dim / 2) * (1.0 / float(self.p) - inv_q)

    def mixed_time_exponent(self, q: float) -> float:
        """``r`` with ``2/r + N/q = N/p``; requires ``q > p``."""
        if not q > float(self.p):
            raise ValueError(f"q must exceed p={self.p}, got {q!r}")
        inv_q = 0.0 if q == float("inf") else 1.0 / q
        return 2.0 / (self.dim * (1.0 / float(self.p) - inv_q))

    def to_dict(self) -> dict[str, str | None]:
        out: dict[str, str | None] = {"N": str(self.dim), "p": str(self.p)}
        out["alpha"] = str(self.alpha) if self.p > self.dim else None
        out["sobolev_target"] = str(self.sobolev_target) if self.sobolev_target is not None else None
        out["interpolation_theta"] = str(self.interpolation_theta)
        return out
