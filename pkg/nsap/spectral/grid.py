from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box [0, L)^N.

    Spectral arrays follow the real-FFT layout: full length ``n`` on every
    axis except the last, which holds ``n // 2 + 1`` non-negative indices.
    Index ``n/2`` is the Nyquist index and carries wavenumber ``+n/2 * 2pi/L``.
    """

    dim: int
    n: int
    box_length: float

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim!r}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n!r}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be > 0, got {self.box_length!r}")

    # ------------------------------------------------------------------
    # Physical space
    # ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.n,) * (self.dim - 1) + (self.n // 2 + 1,)

    @property
    def point_count(self) -> int:
        return self.n**self.dim

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.box_length**self.dim

    @property
    def k_unit(self) -> float:
        return 2.0 * np.pi / self.box_length

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        axis = np.arange(self.n) * self.spacing
        return tuple(np.meshgrid(*([axis] * self.dim), indexing="ij"))

    # ------------------------------------------------------------------
    # Spectral space
    # ------------------------------------------------------------------
    @cached_property
    def axis_indices(self) -> tuple[np.ndarray, ...]:
        """Integer mode index per axis, broadcastable to ``spectral_shape``."""
        full = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        full[self.n // 2] = self.n // 2
        half = np.arange(self.n // 2 + 1, dtype=np.int64)
        out = []
        for axis in range(self.dim):
            values = half if axis == self.dim - 1 else full
            shape = [1] * self.dim
            shape[axis] = values.size
            out.append(values.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Exact wavenumbers, shape ``(dim, *spectral_shape)``."""
        return np.stack(
            [np.broadcast_to(idx * self.k_unit, self.spectral_shape) for idx in self.axis_indices]
        ).astype(np.float64)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True where the mode index on the given axis is the Nyquist index."""
        return np.stack(
            [np.broadcast_to(idx == self.n // 2, self.spectral_shape) for idx in self.axis_indices]
        )

    @cached_property
    def derivative_wavenumbers(self) -> np.ndarray:
        """Wavenumbers with the Nyquist component zeroed, used by every derivative."""
        return np.where(self.nyquist_mask, 0.0, self.wavenumbers)

    @cached_property
    def k_squared(self) -> np.ndarray:
        return np.sum(self.wavenumbers**2, axis=0)

    @cached_property
    def derivative_k_squared(self) -> np.ndarray:
        return np.sum(self.derivative_wavenumbers**2, axis=0)

    @cached_property
    def k_magnitude(self) -> np.ndarray:
        return np.sqrt(self.k_squared)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """False for modes with any axis index beyond n/3."""
        keep = np.ones(self.spectral_shape, dtype=bool)
        for idx in self.axis_indices:
            keep &= np.abs(idx) * 3 <= self.n
        return keep

    @cached_property
    def hermitian_weights(self) -> np.ndarray:
        """Multiplicity of each stored half-spectrum mode in the full spectrum."""
        last = self.axis_indices[-1]
        weights = np.where((last == 0) | (last == self.n // 2), 1.0, 2.0)
        return np.broadcast_to(weights, self.spectral_shape)

    @property
    def nyquist_wavenumber(self) -> float:
        return (self.n // 2) * self.k_unit

    def is_compatible(self, other: "Grid") -> bool:
        return self == other


def make_grid(dim: int, n: int, box_length: float) -> Grid:
    return Grid(dim=int(dim), n=int(n), box_length=float(box_length))
