"""Immutable fields carrying paired physical and spectral representations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nsap.errors import GridMismatchError
from nsap.spectral.grid import Grid
from nsap.spectral.transforms import forward_array, inverse_array


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.flags.writeable = False
    return array


def _require_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains non-finite values")


def require_same_grid(*grids: Grid) -> Grid:
    first = grids[0]
    for other in grids[1:]:
        if other != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {other}")
    return first


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray
    coefficients: np.ndarray

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray) -> "ScalarField":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != grid.shape:
            raise ValueError(f"expected values of shape {grid.shape}, got {values.shape}")
        _require_finite(values, "scalar field")
        return cls(grid=grid, values=_frozen(values.copy()), coefficients=_frozen(forward_array(grid, values)))

    @classmethod
    def from_coefficients(cls, grid: Grid, coefficients: np.ndarray) -> "ScalarField":
        coefficients = np.asarray(coefficients, dtype=np.complex128)
        if coefficients.shape != grid.spectral_shape:
            raise ValueError(f"expected coefficients of shape {grid.spectral_shape}, got {coefficients.shape}")
        values = inverse_array(grid, coefficients)
        # re-derive so the stored spectrum is exactly Hermitian
        return cls(grid=grid, values=_frozen(values), coefficients=_frozen(forward_array(grid, values)))

    @property
    def mean(self) -> float:
        return float(self.coefficients[(0,) * self.grid.dim].real)


@dataclass(frozen=True, eq=False)
class VectorField:
    """N-component field; ``values`` has shape ``(N, n, ..., n)``."""

    grid: Grid
    values: np.ndarray
    coefficients: np.ndarray
    solenoidal: bool = False

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray, *, solenoidal: bool = False) -> "VectorField":
        values = np.asarray(values, dtype=np.float64)
        expected = (grid.dim, *grid.shape)
        if values.shape != expected:
            raise ValueError(f"expected values of shape {expected}, got {values.shape}")
        _require_finite(values, "vector field")
        return cls(
            grid=grid,
            values=_frozen(values.copy()),
            coefficients=_frozen(forward_array(grid, values)),
            solenoidal=solenoidal,
        )

    @classmethod
    def from_coefficients(
        cls, grid: Grid, coefficients: np.ndarray, *, solenoidal: bool = False
    ) -> "VectorField":
        coefficients = np.asarray(coefficients, dtype=np.complex128)
        expected = (grid.dim, *grid.spectral_shape)
        if coefficients.shape != expected:
            raise ValueError(f"expected coefficients of shape {expected}, got {coefficients.shape}")
        values = inverse_array(grid, coefficients)
        return cls(
            grid=grid,
            values=_frozen(values),
            coefficients=_frozen(forward_array(grid, values)),
            solenoidal=solenoidal,
        )

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls.from_values(grid, np.zeros((grid.dim, *grid.shape)), solenoidal=True)

    @classmethod
    def from_components(cls, components: list[ScalarField]) -> "VectorField":
        grid = require_same_grid(*(c.grid for c in components))
        if len(components) != grid.dim:
            raise ValueError(f"expected {grid.dim} components, got {len(components)}")
        return cls.from_values(grid, np.stack([c.values for c in components]))

    def component(self, axis: int) -> ScalarField:
        return ScalarField(grid=self.grid, values=self.values[axis], coefficients=self.coefficients[axis])

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))

    def scaled(self, factor: float) -> "VectorField":
        return VectorField(
            grid=self.grid,
            values=_frozen(self.values * factor),
            coefficients=_frozen(self.coefficients * factor),
            solenoidal=self.solenoidal,
        )

    def __add__(self, other: "VectorField") -> "VectorField":
        grid = require_same_grid(self.grid, other.grid)
        return VectorField(
            grid=grid,
            values=_frozen(self.values + other.values),
            coefficients=_frozen(self.coefficients + other.coefficients),
            solenoidal=self.solenoidal and other.solenoidal,
        )

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + other.scaled(-1.0)


@dataclass(frozen=True, eq=False)
class TensorField:
    """Rank-2 field; ``values`` has shape ``(N, N, n, ..., n)``."""

    grid: Grid
    values: np.ndarray
    coefficients: np.ndarray
    symmetric: bool = False

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray, *, symmetric: bool = False) -> "TensorField":
        values = np.asarray(values, dtype=np.float64)
        expected = (grid.dim, grid.dim, *grid.shape)
        if values.shape != expected:
            raise ValueError(f"expected values of shape {expected}, got {values.shape}")
        if symmetric:
            values = 0.5 * (values + np.swapaxes(values, 0, 1))
        return cls(
            grid=grid,
            values=_frozen(values.copy()),
            coefficients=_frozen(forward_array(grid, values)),
            symmetric=symmetric,
        )

    @classmethod
    def from_coefficients(
        cls, grid: Grid, coefficients: np.ndarray, *, symmetric: bool = False
    ) -> "TensorField":
        return cls.from_values(grid, inverse_array(grid, np.asarray(coefficients)), symmetric=symmetric)

    def entry(self, i: int, j: int) -> ScalarField:
        return ScalarField(grid=self.grid, values=self.values[i, j], coefficients=self.coefficients[i, j])


def outer(a: VectorField, b: VectorField) -> TensorField:
    """Pointwise ``a (x) b`` with entries ``a_i b_j``."""
    grid = require_same_grid(a.grid, b.grid)
    return TensorField.from_values(grid, np.einsum("i...,j...->ij...", a.values, b.values))


def symmetric_outer(a: VectorField, b: VectorField) -> TensorField:
    """``a (x)_s b = (a (x) b + b (x) a) / 2``."""
    grid = require_same_grid(a.grid, b.grid)
    return TensorField.from_values(grid, np.einsum("i...,j...->ij...", a.values, b.values), symmetric=True)
