"""Diagnostic series on disk: ``diagnostics.csv`` plus ``series_meta.json``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal

import numpy as np
import pandas as pd
from scipy import integrate

from nsap.errors import SeriesFormatError
from nsap.solver.trajectory import Trajectory
from nsap.utils import format_p, read_json, write_json

CSV_NAME = "diagnostics.csv"
META_NAME = "series_meta.json"
PLOT_NAME = "series.dat"
FLOAT_FORMAT = "%.17g"

BASE_COLUMNS = ("t", "energy", "grad_l2", "tail_mass", "l2", "l3", "lN", "linf")


@dataclass(frozen=True)
class SeriesBundle:
    """A diagnostic frame plus the metadata the checks need."""

    frame: pd.DataFrame
    dim: int
    viscosity: float
    box_length: float
    dt: float
    p_set: tuple[float, ...]
    status: str = "complete"
    escape_time: float | None = None

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory, p_set: Iterable[float]) -> "SeriesBundle":
        grid = trajectory.initial.u.grid
        return cls(
            frame=trajectory.series(),
            dim=grid.dim,
            viscosity=trajectory.config.viscosity,
            box_length=grid.box_length,
            dt=trajectory.config.dt,
            p_set=tuple(float(p) for p in p_set),
            status=trajectory.status,
            escape_time=trajectory.escape_time,
        )

    # ------------------------------------------------------------------
    @property
    def escaped(self) -> bool:
        return self.status == "escaped"

    @property
    def t(self) -> np.ndarray:
        return self.frame["t"].to_numpy(dtype=float)

    @property
    def decay_rate(self) -> float:
        """Decay rate of the slowest Stokes mode, ``nu (2 pi / L)^2``."""
        return self.viscosity * (2.0 * math.pi / self.box_length) ** 2

    def column(self, name: str) -> np.ndarray:
        if name not in self.frame.columns:
            raise SeriesFormatError(f"diagnostic series has no column {name!r}")
        return self.frame[name].to_numpy(dtype=float)

    def per_p(self, prefix: str, p: float) -> np.ndarray:
        return self.column(f"{prefix}_{format_p(p)}")

    def require_columns(self, names: Iterable[str]) -> None:
        missing = [name for name in names if name not in self.frame.columns]
        if missing:
            raise SeriesFormatError(f"diagnostic series is missing columns: {', '.join(missing)}")

    def cadence_ratio(self) -> float:
        """Median sample spacing in units of the solver step."""
        if len(self.frame) < 2:
            return math.inf
        return float(np.median(np.diff(self.t))) / self.dt

    # ------------------------------------------------------------------
    def save(self, directory: str | Path) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / CSV_NAME
        self.frame.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        meta_path = directory / META_NAME
        write_json(
            meta_path,
            {
                "dim": self.dim,
                "viscosity": self.viscosity,
                "box_length": self.box_length,
                "dt": self.dt,
                "p_set": list(self.p_set),
                "status": self.status,
                "escape_time": self.escape_time,
            },
        )
        plot_path = directory / PLOT_NAME
        np.savetxt(
            plot_path,
            self.frame.to_numpy(dtype=float),
            fmt="%.10e",
            header=" ".join(self.frame.columns),
        )
        return [csv_path, meta_path, plot_path]

    @classmethod
    def load(cls, directory: str | Path) -> "SeriesBundle":
        directory = Path(directory)
        csv_path = directory / CSV_NAME
        meta_path = directory / META_NAME
        if not csv_path.exists():
            raise SeriesFormatError(f"{directory} has no {CSV_NAME}")
        if not meta_path.exists():
            raise SeriesFormatError(f"{directory} has no {META_NAME}")
        frame = pd.read_csv(csv_path, float_precision="round_trip")
        meta = read_json(meta_path)
        try:
            bundle = cls(
                frame=frame,
                dim=int(meta["dim"]),
                viscosity=float(meta["viscosity"]),
                box_length=float(meta["box_length"]),
                dt=float(meta["dt"]),
                p_set=tuple(float(p) for p in meta["p_set"]),
                status=str(meta.get("status", "complete")),
                escape_time=meta.get("escape_time"),
            )
        except KeyError as exc:
            raise SeriesFormatError(f"{meta_path} lacks key {exc}") from exc
        bundle.require_columns(BASE_COLUMNS)
        return bundle


# ----------------------------------------------------------------------
# Time quadrature
# ----------------------------------------------------------------------
QuadratureRule = Literal["trapezoid", "simpson"]


def cumulative_integral(t: np.ndarray, y: np.ndarray, rule: QuadratureRule = "trapezoid") -> np.ndarray:
    """``F[i] = integral_{t[0]}^{t[i]} y``; ``F[0] = 0``."""
    if t.size < 2:
        return np.zeros_like(y, dtype=float)
    if rule == "simpson" and t.size >= 3:
        return integrate.cumulative_simpson(y, x=t, initial=0.0)
    return integrate.cumulative_trapezoid(y, x=t, initial=0.0)


def time_integral(t: np.ndarray, y: np.ndarray, rule: QuadratureRule = "trapezoid") -> float:
    return float(cumulative_integral(t, y, rule)[-1]) if t.size else 0.0


def time_derivative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Centered differences inside, one-sided at the ends."""
    if t.size < 2:
        return np.full_like(y, np.nan, dtype=float)
    edge = 2 if t.size >= 3 else 1
    return np.gradient(y, t, edge_order=edge)
