from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal, Protocol

import numpy as np
import pandas as pd

from nsap.solver.config import SolverConfig
from nsap.spectral.fields import VectorField

TrajectoryStatus = Literal["complete", "escaped"]


class RowLike(Protocol):
    t: float

    def as_row(self) -> dict[str, float]: ...


@dataclass(frozen=True)
class Snapshot:
    t: float
    u: VectorField

    def __post_init__(self) -> None:
        if not self.u.solenoidal:
            raise ValueError(f"snapshot at t={self.t:g} holds a field not marked solenoidal")
        if not np.isfinite(self.t):
            raise ValueError(f"snapshot time must be finite, got {self.t!r}")


@dataclass
class Trajectory:
    """Snapshots (strictly increasing in t) plus the per-time diagnostic records."""

    config: SolverConfig
    scenario_id: str
    t0: float = 0.0
    snapshots: list[Snapshot] = field(default_factory=list)
    records: list[Any] = field(default_factory=list)
    status: TrajectoryStatus = "complete"
    escape_time: float | None = None

    def add_snapshot(self, snapshot: Snapshot, *, keep: bool = True) -> None:
        if self.snapshots and snapshot.t <= self.snapshots[-1].t:
            raise ValueError(f"snapshot time {snapshot.t:g} is not after {self.snapshots[-1].t:g}")
        if not keep and self.snapshots:
            # keep the initial datum and the most recent field only
            self.snapshots = self.snapshots[:1]
        self.snapshots.append(snapshot)

    def mark_escaped(self, t: float) -> None:
        self.status = "escaped"
        self.escape_time = float(t)

    @property
    def escaped(self) -> bool:
        return self.status == "escaped"

    @property
    def initial(self) -> Snapshot:
        return self.snapshots[0]

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def series(self) -> pd.DataFrame:
        """Diagnostic records as a frame, one row per record time."""
        rows = [record.as_row() for record in self.records]
        return pd.DataFrame(rows)


@dataclass
class CoupledTrajectory:
    """``v`` solves NS, ``w`` the perturbed system; ``combined`` holds ``v + w``."""

    v: Trajectory
    w: Trajectory
    combined: Trajectory

    def __iter__(self):
        return iter((self.v, self.w))

    @property
    def escaped(self) -> bool:
        return self.v.escaped or self.w.escaped
