from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

NonlinearForm = Literal["divergence", "skew_symmetric"]
Scheme = Literal["etdrk2", "etdrk4"]

SCHEME_ORDER: dict[str, int] = {"etdrk2": 2, "etdrk4": 4}


class SolverConfig(BaseModel):
    """Time-integration settings for the projected Navier-Stokes system."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    viscosity: float = Field(default=1.0, gt=0.0)
    dt: float = Field(default=1e-3, gt=0.0)
    t_end: float = Field(default=0.1, ge=0.0)
    snapshot_interval: float = Field(default=0.05, gt=0.0)
    nonlinear_form: NonlinearForm = "skew_symmetric"
    dealias: bool = True
    nonlinear: bool = True
    scheme: Scheme = "etdrk4"
    cfl: float = Field(default=0.5, gt=0.0)
    blowup_factor: float = Field(default=1e6, gt=1.0)
    guard_p: float = Field(default=4.0, ge=2.0)
    snapshot_times: list[float] | None = None

    @field_validator("snapshot_times")
    @classmethod
    def validate_snapshot_times(cls, value: list[float] | None) -> list[float] | None:
        if value is None:
            return None
        if any(t <= 0 for t in value):
            raise ValueError("snapshot_times must be positive")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("snapshot_times must be strictly increasing")
        return value

    @model_validator(mode="after")
    def validate_cadence(self) -> "SolverConfig":
        if self.snapshot_interval < self.dt:
            raise ValueError(
                f"snapshot_interval ({self.snapshot_interval}) must be >= dt ({self.dt})"
            )
        if self.snapshot_times and self.snapshot_times[-1] > self.t_end:
            raise ValueError("snapshot_times must not exceed t_end")
        return self

    @property
    def order(self) -> int:
        return SCHEME_ORDER[self.scheme]
