"""Scenario files: TOML with ``[grid]``, ``[ic]``, ``[solver]``, ``[monitor]``, ``[output]``.

An optional ``[perturbation]`` table (same keys as ``[ic]``) turns the run
into a coupled ``v + w`` run with ``v0`` from ``[ic]`` and ``w0`` from it.
"""

from __future__ import annotations

import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal

import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from nsap.errors import ConfigError, UnknownInequalityError
from nsap.monitor.checks import expand_ids
from nsap.monitor.norms import MonitorConfig
from nsap.solver.config import SolverConfig
from nsap.spectral.grid import Grid, make_grid
from nsap.utils import sha256_text

InitialKind = Literal["taylor_green", "random_solenoidal", "localized_bump", "from_checkpoint", "rough"]

MAX_SEED = 2**63 - 1  # TOML integers are signed 64-bit


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    dim: Literal[2, 3] = 3
    n: int = Field(default=32, ge=8)
    box_length: float = Field(default=2.0 * math.pi, gt=0.0)

    @field_validator("n")
    @classmethod
    def validate_n(cls, value: int) -> int:
        if value % 2 != 0:
            raise ValueError(f"n must be even, got {value}")
        return value

    def build(self) -> Grid:
        return make_grid(self.dim, self.n, self.box_length)


class InitialSpec(BaseModel):
    """Initial datum. ``amplitude`` is the peak speed; unset keeps a checkpoint as stored."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: InitialKind = "taylor_green"
    amplitude: float | None = Field(default=None, ge=0.0)
    k0: float = Field(default=2.0, gt=0.0)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    width: float = Field(default=0.25, gt=0.0, le=0.5)
    checkpoint: str | None = None
    profile: Literal["flat", "critical"] = "critical"
    p: float = Field(default=4.0, gt=2.0)

    @model_validator(mode="after")
    def validate_checkpoint(self) -> "InitialSpec":
        if self.kind == "from_checkpoint" and not self.checkpoint:
            raise ValueError("kind 'from_checkpoint' needs a checkpoint path")
        return self

    @property
    def peak_speed(self) -> float:
        return 1.0 if self.amplitude is None else self.amplitude


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "scenario"
    directory: str | None = None
    checkpoints: bool = True
    spectrum: bool = True

    @field_validator("name")
    @classmethod
    def not_empty(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("name must not be empty")
        return value


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    grid: GridSpec = Field(default_factory=GridSpec)
    ic: InitialSpec = Field(default_factory=InitialSpec)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    monitor: MonitorConfig = Field(default_factory=MonitorConfig)
    output: OutputSpec = Field(default_factory=OutputSpec)
    perturbation: InitialSpec | None = None

    @model_validator(mode="after")
    def validate_checks(self) -> "ScenarioSpec":
        try:
            expand_ids([c for c in self.monitor.checks if c != "monotone"])
        except UnknownInequalityError as exc:
            raise ValueError(str(exc)) from exc
        return self

    @property
    def coupled(self) -> bool:
        return self.perturbation is not None

    def to_toml(self) -> str:
        return tomli_w.dumps(self.model_dump(exclude_none=True))

    def scenario_hash(self) -> str:
        return sha256_text(self.to_toml())

    def with_updates(self, section: str, **values: Any) -> "ScenarioSpec":
        """Copy with keys of one section replaced, re-validated."""
        payload = self.model_dump(exclude_none=True)
        payload.setdefault(section, {}).update(values)
        return parse_scenario(payload)


def parse_scenario(payload: dict[str, Any]) -> ScenarioSpec:
    try:
        return ScenarioSpec.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def loads_scenario(text: str) -> ScenarioSpec:
    try:
        payload = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scenario is not valid TOML: {exc}") from exc
    return parse_scenario(payload)


def load_scenario(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    return loads_scenario(path.read_text(encoding="utf-8"))


def save_scenario(spec: ScenarioSpec, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(spec.to_toml(), encoding="utf-8")
    return path
