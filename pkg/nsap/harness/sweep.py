"""Initial-data families at fixed ``kappa_p``.

A family file holds a ``[base]`` scenario, the target ``kappa_p`` with its
``p``, and ``[[members]]`` whose ``ic`` tables override the base one. Each
member's amplitude is rescaled so that ``kappa_p(u0)`` equals the target
(``kappa_p`` is homogeneous of degree one), then every member runs into its
own directory and the empirical constants are tabulated side by side.
"""

from __future__ import annotations

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import pandas as pd
from scipy import fft as sfft
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from nsap.config import NsapSettings
from nsap.errors import ConfigError
from nsap.harness.initial import make_initial
from nsap.harness.orchestrate import run_scenario
from nsap.harness.scenario import ScenarioSpec, parse_scenario
from nsap.monitor.checks import P_INDEPENDENT, expand_ids, run_check
from nsap.monitor.norms import kappa
from nsap.monitor.reports import FamilyStatistic, InequalityReport, family_statistic
from nsap.monitor.series import SeriesBundle
from nsap.utils import format_p, write_json

logger = logging.getLogger(__name__)

TABLE_NAME = "family.csv"
SUMMARY_NAME = "family.json"


class MemberSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    ic: dict[str, Any] = Field(default_factory=dict)

    @field_validator("name")
    @classmethod
    def validate_name(cls, value: str) -> str:
        if not value.strip() or "/" in value:
            raise ValueError(f"member name must be a plain directory name, got {value!r}")
        return value


class FamilySpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    base: dict[str, Any] = Field(default_factory=dict)
    target_kappa: float = Field(gt=0.0)
    p: float = Field(default=4.0, gt=2.0)
    ids: list[str] = Field(default_factory=lambda: ["2.3"])
    workers: int = Field(default=1, ge=1)
    members: list[MemberSpec] = Field(min_length=1)

    @field_validator("members")
    @classmethod
    def unique_names(cls, value: list[MemberSpec]) -> list[MemberSpec]:
        names = [m.name for m in value]
        if len(set(names)) != len(names):
            raise ValueError(f"member names must be unique, got {names}")
        return value

    def member_scenario(self, member: MemberSpec) -> ScenarioSpec:
        payload = {section: dict(values) for section, values in self.base.items()}
        payload["ic"] = {**payload.get("ic", {}), **member.ic}
        payload["output"] = {**payload.get("output", {}), "name": member.name}
        payload["output"].pop("directory", None)
        return parse_scenario(payload)


def load_family(path: str | Path) -> FamilySpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"family file not found: {path}")
    try:
        payload = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"family file is not valid TOML: {exc}") from exc
    try:
        family = FamilySpec.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(f"invalid family: {exc}") from exc
    expand_ids(family.ids)
    return family


def calibrate(spec: ScenarioSpec, target_kappa: float, p: float) -> tuple[ScenarioSpec, float]:
    """Rescale the peak amplitude so ``kappa_p(u0) == target_kappa``."""
    grid = spec.grid.build()
    if p <= grid.dim:
        raise ConfigError(f"kappa_p needs p > N={grid.dim}, got p={p}")
    u0 = make_initial(spec.ic, grid)
    current = kappa(u0, p).value
    if current == 0.0:
        raise ConfigError(f"member {spec.output.name!r} has a zero initial field; kappa cannot be matched")
    amplitude = float(u0.magnitude().max()) * target_kappa / current
    return spec.with_updates("ic", amplitude=amplitude), current


def _run_member(spec: ScenarioSpec, run_dir: str, settings: NsapSettings) -> dict[str, Any]:
    # worker processes do not inherit the parent's FFT worker context
    with sfft.set_workers(settings.fft_workers()):
        return run_scenario(spec, run_dir, settings).manifest


@dataclass(frozen=True)
class SweepResult:
    family_dir: Path
    table: pd.DataFrame
    statistics: list[FamilyStatistic]

    def to_dict(self) -> dict[str, Any]:
        return {
            "family_dir": str(self.family_dir),
            "members": self.table.to_dict(orient="records"),
            "statistics": [s.to_dict() for s in self.statistics],
        }


def run_family(family: FamilySpec, output_dir: str | Path, settings: NsapSettings | None = None) -> SweepResult:
    settings = settings or NsapSettings.from_env()
    family_dir = Path(output_dir)
    family_dir.mkdir(parents=True, exist_ok=True)

    calibrated: list[tuple[ScenarioSpec, float]] = []
    for member in family.members:
        calibrated.append(calibrate(family.member_scenario(member), family.target_kappa, family.p))
    logger.info("Sweep of %d members at kappa_%s=%g", len(calibrated), format_p(family.p), family.target_kappa)

    run_dirs = [str(family_dir / spec.output.name) for spec, _ in calibrated]
    specs = [spec for spec, _ in calibrated]
    if family.workers > 1:
        with ProcessPoolExecutor(max_workers=family.workers) as pool:
            manifests = list(pool.map(_run_member, specs, run_dirs, [settings] * len(specs)))
    else:
        manifests = [_run_member(spec, run_dir, settings) for spec, run_dir in zip(specs, run_dirs)]

    ids = expand_ids(family.ids)
    rows: list[dict[str, Any]] = []
    by_id: dict[str, list[InequalityReport]] = {i: [] for i in ids}
    for (spec, raw_kappa), run_dir, manifest in zip(calibrated, run_dirs, manifests):
        bundle = SeriesBundle.load(run_dir)
        row: dict[str, Any] = {
            "member": spec.output.name,
            "kind": spec.ic.kind,
            "seed": spec.ic.seed,
            "amplitude": spec.ic.amplitude,
            "kappa_unscaled": raw_kappa,
            "status": manifest["status"],
        }
        for check_id in ids:
            report = run_check(bundle, check_id, None if check_id in P_INDEPENDENT else family.p)
            by_id[check_id].append(report)
            row[f"C_emp_{check_id}"] = report.c_emp
            row[f"verdict_{check_id}"] = report.verdict
        rows.append(row)

    table = pd.DataFrame(rows)
    statistics = [family_statistic(reports) for reports in by_id.values()]
    table.to_csv(family_dir / TABLE_NAME, index=False, float_format="%.17g", lineterminator="\n")
    result = SweepResult(family_dir=family_dir, table=table, statistics=statistics)
    write_json(
        family_dir / SUMMARY_NAME,
        {**result.to_dict(), "target_kappa": family.target_kappa, "p": family.p},
    )
    return result
