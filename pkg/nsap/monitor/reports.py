"""Inequality reports and their verdict rules.

Two kinds of report exist:

- fixed-constant reports (energy inequality, Hoelder chains, identities):
  ``LHS <= C * RHS * (1 + rtol) + atol`` must hold at every sample;
- existential reports (an unspecified ``C``): the empirical constant
  ``C_emp = max(0, sup LHS/RHS)`` over samples with ``RHS > 0`` is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Literal, Mapping, Sequence

import numpy as np

from nsap.utils import format_p, read_json, write_json

Verdict = Literal["holds-with-C", "violated-beyond-tolerance", "inconclusive"]

MIN_SAMPLES = 3


@dataclass(frozen=True)
class InequalityReport:
    inequality_id: str
    lhs: list[float]
    rhs: list[float]
    times: list[float]
    verdict: Verdict
    c_emp: float | None
    fixed_constant: float | None = None
    rtol: float = 0.0
    atol: float = 0.0
    p: float | None = None
    dim: int | None = None
    margin: dict[str, float] = field(default_factory=dict)
    header: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds-with-C"

    @property
    def bound_constant(self) -> float | None:
        return self.fixed_constant if self.fixed_constant is not None else self.c_emp

    def recheck(self) -> bool:
        """Re-derive "holds" from the stored series alone."""
        if self.verdict != "holds-with-C":
            return False
        constant = self.bound_constant
        if constant is None:
            return False
        lhs = np.asarray(self.lhs, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        if self.fixed_constant is not None:
            bound = constant * rhs * (1.0 + self.rtol) + self.atol
        else:
            bound = constant * rhs * (1.0 + 1e-12) + self.atol
        return bool(np.all(lhs <= bound))

    def file_name(self) -> str:
        suffix = f"_p{format_p(self.p)}" if self.p is not None else ""
        return f"{self.inequality_id}{suffix}.json"

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.inequality_id,
            "p": self.p,
            "N": self.dim,
            "verdict": self.verdict,
            "C_emp": self.c_emp,
            "fixed_constant": self.fixed_constant,
            "tolerances": {"rtol": self.rtol, "atol": self.atol},
            "margin": dict(self.margin),
            "header": dict(self.header),
            "notes": list(self.notes),
            "t": list(self.times),
            "lhs": list(self.lhs),
            "rhs": list(self.rhs),
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "InequalityReport":
        def floats(values: Iterable[Any]) -> list[float]:
            return [math.nan if v is None else float(v) for v in values]

        tolerances = payload.get("tolerances", {})
        return cls(
            inequality_id=str(payload["id"]),
            lhs=floats(payload.get("lhs", [])),
            rhs=floats(payload.get("rhs", [])),
            times=floats(payload.get("t", [])),
            verdict=payload["verdict"],
            c_emp=payload.get("C_emp"),
            fixed_constant=payload.get("fixed_constant"),
            rtol=float(tolerances.get("rtol", 0.0)),
            atol=float(tolerances.get("atol", 0.0)),
            p=payload.get("p"),
            dim=payload.get("N"),
            margin=dict(payload.get("margin", {})),
            header=dict(payload.get("header", {})),
            notes=list(payload.get("notes", [])),
        )

    def write(self, directory: str | Path) -> Path:
        path = Path(directory) / self.file_name()
        write_json(path, self.to_dict())
        return path

    @classmethod
    def read(cls, path: str | Path) -> "InequalityReport":
        return cls.from_dict(read_json(path))

    def summary_line(self) -> str:
        c = "n/a" if self.bound_constant is None else f"{self.bound_constant:.6g}"
        p = "" if self.p is None else f" p={format_p(self.p)}"
        return f"{self.inequality_id}{p}: verdict={self.verdict} C={c}"


def _as_list(values: Sequence[float] | np.ndarray) -> list[float]:
    return [float(v) for v in np.asarray(values, dtype=float).ravel()]


def evaluate(
    inequality_id: str,
    lhs: Sequence[float] | np.ndarray,
    rhs: Sequence[float] | np.ndarray,
    times: Sequence[float] | np.ndarray,
    *,
    fixed_constant: float | None = None,
    rtol: float = 0.0,
    atol: float = 0.0,
    p: float | None = None,
    dim: int | None = None,
    min_samples: int = MIN_SAMPLES,
    header: Mapping[str, Any] | None = None,
    notes: Sequence[str] = (),
) -> InequalityReport:
    lhs_arr = np.asarray(lhs, dtype=float).ravel()
    rhs_arr = np.asarray(rhs, dtype=float).ravel()
    if lhs_arr.shape != rhs_arr.shape:
        raise ValueError(f"LHS and RHS lengths differ: {lhs_arr.size} vs {rhs_arr.size}")
    note_list = list(notes)
    common = {
        "inequality_id": inequality_id,
        "lhs": _as_list(lhs_arr),
        "rhs": _as_list(rhs_arr),
        "times": _as_list(times),
        "fixed_constant": fixed_constant,
        "rtol": rtol,
        "atol": atol,
        "p": p,
        "dim": dim,
        "header": dict(header or {}),
    }

    if lhs_arr.size < min_samples:
        note_list.append(f"only {lhs_arr.size} samples (need {min_samples})")
        return InequalityReport(verdict="inconclusive", c_emp=None, notes=note_list, **common)
    if not (np.all(np.isfinite(lhs_arr)) and np.all(np.isfinite(rhs_arr))):
        note_list.append("non-finite samples")
        return InequalityReport(verdict="inconclusive", c_emp=None, notes=note_list, **common)

    positive = rhs_arr > 0
    ratios = lhs_arr[positive] / rhs_arr[positive]
    c_emp = max(0.0, float(np.max(ratios))) if ratios.size else 0.0

    if fixed_constant is not None:
        bound = fixed_constant * rhs_arr * (1.0 + rtol) + atol
        slack = bound - lhs_arr
        margin = {"min_slack": float(np.min(slack)), "max_ratio": c_emp}
        verdict: Verdict = "holds-with-C" if np.all(slack >= 0) else "violated-beyond-tolerance"
        return InequalityReport(verdict=verdict, c_emp=c_emp, margin=margin, notes=note_list, **common)

    degenerate = (~positive) & (lhs_arr > atol)
    if np.any(degenerate):
        note_list.append(f"{int(np.sum(degenerate))} samples with RHS=0 and LHS>0")
        return InequalityReport(verdict="inconclusive", c_emp=None, notes=note_list, **common)
    margin = {
        "max_ratio": c_emp,
        "median_ratio": float(np.median(ratios)) if ratios.size else 0.0,
        "min_ratio": float(np.min(ratios)) if ratios.size else 0.0,
    }
    return InequalityReport(verdict="holds-with-C", c_emp=c_emp, margin=margin, notes=note_list, **common)


def inconclusive(
    inequality_id: str,
    reason: str,
    *,
    p: float | None = None,
    dim: int | None = None,
    header: Mapping[str, Any] | None = None,
) -> InequalityReport:
    return InequalityReport(
        inequality_id=inequality_id,
        lhs=[],
        rhs=[],
        times=[],
        verdict="inconclusive",
        c_emp=None,
        p=p,
        dim=dim,
        header=dict(header or {}),
        notes=[reason],
    )


@dataclass(frozen=True)
class FamilyStatistic:
    """Spread of ``C_emp`` for one inequality across an initial-data family."""

    inequality_id: str
    c_values: list[float]
    verdicts: list[str]

    @property
    def spread(self) -> float | None:
        positive = [c for c in self.c_values if c > 0]
        if len(positive) != len(self.c_values) or not positive:
            return None
        return max(positive) / min(positive)

    @property
    def all_hold(self) -> bool:
        return all(v == "holds-with-C" for v in self.verdicts)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.inequality_id,
            "C_emp": list(self.c_values),
            "verdicts": list(self.verdicts),
            "spread": self.spread,
            "all_hold": self.all_hold,
        }


def family_statistic(reports: Sequence[InequalityReport]) -> FamilyStatistic:
    if not reports:
        raise ValueError("family statistic needs at least one report")
    ids = {r.inequality_id for r in reports}
    if len(ids) != 1:
        raise ValueError(f"reports mix inequality ids: {sorted(ids)}")
    return FamilyStatistic(
        inequality_id=reports[0].inequality_id,
        c_values=[math.nan if r.c_emp is None else r.c_emp for r in reports],
        verdicts=[r.verdict for r in reports],
    )
