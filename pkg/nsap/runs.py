"""Run directory layout."""

from __future__ import annotations

import datetime as dt
import secrets
from pathlib import Path

RUN_SUBDIRS = ("checkpoints", "reports")
HASH_CHARS = 8


def run_dir_name(name: str, scenario_hash: str, now: dt.datetime | None = None) -> str:
    """``<name>_<hash8>_<UTC stamp>_<4 hex>``: runs of one scenario sort together by time."""
    stamp = (now or dt.datetime.now(dt.timezone.utc)).astimezone(dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    return f"{name}_{scenario_hash[:HASH_CHARS]}_{stamp}_{secrets.token_hex(2)}"


def new_run_dir(name: str, scenario_hash: str, base_dir: str | Path = "runs") -> Path:
    """Create a fresh auto-named run directory under ``base_dir``; never reuses one."""
    base = Path(base_dir)
    base.mkdir(parents=True, exist_ok=True)
    while True:
        run_dir = base / run_dir_name(name, scenario_hash)
        try:
            run_dir.mkdir()
        except FileExistsError:
            continue
        return run_dir


def prepare_output_dir(path: str | Path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    for sub in RUN_SUBDIRS:
        (out / sub).mkdir(exist_ok=True)
    return out
