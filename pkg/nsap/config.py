from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


@dataclass(frozen=True)
class NsapSettings:
    threads: int | None
    runs_dir: Path
    log_level: str

    @classmethod
    def from_env(cls) -> "NsapSettings":
        load_dotenv(override=False)

        threads_raw = os.getenv("NSAP_THREADS", "").strip()
        threads: int | None = None
        if threads_raw:
            try:
                threads = int(threads_raw)
            except ValueError as exc:
                raise ValueError(f"NSAP_THREADS must be an integer, got {threads_raw!r}") from exc
            if threads <= 0:
                raise ValueError("NSAP_THREADS must be > 0")

        runs_dir_raw = os.getenv("NSAP_RUNS_DIR", "runs").strip() or "runs"

        log_level = os.getenv("NSAP_LOG_LEVEL", "INFO").strip().upper() or "INFO"
        if log_level not in _LOG_LEVELS:
            raise ValueError(f"NSAP_LOG_LEVEL must be one of {sorted(_LOG_LEVELS)}, got {log_level!r}")

        return cls(threads=threads, runs_dir=Path(runs_dir_raw), log_level=log_level)

    def fft_workers(self) -> int:
        # scipy.fft treats -1 as "all cores"
        return self.threads if self.threads is not None else -1

    def configure_logging(self) -> None:
        logging.basicConfig(
            level=getattr(logging, self.log_level),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
