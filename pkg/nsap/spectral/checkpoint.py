"""Binary checkpoint format.

Layout (little-endian): magic ``b"NSAP"``, u32 version, u32 N, u32 n,
f64 L, f64 t, then the N physical-space component arrays (axis-major,
C order), each ``n**N`` float64 values.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from nsap.errors import CheckpointFormatError
from nsap.spectral.fields import VectorField
from nsap.spectral.grid import make_grid

logger = logging.getLogger(__name__)

MAGIC = b"NSAP"
FORMAT_VERSION = 1

HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("dim", "<u4"),
        ("n", "<u4"),
        ("box_length", "<f8"),
        ("time", "<f8"),
    ]
)


def write_checkpoint(path: str | Path, u: VectorField, t: float) -> Path:
    path = Path(path)
    grid = u.grid
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header[0] = (MAGIC, FORMAT_VERSION, grid.dim, grid.n, grid.box_length, float(t))
    with path.open("wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())
    return path


def read_checkpoint(path: str | Path) -> tuple[VectorField, float]:
    """Return the stored field (marked solenoidal) and its time."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER_DTYPE.itemsize:
        raise CheckpointFormatError(f"{path}: file too short for a checkpoint header")

    header = np.frombuffer(raw[: HEADER_DTYPE.itemsize], dtype=HEADER_DTYPE)[0]
    if bytes(header["magic"]) != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {bytes(header['magic'])!r}")
    if int(header["version"]) != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported format version {int(header['version'])}")

    try:
        grid = make_grid(int(header["dim"]), int(header["n"]), float(header["box_length"]))
    except ValueError as exc:
        raise CheckpointFormatError(f"{path}: invalid grid in header ({exc})") from exc

    expected = grid.dim * grid.point_count * 8
    payload = raw[HEADER_DTYPE.itemsize :]
    if len(payload) != expected:
        raise CheckpointFormatError(f"{path}: expected {expected} payload bytes, found {len(payload)}")

    values = np.frombuffer(payload, dtype="<f8").reshape((grid.dim, *grid.shape)).astype(np.float64)
    t = float(header["time"])
    logger.debug("Loaded checkpoint %s (N=%d, n=%d, t=%g)", path, grid.dim, grid.n, t)
    return VectorField.from_values(grid, values, solenoidal=True), t
