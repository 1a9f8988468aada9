from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from nsap.errors import CheckpointFormatError
from nsap.spectral.checkpoint import HEADER_DTYPE, read_checkpoint, write_checkpoint
from nsap.spectral.fields import VectorField


def test_checkpoint_round_trip_is_bit_exact(tmp_path: Path, random_field3: VectorField) -> None:
    path = write_checkpoint(tmp_path / "snap.nsap", random_field3, 0.125)
    u, t = read_checkpoint(path)
    assert t == 0.125
    assert u.grid == random_field3.grid
    assert u.solenoidal
    np.testing.assert_array_equal(u.values, random_field3.values)


def test_checkpoint_size_matches_layout(tmp_path: Path, random_field3: VectorField) -> None:
    path = write_checkpoint(tmp_path / "snap.nsap", random_field3, 0.0)
    grid = random_field3.grid
    assert path.stat().st_size == HEADER_DTYPE.itemsize + grid.dim * grid.point_count * 8


def test_bad_magic_is_rejected(tmp_path: Path, random_field3: VectorField) -> None:
    path = write_checkpoint(tmp_path / "snap.nsap", random_field3, 0.0)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointFormatError, match="magic"):
        read_checkpoint(path)


def test_truncated_payload_is_rejected(tmp_path: Path, random_field3: VectorField) -> None:
    path = write_checkpoint(tmp_path / "snap.nsap", random_field3, 0.0)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointFormatError, match="payload"):
        read_checkpoint(path)


def test_short_file_is_rejected(tmp_path: Path) -> None:
    path = tmp_path / "empty.nsap"
    path.write_bytes(b"NSAP")
    with pytest.raises(CheckpointFormatError):
        read_checkpoint(path)
