"""Flat binary vector files exchanged with compiled model harnesses.

Layout, all little-endian:

    bytes 0..3   magic "TNNV"
    bytes 4..7   u32 vector count (may be zero)
    bytes 8..11  u32 floats per vector (>= 1)
    then         count * length float32 values
    then         optional u64 trailer: median wall time per inference, ns

Nothing else is permitted; any other size is an error.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import VectorFileError

MAGIC = b"TNNV"
_HEADER = struct.Struct("<4sII")
_TRAILER = struct.Struct("<Q")


def write_vectors(path: str | Path, vectors: np.ndarray, median_ns: int | None = None) -> Path:
    path = Path(path)
    arr = np.asarray(vectors, dtype="<f4")
    if arr.ndim != 2:
        raise VectorFileError(f"vectors must be 2-D (count, length), got shape {arr.shape}")
    count, length = arr.shape
    if length < 1:
        raise VectorFileError("vector length must be >= 1")
    parts = [_HEADER.pack(MAGIC, count, length), arr.tobytes()]
    if median_ns is not None:
        if median_ns < 0:
            raise VectorFileError("median nanoseconds must be non-negative")
        parts.append(_TRAILER.pack(int(median_ns)))
    path.write_bytes(b"".join(parts))
    return path


def read_vectors(path: str | Path) -> tuple[np.ndarray, int | None]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise VectorFileError(f"cannot read {path}: {exc}") from None
    if len(data) < _HEADER.size:
        raise VectorFileError(f"{path}: truncated header ({len(data)} bytes)")
    magic, count, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise VectorFileError(f"{path}: bad magic {magic!r}")
    if length < 1:
        raise VectorFileError(f"{path}: vector length must be >= 1, got {length}")
    payload = 4 * count * length
    extra = len(data) - _HEADER.size - payload
    if extra not in (0, _TRAILER.size):
        raise VectorFileError(
            f"{path}: expected {payload} payload bytes plus optional 8-byte trailer, "
            f"file holds {len(data) - _HEADER.size}"
        )
    flat = np.frombuffer(data, dtype="<f4", count=count * length, offset=_HEADER.size)
    vectors = flat.reshape(count, length).copy()
    median_ns = None
    if extra == _TRAILER.size:
        (median_ns,) = _TRAILER.unpack_from(data, _HEADER.size + payload)
    return vectors, median_ns
