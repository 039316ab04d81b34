"""Dense-matrix file I/O: a small binary container plus a CSV alternative.

Binary layout (all little-endian)::

    magic   4 bytes  b"DMAT"
    version u32      currently 1
    rows    u64
    cols    u64
    data    rows * cols float64, row-major

CSV files hold one row per line with ``%.17g`` formatting, which round-trips
float64 exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidParameterError

MATRIX_MAGIC = b"DMAT"
MATRIX_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def _as_matrix(m) -> np.ndarray:
    arr = np.ascontiguousarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidParameterError("matrix must be 2-D")
    return arr


def matrix_to_bytes(m) -> bytes:
    arr = _as_matrix(m)
    header = _HEADER.pack(MATRIX_MAGIC, MATRIX_VERSION, arr.shape[0], arr.shape[1])
    return header + arr.astype("<f8").tobytes(order="C")


def matrix_from_bytes(buf: bytes) -> np.ndarray:
    if len(buf) < _HEADER.size:
        raise FormatError("matrix container truncated before header")
    magic, version, rows, cols = _HEADER.unpack_from(buf)
    if magic != MATRIX_MAGIC:
        raise FormatError(f"bad matrix magic {magic!r}")
    if version != MATRIX_VERSION:
        raise FormatError(f"unsupported matrix container version {version}")
    want = _HEADER.size + 8 * rows * cols
    if len(buf) != want:
        raise FormatError(f"matrix payload has {len(buf)} bytes, expected {want}")
    data = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size)
    return data.reshape(rows, cols).astype(np.float64)


def save_matrix_binary(path, m) -> None:
    Path(path).write_bytes(matrix_to_bytes(m))


def load_matrix_binary(path) -> np.ndarray:
    return matrix_from_bytes(Path(path).read_bytes())


def save_matrix_csv(path, m) -> None:
    np.savetxt(path, _as_matrix(m), fmt="%.17g", delimiter=",")


def load_matrix_csv(path) -> np.ndarray:
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"malformed CSV matrix: {exc}") from exc
    return arr


def save_matrix(path, m) -> None:
    """Write CSV when the suffix is .csv, the binary container otherwise."""
    if Path(path).suffix.lower() == ".csv":
        save_matrix_csv(path, m)
    else:
        save_matrix_binary(path, m)


def load_matrix(path) -> np.ndarray:
    if Path(path).suffix.lower() == ".csv":
        return load_matrix_csv(path)
    return load_matrix_binary(path)
