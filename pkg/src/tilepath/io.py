"""Matrix and vector files.

Two formats are understood:

* CSV, row-major, comma separated, no header;
* ``TPTH`` binary: the magic bytes ``b"TPTH"``, then ``rows`` and ``cols`` as
  little-endian ``uint32``, then ``rows * cols`` little-endian ``float64``
  values in row-major order.

Readers detect the binary format by its magic bytes, not by file extension.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"TPTH"
_HEADER = struct.Struct("<4sII")


def read_matrix(path) -> np.ndarray:
    """Read a 2-D array from CSV or TPTH."""
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return _read_binary(path)
    data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    return data


def read_vector(path) -> np.ndarray:
    """Read a vector stored as a single row or a single column."""
    data = read_matrix(path)
    if data.ndim == 2 and min(data.shape) != 1:
        raise ValueError(f"{path}: expected a vector, got shape {data.shape}")
    return data.reshape(-1)


def write_matrix(path, data, fmt: str = "csv") -> None:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    path = Path(path)
    if fmt == "csv":
        np.savetxt(path, data, delimiter=",", fmt="%.17g")
    elif fmt == "tpth":
        rows, cols = data.shape
        with path.open("wb") as fh:
            fh.write(_HEADER.pack(MAGIC, rows, cols))
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


def _read_binary(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated TPTH header")
    _, rows, cols = _HEADER.unpack_from(raw)
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for {rows}x{cols}, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return data.reshape(rows, cols).astype(float)
