"""Matrix file I/O: plain CSV and the RADM binary format.

CSV: comma-separated, one row per line, decimal points, no header.
Values are written with 17 significant digits so float64 round-trips.

Binary: magic bytes ``RADM``, then rows and cols as little-endian
unsigned 64-bit integers, then the entries as little-endian float64 in
row-major order.  Reading a binary file back is bit-exact.
"""

import struct

import numpy as np

from .errors import DataFormatError
from .linalg import as_matrix

__all__ = [
    "MAGIC",
    "read_matrix",
    "read_matrix_csv",
    "read_matrix_binary",
    "write_matrix_csv",
    "write_matrix_binary",
]

MAGIC = b"RADM"
_HEADER = struct.Struct("<QQ")


def write_matrix_csv(m, path):
    m = as_matrix(m)
    np.savetxt(path, m, delimiter=",", fmt="%.17g")


def read_matrix_csv(path):
    with open(path, "rb") as fh:
        if not fh.read(4096).strip():
            raise DataFormatError(f"{path}: empty matrix file")
    try:
        m = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise DataFormatError(f"{path}: not a numeric CSV matrix: {exc}") from exc
    if m.size == 0:
        raise DataFormatError(f"{path}: empty matrix file")
    if not np.isfinite(m).all():
        raise DataFormatError(f"{path}: non-finite entries in matrix file")
    return m


def write_matrix_binary(m, path):
    m = as_matrix(m)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(m.shape[0], m.shape[1]))
        fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def read_matrix_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise DataFormatError(
                f"{path}: bad magic bytes {magic!r}, expected {MAGIC!r}"
            )
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise DataFormatError(f"{path}: truncated header")
        rows, cols = _HEADER.unpack(header)
        if rows < 1 or cols < 1:
            raise DataFormatError(f"{path}: invalid dimensions {rows}x{cols}")
        data = fh.read(8 * rows * cols)
        if len(data) != 8 * rows * cols:
            raise DataFormatError(
                f"{path}: expected {8 * rows * cols} bytes of entries,"
                f" got {len(data)}"
            )
        if fh.read(1):
            raise DataFormatError(f"{path}: trailing bytes after matrix data")
    m = np.frombuffer(data, dtype="<f8").reshape(rows, cols).astype(np.float64)
    if not np.isfinite(m).all():
        raise DataFormatError(f"{path}: non-finite entries in matrix file")
    return m


def read_matrix(path):
    """Read a matrix file, sniffing the binary magic, else parsing as CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_matrix_binary(path)
    return read_matrix_csv(path)
