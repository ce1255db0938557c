"""Matrix/vector text files, the binary sweep-operator cache, PGM images and CSV traces.

All writers go through a temp file in the destination directory followed by
``os.replace`` so a crashed run never leaves a half-written output behind.
"""

from __future__ import annotations

import csv
import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np
import scipy.io

from .linalg import as_matrix, as_vector, frozen
from .row_action import SweepOperator, sweep_identity_residual

CACHE_MAGIC = b"KZTANABE"
CACHE_VERSION = 1
_HEADER = struct.Struct("<8sQQQ")
_MAX_DIM = 1 << 20


class CacheError(ValueError):
    """Corrupt, truncated or stale operator cache."""


def atomic_write(path, data: bytes | str) -> None:
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


# --- MatrixMarket -----------------------------------------------------------


def write_matrix(path, a, fmt: str = "auto") -> None:
    """Write a MatrixMarket file, ``array`` (column-major) or ``coordinate``.

    ``auto`` picks coordinate storage when fewer than a quarter of the
    entries are nonzero. Values use shortest round-trip decimal text.
    """
    a = as_matrix(a)
    m, n = a.shape
    if fmt == "auto":
        fmt = "coordinate" if np.count_nonzero(a) < 0.25 * a.size else "array"
    buf = io.StringIO()
    if fmt == "array":
        buf.write("%%MatrixMarket matrix array real general\n")
        buf.write(f"{m} {n}\n")
        for v in a.ravel(order="F"):
            buf.write(_fmt(v) + "\n")
    elif fmt == "coordinate":
        cols, rows = np.nonzero(a.T)
        buf.write("%%MatrixMarket matrix coordinate real general\n")
        buf.write(f"{m} {n} {rows.size}\n")
        for i, j in zip(rows, cols):
            buf.write(f"{i + 1} {j + 1} {_fmt(a[i, j])}\n")
    else:
        raise ValueError(f"unknown MatrixMarket format {fmt!r}")
    atomic_write(path, buf.getvalue())


def read_matrix(path) -> np.ndarray:
    """Read a MatrixMarket file in either storage format."""
    m = scipy.io.mmread(str(path))
    if hasattr(m, "toarray"):
        m = m.toarray()
    return as_matrix(m, str(path))


def write_vector(path, v) -> None:
    v = as_vector(v)
    lines = [str(v.size)] + [_fmt(x) for x in v]
    atomic_write(path, "\n".join(lines) + "\n")


def read_vector(path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if not tokens:
        raise ValueError(f"{path}: empty vector file")
    count = int(tokens[0])
    if len(tokens) - 1 != count:
        raise ValueError(f"{path}: header announces {count} values, found {len(tokens) - 1}")
    return as_vector([float(t) for t in tokens[1:]], str(path))


# --- operator cache -----------------------------------------------------------


def save_operator(op: SweepOperator, path) -> None:
    m, n = op.source_dims
    parts = [_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, m, n)]
    for arr in (op.row_norms_sq, op.m_diag, op.a_s_t, op.q):
        parts.append(np.asarray(arr, dtype="<f8").tobytes(order="F"))
    atomic_write(path, b"".join(parts))


def load_operator(path, a) -> SweepOperator:
    """Load a cached operator and check it against ``a`` before returning it."""
    a = as_matrix(a, "A")
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CacheError(f"{path}: corrupt header (file has {len(raw)} bytes)")
    magic, version, m, n = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise CacheError(f"{path}: corrupt header (bad magic {magic!r})")
    if version != CACHE_VERSION:
        raise CacheError(f"{path}: unsupported cache version {version}")
    if not (0 < m <= _MAX_DIM and 0 < n <= _MAX_DIM):
        raise CacheError(f"{path}: dimension overflow ({m} x {n})")
    if (m, n) != a.shape:
        raise CacheError(f"{path}: operator built for a {m}x{n} matrix, expected {a.shape[0]}x{a.shape[1]}")
    expected = _HEADER.size + 8 * (2 * m + n * m + n * n)
    if len(raw) != expected:
        raise CacheError(f"{path}: truncated or padded payload ({len(raw)} bytes, expected {expected})")

    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    row_norms_sq, m_diag = data[:m].copy(), data[m : 2 * m].copy()
    a_s_t = data[2 * m : 2 * m + n * m].reshape((n, m), order="F").copy()
    q = data[2 * m + n * m :].reshape((n, n), order="F").copy()
    op = SweepOperator(frozen(q), frozen(a_s_t), frozen(m_diag), frozen(row_norms_sq))

    defect = sweep_identity_residual(op, a)
    if not defect <= 1e-10 * n:
        raise CacheError(f"{path}: cached operator does not match A (identity defect {defect:.3e})")
    return op


# --- images and traces --------------------------------------------------------


def pgm_bytes(v, n: int) -> bytes:
    """8-bit binary PGM with linear min-max scaling; a constant image maps to 0."""
    v = as_vector(v)
    if v.size != n * n:
        raise ValueError(f"image vector has {v.size} entries, expected {n * n}")
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        gray = np.rint((v - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        gray = np.zeros(v.size, dtype=np.uint8)
    return f"P5\n{n} {n}\n255\n".encode() + gray.tobytes()


def write_image_pgm(v, n: int, path) -> None:
    atomic_write(path, pgm_bytes(v, n))


def read_pgm(path) -> tuple[int, int, np.ndarray]:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = map(int, parts[1].split())
    return w, h, np.frombuffer(parts[3], dtype=np.uint8)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if x is None else (_fmt(x) if isinstance(x, (float, np.floating)) else x) for x in row])
    return buf.getvalue()


def read_csv_columns(path) -> dict[str, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols: dict[str, list[str]] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for key, val in row.items():
                cols[key].append(val)
    return cols
