"""Matrix Market reader and a thin writer for dense vector blocks."""

from __future__ import annotations

import os

import numpy as np
import scipy.io
import scipy.sparse as sp

__all__ = ["MatrixMarketError", "read_matrix_market", "write_vectors"]

_FIELDS = {"real", "integer", "pattern"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric"}


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market input; ``lineno`` is 1-based."""

    def __init__(self, msg, lineno=None):
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)
        self.lineno = lineno


def _parse_header(line, lineno):
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket" or tokens[1].lower() != "matrix":
        raise MatrixMarketError(f"malformed header {line.strip()!r}", lineno)
    fmt, fld, sym = (t.lower() for t in tokens[2:])
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unknown format {fmt!r} in header", lineno)
    if fld == "complex":
        raise MatrixMarketError("complex matrices are not supported", lineno)
    if fld not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {fld!r} in header", lineno)
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {sym!r} in header", lineno)
    if fmt == "array" and fld == "pattern":
        raise MatrixMarketError("pattern field is not allowed with array format", lineno)
    return fmt, fld, sym


def _data_lines(lines, start):
    for lineno, line in enumerate(lines[start:], start=start + 1):
        stripped = line.strip()
        if stripped and not stripped.startswith("%"):
            yield lineno, stripped


def read_matrix_market(path) -> sp.csr_matrix:
    """Read a Matrix Market file into a CSR matrix.

    Symmetric and skew-symmetric storage is expanded to the full matrix.
    Array (dense) files are returned in sparse form as well.
    """
    with open(os.fspath(path)) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    fmt, fld, sym = _parse_header(lines[0], 1)
    data = _data_lines(lines, 1)
    try:
        lineno, size_line = next(data)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(lines)) from None
    try:
        dims = [int(tok) for tok in size_line.split()]
    except ValueError:
        raise MatrixMarketError(f"bad size line {size_line!r}", lineno) from None

    if fmt == "coordinate":
        if len(dims) != 3:
            raise MatrixMarketError("coordinate size line needs rows, cols, nnz", lineno)
        nrows, ncols, nnz = dims
        rows, cols, vals = [], [], []
        for lineno, line in data:
            tok = line.split()
            want = 2 if fld == "pattern" else 3
            if len(tok) != want:
                raise MatrixMarketError(f"expected {want} fields, got {len(tok)}", lineno)
            try:
                i, j = int(tok[0]) - 1, int(tok[1]) - 1
                val = 1.0 if fld == "pattern" else float(tok[2])
            except ValueError:
                raise MatrixMarketError(f"cannot parse entry {line!r}", lineno) from None
            if not (0 <= i < nrows and 0 <= j < ncols):
                raise MatrixMarketError(f"index ({i + 1}, {j + 1}) out of range", lineno)
            if sym == "skew-symmetric" and i == j:
                raise MatrixMarketError("diagonal entry in a skew-symmetric file", lineno)
            rows.append(i)
            cols.append(j)
            vals.append(val)
        if len(vals) != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {len(vals)}", len(lines))
    else:
        if len(dims) != 2:
            raise MatrixMarketError("array size line needs rows, cols", lineno)
        nrows, ncols = dims
        if sym == "general":
            positions = [(i, j) for j in range(ncols) for i in range(nrows)]
        elif sym == "symmetric":
            positions = [(i, j) for j in range(ncols) for i in range(j, nrows)]
        else:
            positions = [(i, j) for j in range(ncols) for i in range(j + 1, nrows)]
        rows, cols, vals = [], [], []
        count = 0
        for lineno, line in data:
            if count >= len(positions):
                raise MatrixMarketError("too many values for array", lineno)
            try:
                val = float(line.split()[0])
            except ValueError:
                raise MatrixMarketError(f"cannot parse value {line!r}", lineno) from None
            i, j = positions[count]
            count += 1
            if val != 0.0:
                rows.append(i)
                cols.append(j)
                vals.append(val)
        if count != len(positions):
            raise MatrixMarketError(f"expected {len(positions)} values, found {count}", len(lines))

    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    if sym != "general":
        if nrows != ncols:
            raise MatrixMarketError(f"{sym} matrix must be square", 1)
        off = rows != cols
        sign = -1.0 if sym == "skew-symmetric" else 1.0
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, sign * vals[off]]),
        )
    return sp.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols)).tocsr()


def write_vectors(path, vectors: np.ndarray, comment: str = ""):
    """Write an ``n x p`` block of vectors as a Matrix Market array file at exactly ``path``."""
    # a file handle stops mmwrite from appending ".mtx" to the name
    with open(os.fspath(path), "wb") as fh:
        scipy.io.mmwrite(fh, np.asarray(vectors, dtype=float), comment=comment)
