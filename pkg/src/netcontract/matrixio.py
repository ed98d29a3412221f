"""Matrix and vector file I/O.

Reads Matrix Market files (coordinate or array format, sniffed from the
``%%MatrixMarket`` banner) and headerless CSV.  Writes CSV with 17
significant digits so float64 values survive a round trip bit for bit.
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse

CSV_FLOAT_FMT = "%.17g"


def read_matrix(path) -> np.ndarray:
    """Load a dense 2-D array from a Matrix Market or CSV file."""
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.readline()
    if head.startswith("%%MatrixMarket"):
        M = scipy.io.mmread(path)
        if scipy.sparse.issparse(M):
            M = M.toarray()
        return np.asarray(M, dtype=float)
    return np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)


def read_vector(path) -> np.ndarray:
    """Load a 1-D array: a single CSV row or column, or an n-by-1/1-by-n matrix."""
    M = read_matrix(path)
    if 1 in M.shape:
        return M.ravel()
    raise ValueError(
        f"{path}: expected a vector (one row or one column), got shape {M.shape}")


def write_matrix_csv(path, M) -> None:
    """Write an array as headerless CSV; 1-D input becomes a single row."""
    np.savetxt(path, np.atleast_2d(np.asarray(M, dtype=float)),
               delimiter=",", fmt=CSV_FLOAT_FMT)


def write_vector_csv(path, v) -> None:
    """Write a 1-D array as a single CSV column."""
    arr = np.asarray(v, dtype=float).ravel()
    np.savetxt(path, arr[:, None], delimiter=",", fmt=CSV_FLOAT_FMT)
