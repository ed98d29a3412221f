"""Diagonal similarity scaling of Metzler matrices to balanced form.

A square matrix is balanced when every row's off-diagonal sum equals the
matching column's off-diagonal sum.  Irreducible (and completely reducible)
Metzler matrices admit a positive diagonal D with D^{-1} A D balanced; it is
found by Osborne-style cyclic updates, which monotonically decrease the
potential f(d) = sum_ij a_ij d_j / d_i.  The potential is convex in log d and
its minimizers are exactly the balancing scalings, which makes it a cheap
independent optimality oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from netcontract.metzler import (
    COMPLETELY_REDUCIBLE,
    DEFAULT_TOL,
    IRREDUCIBLE,
    STRUCTURAL_ZERO,
    _as_square,
    _metzler_classified,
    _off_diagonal_min,
)

MAX_SWEEPS = 100_000

# Scaling entries are clamped to this range to prevent overflow on badly
# conditioned input; hitting the clamp is surfaced via BalancingResult.clamped.
SCALING_CLAMP = (1e-150, 1e150)


class NotBalancableError(ValueError):
    """No positive diagonal similarity can balance this matrix
    (reducible but not completely reducible)."""


class BalanceConvergenceError(RuntimeError):
    """Sweep cap exceeded; carries the last imbalance as ``residual``."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class BalancingResult:
    d: np.ndarray
    balanced: np.ndarray
    iterations: int
    residual: float
    clamped: bool = False


def imbalance(A) -> float:
    """Normalized worst mismatch between off-diagonal row and column sums.

    Zero exactly when the matrix is balanced; the denominator 1 + max_i
    (|r_i| + |c_i|) makes the figure scale-free.
    """
    M = _as_square(A)
    off = M.copy()
    np.fill_diagonal(off, 0.0)
    r = off.sum(axis=1)
    c = off.sum(axis=0)
    return float(np.max(np.abs(r - c)) / (1.0 + np.max(np.abs(r) + np.abs(c))))


def _imbalance_off(off: np.ndarray) -> float:
    r = off.sum(axis=1)
    c = off.sum(axis=0)
    return float(np.max(np.abs(r - c)) / (1.0 + np.max(np.abs(r) + np.abs(c))))


def _balance_block(M: np.ndarray, tol: float, max_sweeps: int,
                   d0: np.ndarray) -> tuple[np.ndarray, int, bool]:
    n = M.shape[0]
    if n == 1:
        return np.ones(1), 0, False
    off = M.copy()
    np.fill_diagonal(off, 0.0)
    d = np.asarray(d0, dtype=float).copy()
    lo, hi = SCALING_CLAMP
    clamped = False
    residual = np.inf
    for sweep in range(max_sweeps):
        residual = _imbalance_off(off * (d[None, :] / d[:, None]))
        if residual <= tol:
            return d, sweep, clamped
        for i in range(n):
            r = float(off[i, :] @ d) / d[i]
            c = float(off[:, i] @ (1.0 / d)) * d[i]
            if r <= 0.0 or c <= 0.0:
                continue
            di = d[i] * np.sqrt(r / c)
            if di < lo or di > hi:
                di = min(max(di, lo), hi)
                clamped = True
            d[i] = di
    raise BalanceConvergenceError(
        f"balancing did not reach imbalance {tol:g} within {max_sweeps} sweeps "
        f"(current imbalance {residual:.3e})", residual)


def balance(A, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS,
            d0=None) -> BalancingResult:
    """Find d > 0 such that D^{-1} A D is balanced (D = diag(d), d[0] = 1).

    Osborne cyclic updates d_i <- d_i * sqrt(r_i / c_i) equalize the i-th
    off-diagonal row and column sums one coordinate at a time.  Completely
    reducible input is balanced block by block (each block's leading scaling
    entry is normalized to 1).  Convergence means imbalance <= tol; exceeding
    ``max_sweeps`` raises BalanceConvergenceError with the last residual.
    """
    M, cls = _metzler_classified(A)
    n = M.shape[0]
    if cls.kind == IRREDUCIBLE:
        blocks = [list(range(n))]
    elif cls.kind == COMPLETELY_REDUCIBLE:
        blocks = [list(b) for b in cls.blocks]
    else:
        raise NotBalancableError(
            f"matrix is {cls.kind}: balancing requires an irreducible or "
            "completely reducible Metzler matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if d0 is None:
        start = np.ones(n)
    else:
        start = np.asarray(d0, dtype=float).ravel()
        if start.shape[0] != n:
            raise ValueError(f"d0 has length {start.shape[0]}, expected {n}")
        if np.any(start <= 0):
            raise ValueError("d0 must be strictly positive")
    d = np.ones(n)
    iterations = 0
    clamped = False
    for block in blocks:
        bd, sweeps, bclamped = _balance_block(
            M[np.ix_(block, block)], tol, max_sweeps, start[block])
        d[block] = bd / bd[0]
        iterations += sweeps
        clamped |= bclamped
    balanced = M * (d[None, :] / d[:, None])
    return BalancingResult(d=d, balanced=balanced, iterations=iterations,
                           residual=imbalance(balanced), clamped=clamped)


def tridiagonal_bands(A) -> tuple[np.ndarray, np.ndarray]:
    """Sub- and super-diagonal of an irreducible tridiagonal Metzler matrix.

    Raises if the matrix has entries outside the three bands, a negative
    off-diagonal entry, or a zero on the sub/super-diagonal (which would make
    it reducible).
    """
    M = _as_square(A)
    if _off_diagonal_min(M) < -STRUCTURAL_ZERO:
        raise ValueError("not a Metzler matrix: negative off-diagonal entry")
    n = M.shape[0]
    band = np.tril(np.triu(M, -1), 1)
    if n > 2 and float(np.max(np.abs(M - band))) > STRUCTURAL_ZERO:
        raise ValueError("matrix has entries outside the tridiagonal bands")
    if n == 1:
        return np.empty(0), np.empty(0)
    sub = np.diag(M, -1).astype(float)
    sup = np.diag(M, 1).astype(float)
    if float(np.min(sub)) <= STRUCTURAL_ZERO or float(np.min(sup)) <= STRUCTURAL_ZERO:
        raise ValueError(
            "zero sub- or super-diagonal entry: tridiagonal matrix is reducible")
    return sub, sup


def balance_tridiagonal(A) -> np.ndarray:
    """Closed-form balancing scaling for an irreducible tridiagonal Metzler matrix.

    d_1 = 1 and d_i = sqrt(prod_{j<i} a_{j+1,j} / a_{j,j+1}); the scaled
    matrix D^{-1} A D is symmetric, hence balanced.
    """
    M = _as_square(A)
    sub, sup = tridiagonal_bands(M)
    if M.shape[0] == 1:
        return np.ones(1)
    return np.concatenate(([1.0], np.sqrt(np.cumprod(sub / sup))))


def potential(A, d) -> float:
    """Balancing potential f(d) = sum_ij a_ij d_j / d_i (d > 0)."""
    M = _as_square(A)
    dd = np.asarray(d, dtype=float).ravel()
    if dd.shape[0] != M.shape[0]:
        raise ValueError(f"d has length {dd.shape[0]}, expected {M.shape[0]}")
    if np.any(dd <= 0):
        raise ValueError("d must be strictly positive")
    return float((M * (dd[None, :] / dd[:, None])).sum())
