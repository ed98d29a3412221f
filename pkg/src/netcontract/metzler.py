"""Metzler matrix foundations.

Sign-pattern validation, directed-graph classification (irreducible /
completely reducible / other), spectral abscissa and Perron pairs via power
iteration, and matrix measures (logarithmic norms) with optional diagonal
scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Off-diagonal magnitudes below this are structural zeros: numerical noise
# must neither fabricate graph edges nor flag a Metzler violation.
STRUCTURAL_ZERO = 1e-14

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000

NOT_METZLER = "not_metzler"
IRREDUCIBLE = "irreducible"
COMPLETELY_REDUCIBLE = "completely_reducible"
REDUCIBLE_OTHER = "reducible_other"


class NonIrreducibleError(ValueError):
    """Operation defined for irreducible Metzler matrices got something else."""


class NoConvergenceError(RuntimeError):
    """Iteration cap was hit before the requested residual was reached."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _as_square(A) -> np.ndarray:
    M = A.entries if isinstance(A, MetzlerMatrix) else np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M


def _off_diagonal_min(M: np.ndarray) -> float:
    n = M.shape[0]
    if n == 1:
        return 0.0
    return float(M[~np.eye(n, dtype=bool)].min())


def _adjacency(M: np.ndarray) -> list[list[int]]:
    # Edge j -> i whenever entry (i, j) is structurally positive.  The SCC
    # partition does not depend on the orientation convention.
    n = M.shape[0]
    mask = M > STRUCTURAL_ZERO
    np.fill_diagonal(mask, False)
    return [np.flatnonzero(mask[:, j]).tolist() for j in range(n)]


def _scc(adj: list[list[int]]) -> list[list[int]]:
    """Strongly connected components (iterative Tarjan), each sorted."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, ei = work[-1]
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            edges = adj[v]
            while ei < len(edges):
                w = edges[ei]
                ei += 1
                if index[w] == -1:
                    work[-1] = (v, ei)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
    return comps


@dataclass(frozen=True)
class Classification:
    """Graph classification of a square matrix.

    ``blocks`` holds the index sets of the irreducible diagonal blocks and is
    populated only for completely reducible matrices.
    """

    kind: str
    blocks: tuple[tuple[int, ...], ...] | None = None

    def __str__(self) -> str:
        if self.kind == COMPLETELY_REDUCIBLE:
            return f"{self.kind}({len(self.blocks)} blocks)"
        return self.kind


def classify(A) -> Classification:
    """Classify the sign/graph structure of a square matrix.

    Total function: non-Metzler input yields kind ``"not_metzler"`` rather
    than an error.  A matrix is completely reducible when no edge joins two
    distinct strongly connected components, i.e. it is block-diagonal over
    its components up to a symmetric permutation.
    """
    M = _as_square(A)
    n = M.shape[0]
    if _off_diagonal_min(M) < -STRUCTURAL_ZERO:
        return Classification(NOT_METZLER)
    comps = _scc(_adjacency(M))
    if len(comps) == 1:
        return Classification(IRREDUCIBLE)
    comp_of = np.empty(n, dtype=int)
    for k, comp in enumerate(comps):
        comp_of[comp] = k
    mask = M > STRUCTURAL_ZERO
    np.fill_diagonal(mask, False)
    rows, cols = np.nonzero(mask)
    if np.any(comp_of[rows] != comp_of[cols]):
        return Classification(REDUCIBLE_OTHER)
    blocks = tuple(tuple(c) for c in sorted(comps, key=lambda c: c[0]))
    return Classification(COMPLETELY_REDUCIBLE, blocks)


class MetzlerMatrix:
    """Immutable dense square matrix with a validated Metzler sign pattern.

    Off-diagonal entries must be nonnegative up to ``STRUCTURAL_ZERO`` noise.
    The graph classification is computed on first use and cached.
    """

    def __init__(self, entries):
        M = np.array(entries, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {M.shape}")
        if _off_diagonal_min(M) < -STRUCTURAL_ZERO:
            raise ValueError("not a Metzler matrix: negative off-diagonal entry")
        M.setflags(write=False)
        self.entries = M

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def classification(self) -> Classification:
        return classify(self.entries)

    def __repr__(self) -> str:
        return f"MetzlerMatrix(n={self.n}, {self.classification})"


def _metzler_classified(A) -> tuple[np.ndarray, Classification]:
    if isinstance(A, MetzlerMatrix):
        return A.entries, A.classification
    M = _as_square(A)
    cls = classify(M)
    if cls.kind == NOT_METZLER:
        raise ValueError("not a Metzler matrix: negative off-diagonal entry")
    return M, cls


@dataclass(frozen=True)
class PerronPair:
    abscissa: float
    eigenvector: np.ndarray


def perron_pair(A, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> PerronPair:
    """Spectral abscissa and positive eigenvector of an irreducible Metzler matrix.

    Power iteration on A + rI with r = 1 + max|a_ii|; the shift makes the
    iteration matrix primitive, so the positive start vector always overlaps
    the Perron direction.  The returned eigenvector has first entry 1 and
    satisfies ||A d - alpha d||_inf <= tol * ||d||_inf.
    """
    M, cls = _metzler_classified(A)
    if cls.kind != IRREDUCIBLE:
        raise NonIrreducibleError(
            f"perron_pair requires an irreducible Metzler matrix, got {cls.kind}")
    n = M.shape[0]
    if n == 1:
        return PerronPair(float(M[0, 0]), np.ones(1))
    shift = 1.0 + float(np.max(np.abs(np.diag(M))))
    S = M + shift * np.eye(n)
    v = np.full(n, 1.0 / n)
    residual = np.inf
    lam = 0.0
    for _ in range(max_iter):
        Sv = S @ v
        lam = float(v @ Sv) / float(v @ v)
        residual = float(np.max(np.abs(Sv - lam * v))) / float(np.max(v))
        if residual <= tol:
            break
        v = Sv / np.linalg.norm(Sv)
    else:
        raise NoConvergenceError(
            f"Perron iteration did not reach residual {tol:g} within {max_iter} "
            f"iterations (current residual {residual:.3e})", residual)
    return PerronPair(lam - shift, v / v[0])


def spectral_abscissa(A, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Largest real part among the eigenvalues of a Metzler matrix.

    Exact for any Metzler matrix: a symmetric permutation to block-triangular
    form over the strongly connected components leaves the spectrum the union
    of the diagonal blocks' spectra, and each block is irreducible.
    """
    M, cls = _metzler_classified(A)
    if cls.kind == IRREDUCIBLE:
        return perron_pair(M, tol=tol, max_iter=max_iter).abscissa
    if cls.blocks is not None:
        comps = [list(b) for b in cls.blocks]
    else:
        comps = _scc(_adjacency(M))
    best = -np.inf
    for comp in comps:
        if len(comp) == 1:
            best = max(best, float(M[comp[0], comp[0]]))
        else:
            sub = M[np.ix_(comp, comp)]
            best = max(best, perron_pair(sub, tol=tol, max_iter=max_iter).abscissa)
    return best


_NORM_ALIASES = {
    "one": "one", "1": "one",
    "two": "two", "2": "two",
    "inf": "inf", "infinity": "inf",
}


def norm_kind(norm) -> str:
    """Normalize a norm selector (1/2/inf, numeric or string) to a canonical name."""
    if isinstance(norm, str):
        key = norm.strip().lower()
    elif norm == 1:
        key = "one"
    elif norm == 2:
        key = "two"
    elif norm == np.inf:
        key = "inf"
    else:
        key = None
    if key not in _NORM_ALIASES:
        raise ValueError(f"unknown norm {norm!r}; expected one of 1, 2, inf")
    return _NORM_ALIASES[key]


def dominant_symmetric_eigenvalue(S, tol: float = DEFAULT_TOL,
                                  max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Largest eigenvalue of a symmetric matrix by shifted power iteration.

    The shift 1 + n*max|s_ij| makes the iterate positive semidefinite, so the
    dominant eigenvalue in magnitude is the one sought.  The start vector is
    drawn from a fixed-seed generator: deterministic, and (unlike the all-ones
    vector) never orthogonal to the top eigenspace in practice.  If the cap is
    hit the current Rayleigh quotient (a lower bound) is returned.
    """
    S = _as_square(S)
    n = S.shape[0]
    if n == 1:
        return float(S[0, 0])
    shift = 1.0 + n * float(np.max(np.abs(S)))
    G = S + shift * np.eye(n)
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        Gv = G @ v
        lam = float(v @ Gv)
        if np.linalg.norm(Gv - lam * v) <= tol:
            break
        v = Gv / np.linalg.norm(Gv)
    return lam - shift


def matrix_measure(A, norm="two", scaling=None, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Matrix measure (logarithmic norm) of a square matrix.

    mu_1 is the worst column (diagonal entry plus off-diagonal absolute
    column sum), mu_inf the row analogue, mu_2 the largest eigenvalue of the
    symmetric part.  A positive diagonal scaling t computes the measure of
    T A T^{-1} with T = diag(t).
    """
    M = _as_square(A)
    if scaling is not None:
        t = np.asarray(scaling, dtype=float).ravel()
        if t.shape[0] != M.shape[0]:
            raise ValueError(
                f"scaling has length {t.shape[0]}, expected {M.shape[0]}")
        if np.any(t <= 0):
            raise ValueError("scaling must be strictly positive")
        M = M * (t[:, None] / t[None, :])
    kind = norm_kind(norm)
    d = np.diag(M)
    if kind == "one":
        return float(np.max(d + np.abs(M).sum(axis=0) - np.abs(d)))
    if kind == "inf":
        return float(np.max(d + np.abs(M).sum(axis=1) - np.abs(d)))
    return dominant_symmetric_eigenvalue((M + M.T) / 2.0, tol=tol, max_iter=max_iter)
