"""Hierarchical contraction bounds for block-partitioned systems.

A partition of the state into blocks, each carrying its own (optionally
diagonally scaled) 1/2/inf norm, induces a composite norm whose matrix
measure is bounded by the measure of a small Metzler matrix B: diagonal
entries are block measures, off-diagonal entries induced norms of the
coupling blocks.  Weighting the outer max norm by a Perron eigenvector of B
turns that bound into the spectral abscissa of B.  Gains for the reduced
model come from the same minimum-effort machinery, plus a closed form for
tridiagonal bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from netcontract.balancing import tridiagonal_bands
from netcontract.metzler import DEFAULT_TOL, _as_square, matrix_measure, norm_kind
from netcontract.stabilization import minimal_effort_stabilize

# Gram power iteration converges at the squared singular-value ratio; a
# generous cap keeps near-tied spectra accurate (typical case needs < 100).
SIGMA_MAX_ITER = 10_000
# Corner enumeration of a box is exponential in the dimension; beyond this
# many corners only the random samples and the center are used.
MAX_CORNERS = 4096


class HypothesisViolatedError(ValueError):
    """The nonnegativity hypothesis J_hat + eta*I >= 0 fails, so the closed
    form may produce nonpositive gains and its optimality guarantee is void."""


@dataclass(frozen=True, eq=False)
class BlockNorm:
    """Norm attached to one block: kind in {"one", "two", "inf"} plus an
    optional positive diagonal scaling applied before the norm is taken."""

    kind: str
    scaling: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", norm_kind(self.kind))
        if self.scaling is not None:
            t = np.asarray(self.scaling, dtype=float).ravel()
            if np.any(t <= 0):
                raise ValueError("block norm scaling must be strictly positive")
            object.__setattr__(self, "scaling", t)


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Contiguous partition of indices 0..n-1 into blocks with attached norms."""

    sizes: tuple[int, ...]
    block_norms: tuple[BlockNorm, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "block_norms", tuple(self.block_norms))
        if not sizes or any(s <= 0 for s in sizes):
            raise ValueError("block sizes must be positive")
        if len(self.block_norms) != len(sizes):
            raise ValueError(
                f"{len(self.block_norms)} norms for {len(sizes)} blocks")
        for size, bn in zip(sizes, self.block_norms):
            if bn.scaling is not None and bn.scaling.shape[0] != size:
                raise ValueError(
                    f"scaling length {bn.scaling.shape[0]} != block size {size}")

    @classmethod
    def uniform(cls, sizes, kind="two") -> "BlockPartition":
        sizes = tuple(int(s) for s in sizes)
        return cls(sizes, tuple(BlockNorm(kind) for _ in sizes))

    @property
    def total(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for s in self.sizes[:-1]:
            out.append(out[-1] + s)
        return tuple(out)

    def slices(self) -> list[slice]:
        return [slice(o, o + s) for o, s in zip(self.offsets, self.sizes)]


@dataclass
class JacobianBound:
    """Entrywise bound on the block-reduced Jacobian.

    ``provenance`` is "closed-form" for bounds valid over the whole domain
    and "sampled" for empirical maxima, which underestimate the supremum and
    therefore do not certify anything by themselves.
    """

    j_hat: np.ndarray
    provenance: str = "closed-form"
    sample_count: int = 0
    domain: tuple | None = None


@dataclass
class GainSynthesisResult:
    v_star: np.ndarray
    rate: float
    cost: float
    closed_loop_abscissa: float


def _vector_norm(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "one":
        return np.abs(x).sum(axis=-1)
    if kind == "inf":
        return np.abs(x).max(axis=-1)
    return np.sqrt((x * x).sum(axis=-1))


_DUAL = {"one": "inf", "inf": "one", "two": "two"}


def _sigma_max(M: np.ndarray, tol: float = DEFAULT_TOL,
               max_iter: int = SIGMA_MAX_ITER) -> float:
    """Largest singular value by power iteration on the Gram matrix."""
    G = M.T @ M
    n = G.shape[0]
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        Gv = G @ v
        lam = float(v @ Gv)
        if np.linalg.norm(Gv - lam * v) <= tol * (1.0 + lam):
            break
        nrm = float(np.linalg.norm(Gv))
        if nrm == 0.0:
            return 0.0
        v = Gv / nrm
    return float(np.sqrt(max(lam, 0.0)))


def operator_norm(M, out_kind="two", in_kind=None, tol: float = DEFAULT_TOL) -> float:
    """Induced norm of a (possibly rectangular) matrix between 1/2/inf spaces.

    Exact formulas: domain norm 1 -> max over columns of the codomain norm;
    codomain norm inf -> max over rows of the domain's dual norm; (2, 2) ->
    largest singular value.  The remaining pairs (inf->1, inf->2, 2->1) have
    no tractable exact formula and raise ValueError.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    out_kind = norm_kind(out_kind)
    in_kind = out_kind if in_kind is None else norm_kind(in_kind)
    if in_kind == "one":
        return float(np.max(_vector_norm(M.T, out_kind)))
    if out_kind == "inf":
        return float(np.max(_vector_norm(M, _DUAL[in_kind])))
    if in_kind == "two" and out_kind == "two":
        return _sigma_max(M, tol=tol)
    raise ValueError(
        f"no tractable exact formula for the {in_kind} -> {out_kind} induced norm")


def _scaled_block(M: np.ndarray, row_norm: BlockNorm, col_norm: BlockNorm) -> np.ndarray:
    out = M
    if row_norm.scaling is not None:
        out = row_norm.scaling[:, None] * out
    if col_norm.scaling is not None:
        out = out / col_norm.scaling[None, :]
    return out


def block_bound_matrix(A, partition: BlockPartition, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Metzler majorant of a matrix over a block partition.

    B[i][i] is the measure of the i-th diagonal block in the block's own
    norm; B[i][j] (i != j) is the induced norm of the coupling block from
    block j's norm to block i's.  The measure of A in the composite norm
    (Perron-weighted outer max) is bounded by the abscissa of B.
    """
    M = _as_square(A)
    if partition.total != M.shape[0]:
        raise ValueError(
            f"partition covers {partition.total} indices, matrix has {M.shape[0]}")
    sl = partition.slices()
    m = len(sl)
    B = np.empty((m, m))
    for i in range(m):
        ni = partition.block_norms[i]
        for j in range(m):
            blk = M[sl[i], sl[j]]
            if i == j:
                B[i, j] = matrix_measure(blk, ni.kind, scaling=ni.scaling, tol=tol)
            else:
                nj = partition.block_norms[j]
                B[i, j] = operator_norm(_scaled_block(blk, ni, nj),
                                        out_kind=ni.kind, in_kind=nj.kind, tol=tol)
    return B


def composite_norm(x, partition: BlockPartition, weights=None) -> np.ndarray:
    """Composite norm max_i |x^i|_i / w_i, batched over leading axes.

    With w a Perron eigenvector of the block bound matrix this is the norm in
    which the hierarchical contraction estimate holds.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != partition.total:
        raise ValueError(
            f"state has dimension {x.shape[-1]}, partition covers {partition.total}")
    m = len(partition.sizes)
    if weights is None:
        w = np.ones(m)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape[0] != m or np.any(w <= 0):
            raise ValueError("weights must be one positive value per block")
    vals = []
    for sl, bn in zip(partition.slices(), partition.block_norms):
        blk = x[..., sl]
        if bn.scaling is not None:
            blk = blk * bn.scaling
        vals.append(_vector_norm(blk, bn.kind))
    return np.max(np.stack(vals, axis=-1) / w, axis=-1)


def jacobian_sup_estimate(sampler, partition: BlockPartition, domain,
                          t_grid=(0.0,), samples: int = 10_000,
                          seed: int = 0) -> JacobianBound:
    """Empirical entrywise maximum of the block bound over a box domain.

    ``sampler(t, x)`` returns the Jacobian at state x and time t.  Evaluation
    points: ``samples`` uniform draws, the box corners (skipped when there
    are more than 4096), and the center, at every t in ``t_grid``.  The
    result is an underestimate of the true supremum and is flagged
    ``"sampled"``.
    """
    lo = np.asarray(domain[0], dtype=float).ravel()
    hi = np.asarray(domain[1], dtype=float).ravel()
    if lo.shape != hi.shape:
        raise ValueError("domain bounds must have matching shapes")
    if np.any(lo > hi):
        raise ValueError("domain lower bound exceeds upper bound")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    dim = lo.shape[0]
    rng = np.random.default_rng(seed)
    points = [rng.uniform(lo, hi, size=(samples, dim)), (lo + hi) / 2.0]
    if 2 ** dim <= MAX_CORNERS:
        points.append(np.array(list(itertools.product(*zip(lo, hi)))))
    points = np.vstack([np.atleast_2d(p) for p in points])
    m = len(partition.sizes)
    j_hat = np.full((m, m), -np.inf)
    for t in t_grid:
        for x in points:
            np.maximum(j_hat, block_bound_matrix(sampler(t, x), partition),
                       out=j_hat)
    return JacobianBound(j_hat, provenance="sampled",
                         sample_count=points.shape[0] * len(t_grid),
                         domain=(lo, hi))


def _unwrap(j_hat) -> np.ndarray:
    if isinstance(j_hat, JacobianBound):
        return _as_square(j_hat.j_hat)
    return _as_square(j_hat)


def _check_hypothesis(J: np.ndarray, eta: float) -> None:
    if eta <= 0:
        raise ValueError("eta must be positive")
    worst = float(np.min(J + eta * np.eye(J.shape[0])))
    if worst < 0:
        raise HypothesisViolatedError(
            f"J_hat + eta*I has a negative entry ({worst:.3g}); the closed form "
            "may produce nonpositive gains, so optimality is not guaranteed")


def synthesize_gains(j_hat, w, eta: float, tol: float = DEFAULT_TOL) -> GainSynthesisResult:
    """Cheapest per-block gains making the reduced bound contract at rate eta.

    Requires J_hat irreducible Metzler and J_hat + eta*I >= 0 elementwise
    (ensuring the gains come out positive); delegates to the minimum-effort
    stabilizer with target -eta.
    """
    J = _unwrap(j_hat)
    _check_hypothesis(J, eta)
    res = minimal_effort_stabilize(J, w, target=-float(eta), tol=tol)
    return GainSynthesisResult(v_star=res.ell_star, rate=float(eta),
                               cost=res.cost, closed_loop_abscissa=res.achieved)


def tridiagonal_gains(j_hat, eta: float) -> np.ndarray:
    """Closed-form uniform-weight gains for a tridiagonal irreducible bound.

    v_i = eta + J_ii + sqrt(J_{i,i+1} J_{i+1,i}) + sqrt(J_{i-1,i} J_{i,i-1})
    with out-of-range neighbor terms dropped.  Matches synthesize_gains with
    w = 1 on tridiagonal input.
    """
    J = _unwrap(j_hat)
    sub, sup = tridiagonal_bands(J)
    _check_hypothesis(J, eta)
    v = float(eta) + np.diag(J).astype(float).copy()
    if J.shape[0] > 1:
        g = np.sqrt(sup * sub)
        v[:-1] += g
        v[1:] += g
    return v
