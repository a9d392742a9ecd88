"""Exact, truncated, and generalized graph-normalized PageRank.

All solvers run the synchronous Jacobi (pull) iteration

    R <- c * P @ R + (1 - c),        P[i, j] = e_{j,i} / d_out_j,

so that N iterations from the all-(1-c) vector equal the weighted sum over
directed paths of length at most N ending at each vertex, exactly.  Vertices
with out-degree zero absorb score and forward none, which keeps the mean
score at most 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ConvergenceError, InvariantViolation
from .graph import DirectedMultigraph

__all__ = [
    "PageRankParams",
    "PageRankVector",
    "GeneralizedWeights",
    "solve_pagerank",
    "pagerank_truncated",
    "truncation_gap",
    "solve_generalized",
    "lower_bound_check",
    "pull_matrix",
    "write_scores_csv",
    "read_scores_csv",
]


@dataclass(frozen=True)
class PageRankParams:
    c: float
    tol: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ConfigError(f"damping factor must be in (0,1), got {self.c}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")


@dataclass
class PageRankVector:
    values: np.ndarray
    order: object  # int for a truncated solve, "exact" otherwise
    params: object
    iterations: int
    residual: float | None = None

    @property
    def mean(self) -> float:
        return float(self.values.mean())


@dataclass
class GeneralizedWeights:
    """Per-vertex damping C_i in [0, c_max], c_max < 1, and offsets B_i >= 0.

    By convention the B population mean is 1 - c_max, which keeps the
    generalized scores on the same scale as standard PageRank; the convention
    is not enforced.
    """

    C: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        if self.C.shape != self.B.shape:
            raise ConfigError("C and B must have equal length")
        if self.C.size and (self.C < 0).any():
            raise ConfigError("C entries must be nonnegative")
        if self.C.size and float(self.C.max()) >= 1.0:
            raise ConfigError(f"max C must be < 1, got {float(self.C.max())}")
        if self.B.size and (self.B < 0).any():
            raise ConfigError("B entries must be nonnegative")

    @property
    def c_max(self) -> float:
        return float(self.C.max()) if self.C.size else 0.0


def pull_matrix(g: DirectedMultigraph) -> sp.csr_matrix:
    """Sparse P with P[i, j] = e_{j,i} / d_out_j (dangling columns are zero)."""
    data = g.mult / g.d_out[g.src]
    return sp.csr_matrix((data, (g.tgt, g.src)), shape=(g.n, g.n))


def _iterate(mat, offset, start, factor_desc, tol, max_iter):
    """Run R <- mat @ R + offset until the sup-norm step is below tol."""
    r = start
    for it in range(1, max_iter + 1):
        r_new = mat @ r + offset
        delta = float(np.abs(r_new - r).max()) if r.size else 0.0
        r = r_new
        if delta < tol:
            return r, it, delta
    raise ConvergenceError(
        f"{factor_desc} iteration did not reach tol={tol} in {max_iter} steps "
        f"(last residual {delta:.3e})",
        residual=delta,
        iterations=max_iter,
    )


def solve_pagerank(g: DirectedMultigraph, p: PageRankParams) -> PageRankVector:
    """Unique fixed point of R_i = c sum_j (e_{j,i}/d_out_j) R_j + (1-c)."""
    mat = p.c * pull_matrix(g)
    offset = np.full(g.n, 1.0 - p.c)
    r, it, delta = _iterate(mat, offset, offset.copy(), f"pagerank(c={p.c})", p.tol, p.max_iter)
    vec = PageRankVector(values=r, order="exact", params=p, iterations=it, residual=delta)
    _check_solution(g, p, vec)
    return vec


def _check_solution(g, p, vec):
    if vec.values.size == 0:
        return
    if float(vec.values.min()) < (1.0 - p.c) - 1e-12:
        raise InvariantViolation(
            f"score below teleport mass 1-c: min={float(vec.values.min())!r}"
        )
    if not g.has_dangling():
        total = float(vec.values.sum())
        slack = g.n * p.tol * (2.0 + 2.0 * p.c / (1.0 - p.c))
        if abs(total - g.n) > slack:
            raise InvariantViolation(
                f"mass identity failed on dangling-free graph: sum={total!r}, n={g.n}"
            )


def pagerank_truncated(g: DirectedMultigraph, p: PageRankParams, N: int) -> PageRankVector:
    """Weighted sum over directed paths of length <= N, via N pull iterations."""
    if N < 0:
        raise ConfigError(f"truncation order must be >= 0, got {N}")
    mat = p.c * pull_matrix(g)
    offset = np.full(g.n, 1.0 - p.c)
    r = offset.copy()
    for _ in range(N):
        r = mat @ r + offset
    return PageRankVector(values=r, order=N, params=p, iterations=N, residual=None)


def truncation_gap(g, p, N, exact: PageRankVector | None = None,
                   truncated: PageRankVector | None = None, tol: float = 1e-10):
    """Mean of R - R^(N) and the size-free bound c^(N+1); checks 0 <= gap <= bound."""
    if exact is None:
        exact = solve_pagerank(g, p)
    if truncated is None:
        truncated = pagerank_truncated(g, p, N)
    mean_gap = float((exact.values - truncated.values).mean()) if g.n else 0.0
    bound = p.c ** (N + 1)
    if not (-tol <= mean_gap <= bound + tol):
        raise InvariantViolation(
            f"truncation gap {mean_gap!r} outside [0, c^{N + 1}={bound!r}]"
        )
    return mean_gap, bound


def solve_generalized(g: DirectedMultigraph, w: GeneralizedWeights,
                      tol: float = 1e-12, max_iter: int = 10_000,
                      order: int | None = None) -> PageRankVector:
    """Fixed point of R_i = sum_j (C_j e_{j,i}/d_out_j) R_j + B_i.

    With ``order=N`` runs exactly N iterations from R = B instead, the
    generalized analogue of :func:`pagerank_truncated`.
    """
    if w.C.shape != (g.n,):
        raise ConfigError(f"weights have length {w.C.size}, graph has {g.n} vertices")
    # same evaluation order as c * pull_matrix so constant C reproduces the
    # standard solver bit for bit
    data = w.C[g.src] * (g.mult / g.d_out[g.src])
    mat = sp.csr_matrix((data, (g.tgt, g.src)), shape=(g.n, g.n))
    b = w.B.astype(np.float64)
    if order is not None:
        if order < 0:
            raise ConfigError(f"truncation order must be >= 0, got {order}")
        r = b.copy()
        for _ in range(order):
            r = mat @ r + b
        return PageRankVector(values=r, order=order, params=w, iterations=order, residual=None)
    r, it, delta = _iterate(mat, b, b.copy(), f"generalized(c_max={w.c_max})", tol, max_iter)
    return PageRankVector(values=r, order="exact", params=w, iterations=it, residual=delta)


def lower_bound_check(g: DirectedMultigraph, p: PageRankParams,
                      exact: PageRankVector | None = None) -> float:
    """Verify R_i >= (1-c)(1 + c sum_j e_{j,i}/d_out_j) for every vertex.

    The bound is the order-1 truncation, hence valid by monotonicity of the
    path sums.  Returns 1.0; any violation raises with the offending vertices.
    """
    if exact is None:
        exact = solve_pagerank(g, p)
    in_weight = pull_matrix(g) @ np.ones(g.n)
    bound = (1.0 - p.c) * (1.0 + p.c * in_weight)
    slack = 1e-10 * (1.0 + np.abs(bound))
    bad = np.nonzero(exact.values < bound - slack)[0]
    if bad.size:
        head = ", ".join(str(int(v)) for v in bad[:10])
        raise InvariantViolation(
            f"{bad.size} vertices below the order-1 lower bound (first: {head})"
        )
    return 1.0


# ---------------------------------------------------------------------------
# score export


def write_scores_csv(vec: PageRankVector, path, meta_path=None) -> None:
    """Write `vertex,score` at full precision plus a JSON metadata sidecar."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("vertex,score\n")
        for i, v in enumerate(vec.values.tolist()):
            fh.write(f"{i},{v!r}\n")
    if meta_path is None:
        meta_path = str(path) + ".meta.json"
    meta = {
        "order": vec.order,
        "iterations": vec.iterations,
        "residual": vec.residual,
    }
    if isinstance(vec.params, PageRankParams):
        meta["c"] = vec.params.c
        meta["tol"] = vec.params.tol
    elif isinstance(vec.params, GeneralizedWeights):
        meta["c"] = None
        meta["c_max"] = vec.params.c_max
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_scores_csv(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "vertex,score":
            raise ConfigError(f"{path}: expected 'vertex,score' header")
        for line in fh:
            line = line.strip()
            if line:
                values.append(float(line.split(",")[1]))
    return np.asarray(values, dtype=np.float64)
