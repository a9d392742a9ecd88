"""Samplers of limiting rooted objects and root-rank evaluation on them.

Three limit laws are implemented: the marked branching tree with root law p
and size-biased non-root law p* (configuration-model limit), the branching
population observed over an exponential window (continuous-time trees), and
the position/strength-driven point tree limiting preferential attachment.
The truncated root rank is evaluated by the backward recursion

    R(0) = 1 - c,    R(j)_v = (1 - c) + sum_children (c / mark_u) R(j-1)_u,

identical to summing reversed-path weights, and its generalized form with
per-node (C, B) replaces (c, 1 - c).  Two Monte Carlo routes produce pools
of root-rank samples: direct independent tree sampling (vectorized level by
level) and the endogenous backward pool recursion with resampling; they are
deliberately distinct so each can check the other.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ResourceError, UsageError
from .generators import BiDegreeLaw
from .graph import MarkedNeighborhood

__all__ = [
    "LimitTree",
    "PolyaParams",
    "malthusian",
    "sample_gw_limit",
    "sample_ctbp_limit",
    "sample_polya_limit",
    "root_pagerank",
    "root_pagerank_generalized",
    "attach_generalized_weights",
    "solve_fixed_point_mc",
    "gw_root_rank_pool",
    "tree_neighborhood",
    "write_pool_csv",
    "read_pool_csv",
    "write_tree_edgelist",
]

logger = logging.getLogger(__name__)

DEFAULT_CTBP_NODE_CAP = 10_000_000
DEFAULT_POSITION_FLOOR = 1e-12


@dataclass
class LimitTree:
    """Rooted marked tree sampled from a limiting law.

    Nodes are indexed in breadth-first order (parents before children), node
    0 is the root, ``parent[0] = -1``.  ``truncation_depth`` is the depth at
    which sampling was cut off, or None for a fully sampled finite tree.
    Optional per-node columns carry model-specific data: positions and
    strengths for the point-tree law, birth times (plus the window ``T``)
    for branching populations, (C, B) weights for generalized ranks.
    """

    parent: np.ndarray
    mark: np.ndarray
    node_depth: np.ndarray
    truncation_depth: int | None
    position: np.ndarray | None = None
    strength: np.ndarray | None = None
    birth_time: np.ndarray | None = None
    window: float | None = None
    cvals: np.ndarray | None = None
    bvals: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.parent.size

    @property
    def max_depth(self) -> int:
        return int(self.node_depth.max()) if self.size else 0

    def in_degree(self) -> np.ndarray:
        """Child counts (the in-degree of each node under child->parent edges)."""
        counts = np.zeros(self.size, dtype=np.int64)
        if self.size > 1:
            counts += np.bincount(self.parent[1:], minlength=self.size)
        return counts


@dataclass(frozen=True)
class PolyaParams:
    """Parameters of the point-tree limit of preferential attachment."""

    m: int
    delta: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ConfigError(f"point-tree limit requires integer m >= 2, got {self.m}")
        if not self.delta > -self.m:
            raise ConfigError(f"delta must exceed -m, got {self.delta}")

    @property
    def chi(self) -> float:
        return (self.m + self.delta) / (2 * self.m + self.delta)

    @property
    def psi(self) -> float:
        return (1.0 - self.chi) / self.chi

    @property
    def gamma_shape(self) -> float:
        return self.m + self.delta


# ---------------------------------------------------------------------------
# Malthusian parameter


def malthusian(rate_base: float, tol: float = 1e-12) -> float:
    """Rate a* with E[births before an Exp(a*) time] = 1, by bisection.

    The expected count is m(a) = sum_{k>=1} prod_{i<k} (i+t)/(i+t+a) for
    t = rate_base.  Terms are summed until small; the remainder is added in
    closed form (the sum telescopes exactly), so the evaluation is accurate
    for every a > 1 without astronomically many terms.
    """
    theta = rate_base
    if not theta > 0:
        raise ConfigError(f"rate_base must be positive, got {theta}")
    if not tol > 0:
        raise ConfigError("tol must be positive")

    def mhat(alpha):
        total = 0.0
        term = 1.0
        k = 0
        while True:
            term *= (k + theta) / (k + theta + alpha)
            k += 1
            total += term
            # telescoped remainder sum_{j>k} a_j = a_k (k+theta)/(alpha-1) is
            # exact, so truncation leaves only roundoff; 64 terms is plenty
            rest = term * (k + theta) / (alpha - 1.0)
            if rest < tol * max(total, 1.0) or k >= 64:
                return total + rest

    lo, hi = 1.0 + 1e-12, 1.0 + 2.0 * theta
    if mhat(hi) > 1.0:
        raise ConfigError(f"bisection bracket failed for rate_base={theta}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mhat(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    alpha_star = 0.5 * (lo + hi)
    if abs(mhat(alpha_star) - 1.0) > 10.0 * max(tol, 1e-15):
        raise ConfigError(
            f"root verification failed: |m(a*)-1| > 10 tol at a*={alpha_star}"
        )
    return alpha_star


# ---------------------------------------------------------------------------
# limit samplers


def sample_gw_limit(law: BiDegreeLaw, depth: int, rng) -> LimitTree:
    """Marked branching tree: root (mark, in-degree) ~ p, other nodes ~ p*.

    Every node spawns in-degree children; the tree is truncated at ``depth``
    (nodes there keep their marks but spawn nothing).
    """
    if depth < 0:
        raise ConfigError(f"depth must be >= 0, got {depth}")
    h, l = law.sample(rng, 1)
    marks = [int(h[0])]
    parents = [-1]
    depths = [0]
    prev_level = [0]
    prev_counts = [int(l[0])]
    for d in range(1, depth + 1):
        total = sum(prev_counts)
        if total == 0:
            break
        hs, ls = law.sample_star(rng, total)
        level = []
        pos = 0
        for node, cnt in zip(prev_level, prev_counts):
            for _ in range(cnt):
                level.append(len(parents))
                parents.append(node)
                marks.append(int(hs[pos]))
                depths.append(d)
                pos += 1
        prev_level = level
        prev_counts = ls.tolist() if d < depth else []
    return LimitTree(
        parent=np.asarray(parents, dtype=np.int64),
        mark=np.asarray(marks, dtype=np.int64),
        node_depth=np.asarray(depths, dtype=np.int32),
        truncation_depth=depth,
    )


def sample_ctbp_limit(rate_base: float, alpha_star: float, rng,
                      max_nodes: int = DEFAULT_CTBP_NODE_CAP) -> LimitTree:
    """Branching population restricted to an Exp(alpha_star) window.

    Draws T ~ Exp(alpha_star) and grows the genealogy of the pure-birth
    process (rate k + rate_base after k children) keeping births before T.
    All marks are 1, including the root.  Finite almost surely; a runaway
    population beyond ``max_nodes`` raises and the caller may redraw.
    """
    theta = rate_base
    if not theta > 0 or not alpha_star > 0:
        raise ConfigError("rate_base and alpha_star must be positive")
    T = rng.exponential(1.0 / alpha_star)
    parents = [-1]
    depths = [0]
    births = [0.0]
    queue = [0]
    qpos = 0
    while qpos < len(queue):
        v = queue[qpos]
        qpos += 1
        t = births[v]
        k = 0
        while True:
            t += rng.exponential(1.0 / (k + theta))
            if t >= T:
                break
            child = len(parents)
            parents.append(v)
            depths.append(depths[v] + 1)
            births.append(t)
            queue.append(child)
            k += 1
            if len(parents) > max_nodes:
                raise ResourceError(
                    f"population exceeded {max_nodes} nodes within the window"
                )
    size = len(parents)
    return LimitTree(
        parent=np.asarray(parents, dtype=np.int64),
        mark=np.ones(size, dtype=np.int64),
        node_depth=np.asarray(depths, dtype=np.int32),
        truncation_depth=None,
        birth_time=np.asarray(births, dtype=np.float64),
        window=float(T),
    )


def sample_polya_limit(p: PolyaParams, depth: int, rng,
                       position_floor: float = DEFAULT_POSITION_FLOOR) -> LimitTree:
    """Point tree: positions in (0,1], Gamma strengths, Poisson offspring.

    The root sits at U^chi; a node at position x with strength g spawns
    Poisson(g (x^-psi - 1)) children, positions i.i.d. with CDF
    (t^psi - x^psi)/(1 - x^psi) on [x, 1].  All marks equal m.  Nodes at the
    truncation depth still draw strengths so their marks stay defined.
    """
    if depth < 0:
        raise ConfigError(f"depth must be >= 0, got {depth}")
    chi, psi, shape = p.chi, p.psi, p.gamma_shape
    x0 = rng.random() ** chi
    while x0 < position_floor:
        logger.info("root position %g below floor %g; resampling", x0, position_floor)
        x0 = rng.random() ** chi
    parents = [-1]
    depths = [0]
    positions = [x0]
    strengths = [float(rng.gamma(shape))]
    queue = [0]
    qpos = 0
    while qpos < len(queue):
        v = queue[qpos]
        qpos += 1
        if depths[v] >= depth:
            continue
        x = positions[v]
        lam = strengths[v] * (x ** (-psi) - 1.0)
        count = int(rng.poisson(lam))
        if count == 0:
            continue
        u = rng.random(count)
        xp = x ** psi
        child_pos = (xp + u * (1.0 - xp)) ** (1.0 / psi)
        for i in range(count):
            child = len(parents)
            parents.append(v)
            depths.append(depths[v] + 1)
            positions.append(float(child_pos[i]))
            strengths.append(float(rng.gamma(shape)))
            queue.append(child)
    size = len(parents)
    return LimitTree(
        parent=np.asarray(parents, dtype=np.int64),
        mark=np.full(size, p.m, dtype=np.int64),
        node_depth=np.asarray(depths, dtype=np.int32),
        truncation_depth=depth,
        position=np.asarray(positions, dtype=np.float64),
        strength=np.asarray(strengths, dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# root rank evaluation


def _resolve_depth(t: LimitTree, N):
    if N is None:
        return t.truncation_depth if t.truncation_depth is not None else t.max_depth
    if N < 0:
        raise UsageError(f"depth must be >= 0, got {N}")
    if t.truncation_depth is not None and N > t.truncation_depth:
        raise UsageError(
            f"tree truncated at depth {t.truncation_depth}, cannot evaluate depth {N}"
        )
    return N


def root_pagerank(t: LimitTree, c: float, N: int | None = None) -> float:
    """Truncated root rank: reversed-path weights prod c/mark up to length N."""
    if not 0.0 < c < 1.0:
        raise ConfigError(f"damping factor must be in (0,1), got {c}")
    N = _resolve_depth(t, N)
    vals = np.full(t.size, 1.0 - c)
    _accumulate(t, vals, None, c, max_depth=N)
    return float(vals[0])


def root_pagerank_generalized(t: LimitTree, N: int | None = None) -> float:
    """Generalized root rank with per-node weights: R_v = B_v + sum (C_u/m_u) R_u."""
    if t.cvals is None or t.bvals is None:
        raise UsageError("tree carries no (C, B) weights; attach them first")
    if t.cvals.size and float(t.cvals.max()) >= 1.0:
        raise ConfigError(f"max node C must be < 1, got {float(t.cvals.max())}")
    N = _resolve_depth(t, N)
    vals = t.bvals.astype(np.float64).copy()
    _accumulate(t, vals, t.cvals, None, max_depth=N)
    return float(vals[0])


def _accumulate(t, vals, cvals, c, max_depth=None):
    """Push child values into parents, deepest level first.

    Relies on nodes being indexed parents-before-children (BFS order), which
    every sampler in this module guarantees.
    """
    if t.size <= 1:
        return
    depths = t.node_depth
    top = int(depths[-1])
    horizon = top if max_depth is None else min(top, max_depth)
    if horizon < 1:
        return
    if t.size <= 256:
        parent, mark = t.parent, t.mark
        for i in range(t.size - 1, 0, -1):
            if depths[i] > horizon:
                continue
            co = (c if cvals is None else float(cvals[i])) / int(mark[i])
            vals[int(parent[i])] += co * vals[i]
        return
    starts = np.searchsorted(depths, np.arange(horizon + 2))
    for d in range(horizon, 0, -1):
        idx = np.arange(starts[d], starts[d + 1])
        if idx.size == 0:
            continue
        coef = (c if cvals is None else cvals[idx]) / t.mark[idx]
        np.add.at(vals, t.parent[idx], coef * vals[idx])


def attach_generalized_weights(t: LimitTree, c_sampler, b_sampler, rng) -> LimitTree:
    """Return a copy of the tree with i.i.d. per-node (C, B) weights drawn."""
    cvals = np.asarray(c_sampler(rng, t.size), dtype=np.float64)
    bvals = np.asarray(b_sampler(rng, t.size), dtype=np.float64)
    return LimitTree(
        parent=t.parent, mark=t.mark, node_depth=t.node_depth,
        truncation_depth=t.truncation_depth, position=t.position,
        strength=t.strength, birth_time=t.birth_time, window=t.window,
        cvals=cvals, bvals=bvals,
    )


# ---------------------------------------------------------------------------
# Monte Carlo pools of root-rank samples


def _const_sampler(value):
    return lambda rng, size: np.full(size, value)


def solve_fixed_point_mc(law: BiDegreeLaw, c: float | None, depth: int,
                         pool_size: int, rng,
                         c_sampler=None, b_sampler=None) -> np.ndarray:
    """Endogenous solution of the branching fixed-point equation, by pooling.

    Builds depth-1 backward iterations of the inner recursion

        R* = sum_{i<=N*} (C_i / mark_i) R*_i + B

    starting from the constant pool B (= 1-c by default), resampling child
    (mark, value) pairs jointly from the previous pool, then applies the root
    equation with the un-size-biased law.  The output is distributed as the
    depth-``depth`` root rank; marks are drawn jointly with offspring counts
    so dependent size-biased laws are handled.
    """
    if depth < 0:
        raise ConfigError(f"depth must be >= 0, got {depth}")
    if pool_size < 1:
        raise ConfigError(f"pool size must be >= 1, got {pool_size}")
    if c_sampler is None or b_sampler is None:
        if c is None or not 0.0 < c < 1.0:
            raise ConfigError("need damping c in (0,1) when samplers are not given")
        c_sampler = c_sampler or _const_sampler(c)
        b_sampler = b_sampler or _const_sampler(1.0 - c)
    M = pool_size
    if depth == 0:
        return np.asarray(b_sampler(rng, M), dtype=np.float64)
    marks, _ = law.sample_star(rng, M)
    vals = np.asarray(b_sampler(rng, M), dtype=np.float64)
    for _ in range(depth - 1):
        marks, vals = _pool_step(law.sample_star(rng, M), marks, vals,
                                 c_sampler, b_sampler, rng, M)
    _, vals = _pool_step(law.sample(rng, M), marks, vals, c_sampler, b_sampler, rng, M)
    return vals


def _pool_step(draw, prev_marks, prev_vals, c_sampler, b_sampler, rng, M):
    h, l = draw
    owners = np.repeat(np.arange(M), l)
    idx = rng.integers(0, M, owners.size)
    coef = np.asarray(c_sampler(rng, owners.size), dtype=np.float64) / prev_marks[idx]
    new_vals = np.asarray(b_sampler(rng, M), dtype=np.float64)
    if owners.size:
        new_vals += np.bincount(owners, weights=coef * prev_vals[idx], minlength=M)
    return h, new_vals


def gw_root_rank_pool(law: BiDegreeLaw, c: float | None, depth: int, M: int, rng,
                      c_sampler=None, b_sampler=None) -> np.ndarray:
    """M independent root-rank samples by direct level-wise tree sampling.

    Mathematically the same sampler as root_pagerank over sample_gw_limit,
    vectorized across trees; independent of the pool-resampling route, which
    it serves as an oracle for.  Memory grows with mean offspring^depth.
    """
    if depth < 0:
        raise ConfigError(f"depth must be >= 0, got {depth}")
    if c_sampler is None or b_sampler is None:
        if c is None or not 0.0 < c < 1.0:
            raise ConfigError("need damping c in (0,1) when samplers are not given")
        c_sampler = c_sampler or _const_sampler(c)
        b_sampler = b_sampler or _const_sampler(1.0 - c)
    _, l = law.sample(rng, M)
    vals = np.asarray(b_sampler(rng, M), dtype=np.float64)
    levels = [(None, None, vals)]
    counts = l
    for d in range(1, depth + 1):
        total = int(counts.sum())
        if total == 0:
            counts = np.zeros(0, dtype=np.int64)
            levels.append((np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                           np.zeros(0)))
            break
        parent_ptr = np.repeat(np.arange(counts.size), counts)
        h, l2 = law.sample_star(rng, total)
        lvl_vals = np.asarray(b_sampler(rng, total), dtype=np.float64)
        levels.append((parent_ptr, h, lvl_vals))
        counts = l2 if d < depth else np.zeros(0, dtype=np.int64)
    for d in range(len(levels) - 1, 0, -1):
        parent_ptr, h, lvl_vals = levels[d]
        if lvl_vals.size == 0:
            continue
        coef = np.asarray(c_sampler(rng, lvl_vals.size), dtype=np.float64) / h
        np.add.at(levels[d - 1][2], parent_ptr, coef * lvl_vals)
    return levels[0][2]


# ---------------------------------------------------------------------------
# conversions and I/O


def tree_neighborhood(t: LimitTree, k: int) -> MarkedNeighborhood:
    """Depth-k truncation of the tree as a rooted marked neighborhood."""
    if k < 0:
        raise UsageError(f"depth must be >= 0, got {k}")
    if t.truncation_depth is not None and k > t.truncation_depth:
        raise UsageError(
            f"tree truncated at depth {t.truncation_depth}, cannot take depth {k}"
        )
    keep = np.nonzero(t.node_depth <= k)[0]
    local = {int(v): i for i, v in enumerate(keep)}
    edges = []
    if k > 0:
        for i, v in enumerate(keep.tolist()):
            if v == 0:
                continue
            edges.append((i, local[int(t.parent[v])], 1))
    complete = t.truncation_depth is None and k >= t.max_depth
    return MarkedNeighborhood(
        marks=[int(t.mark[v]) for v in keep.tolist()],
        orig_ids=keep.tolist(),
        node_depths=[int(t.node_depth[v]) for v in keep.tolist()],
        edges=edges,
        depth=k,
        complete=complete,
    )


def write_tree_edgelist(t: LimitTree, path) -> None:
    """Export a sampled tree in the edge-list text format, marks as comments.

    `# mark <node> <value>` lines carry the mark column; graph readers skip
    them, so the file doubles as a loadable edge list for census cross-checks.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={t.size}\n")
        for v in range(t.size):
            fh.write(f"# mark {v} {int(t.mark[v])}\n")
        for v in range(1, t.size):
            fh.write(f"{v} {int(t.parent[v])}\n")


def write_pool_csv(values: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("value\n")
        for v in np.asarray(values).tolist():
            fh.write(f"{v!r}\n")


def read_pool_csv(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "value":
            raise UsageError(f"{path}: expected single 'value' column")
        for line in fh:
            line = line.strip()
            if line:
                values.append(float(line))
    return np.asarray(values, dtype=np.float64)
