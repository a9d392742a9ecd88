"""Independent oracles: brute-force and exact-arithmetic reference routes.

Everything here is deliberately dumb: exhaustive bijection search for
isomorphism, literal walk enumeration for truncated scores, dense linear
solves for exact scores, and Fraction arithmetic for the branching-tree mean.
None of it shares code with the implementation paths it checks.
"""

from fractions import Fraction
from itertools import permutations

import numpy as np

from pagerank_limits.graph import DirectedMultigraph, MarkedNeighborhood


def brute_force_isomorphic(a: MarkedNeighborhood, b: MarkedNeighborhood) -> bool:
    """Try every root-fixing bijection, comparing marks and edge multisets."""
    if a.size != b.size:
        return False
    if sorted(a.marks) != sorted(b.marks):
        return False
    ea = {}
    for u, v, m in a.edges:
        ea[(u, v)] = ea.get((u, v), 0) + m
    eb = {}
    for u, v, m in b.edges:
        eb[(u, v)] = eb.get((u, v), 0) + m
    if len(ea) != len(eb) or sum(ea.values()) != sum(eb.values()):
        return False
    others_a = [i for i in range(a.size) if i != a.root]
    others_b = [i for i in range(b.size) if i != b.root]
    for perm in permutations(others_b):
        gamma = {a.root: b.root}
        gamma.update(zip(others_a, perm))
        if any(a.marks[i] != b.marks[gamma[i]] for i in range(a.size)):
            continue
        if all(ea.get((u, v), 0) == eb.get((gamma[u], gamma[v]), 0) for u, v in ea):
            return True
    return False


def enum_truncated_pagerank(g: DirectedMultigraph, c: float, N: int) -> np.ndarray:
    """Literal enumeration of every walk of length <= N ending at each vertex."""
    preds = [[] for _ in range(g.n)]
    for s, t, m in g.edge_triples():
        preds[t].append((s, m))

    def walk_weights(end, k):
        if k == 0:
            return [1.0]
        out = []
        for j, m in preds[end]:
            w = m / g.d_out[j]
            for rest in walk_weights(j, k - 1):
                out.append(w * rest)
        return out

    scores = np.empty(g.n)
    for i in range(g.n):
        total = 1.0
        for k in range(1, N + 1):
            total += (c ** k) * sum(walk_weights(i, k))
        scores[i] = (1.0 - c) * total
    return scores


def dense_exact_pagerank(g: DirectedMultigraph, c: float) -> np.ndarray:
    """Solve (I - c Q^T) R = (1-c) 1 densely."""
    q = np.zeros((g.n, g.n))
    for s, t, m in g.edge_triples():
        q[s, t] = m / g.d_out[s]
    return np.linalg.solve(np.eye(g.n) - c * q.T, np.full(g.n, 1.0 - c))


def dense_generalized(g: DirectedMultigraph, C, B) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    for s, t, m in g.edge_triples():
        a[s, t] = C[s] * m / g.d_out[s]
    return np.linalg.solve(np.eye(g.n) - a.T, np.asarray(B, dtype=float))


def random_small_graph(rng, max_n=8):
    """Random multigraph on <= max_n vertices with mixed density and dangling."""
    from pagerank_limits.graph import build_graph

    n = int(rng.integers(1, max_n + 1))
    edges = []
    density = rng.uniform(0.1, 0.5)
    for s in range(n):
        if rng.random() < 0.2:
            continue  # leave some vertices dangling
        for t in range(n):
            if rng.random() < density:
                edges.append((s, t, int(rng.integers(1, 4))))
    return build_graph(edges, n)


def tree_root_rank_enum(tree, c: float, N: int) -> float:
    """Sum reversed-path weights prod(c/mark) over paths of length <= N."""
    children = [[] for _ in range(tree.size)]
    for i in range(1, tree.size):
        children[int(tree.parent[i])].append(i)

    def down(v, depth):
        total = 1.0
        if depth == N:
            return total
        for u in children[v]:
            total += (c / int(tree.mark[u])) * down(u, depth + 1)
        return total

    return (1.0 - c) * down(0, 0)


def tree_root_rank_enum_generalized(tree, N: int) -> float:
    children = [[] for _ in range(tree.size)]
    for i in range(1, tree.size):
        children[int(tree.parent[i])].append(i)

    def down(v, depth):
        total = float(tree.bvals[v])
        if depth == N:
            return total
        for u in children[v]:
            total += (float(tree.cvals[u]) / int(tree.mark[u])) * down(u, depth + 1)
        return total

    return down(0, 0)


def exact_gw_mean(entries, c: Fraction, N: int) -> Fraction:
    """Exact mean of the depth-N root rank of the branching-tree limit.

    ``entries`` are (h, l, Fraction) triples.  Derivation: one generation
    contributes E[in]*(factor)^{k-1}*t0 per path level, with
    t0 = P(out>=1)/E[out] and factor = E[in * 1{out>=1}]/E[out]; under the
    balanced-mean condition with no mass at out = 0 this collapses to
    1 - c^(N+1).
    """
    mean_out = sum(Fraction(h) * p for h, _, p in entries)
    mean_in = sum(Fraction(l) * p for _, l, p in entries)
    t0 = sum(p for h, _, p in entries if h >= 1) / mean_out
    beta = sum(Fraction(l) * p for h, l, p in entries if h >= 1) / mean_out
    one = Fraction(1)
    if N == 0:
        return one - c
    xi = (one - c) * t0
    for _ in range(N - 1):
        xi = (one - c) * t0 + c * beta * xi
    return (one - c) + c * mean_in * xi
