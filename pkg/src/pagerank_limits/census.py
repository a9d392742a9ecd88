"""Empirical-distribution machinery: neighborhood censuses, TV/KS, tail index.

A census maps canonical neighborhood codes at a fixed depth to counts, either
over every vertex of a graph or over sampled roots; the same codes tally
truncations of sampled limit trees, so graph and limit sides are directly
comparable by total-variation distance.  Tail samples carry sorted score or
degree values for CCDF evaluation, two-sample Kolmogorov-Smirnov distance,
and the Hill tail-index estimate.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import SizeError, UsageError
from .graph import DirectedMultigraph, canonical_code, explore_neighborhood
from .limits import tree_neighborhood

__all__ = [
    "NeighborhoodCensus",
    "TailSample",
    "census",
    "census_limit",
    "tv_distance",
    "ks_distance",
    "ccdf",
    "hill_estimator",
    "write_census_csv",
    "read_census_csv",
    "write_tail_csv",
    "read_tail_csv",
]


@dataclass
class NeighborhoodCensus:
    depth: int
    counts: Counter
    total: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise UsageError("census counts do not sum to the stated total")

    def frequencies(self) -> dict:
        return {code: cnt / self.total for code, cnt in self.counts.items()}

    def merge(self, other: "NeighborhoodCensus") -> "NeighborhoodCensus":
        if other.depth != self.depth:
            raise UsageError("cannot merge censuses at different depths")
        return NeighborhoodCensus(
            depth=self.depth,
            counts=self.counts + other.counts,
            total=self.total + other.total,
        )


def _census_chunk(g, k, roots):
    counts = Counter()
    for v in roots:
        nbhd = explore_neighborhood(g, int(v), k)
        try:
            counts[canonical_code(nbhd)] += 1
        except SizeError as e:
            raise SizeError(f"root {int(v)}: {e}") from None
    return counts


def census(g: DirectedMultigraph, k: int, sample_count: int | None = None,
           rng=None, workers: int = 1) -> NeighborhoodCensus:
    """Tally canonical codes of depth-k neighborhoods, marks = out-degrees.

    Full sweep over all vertices by default; with ``sample_count`` the roots
    are drawn uniformly without replacement.  Root explorations are
    independent, so ``workers > 1`` splits them across processes.
    """
    if sample_count is None:
        roots = np.arange(g.n)
    else:
        if rng is None:
            raise UsageError("sampled census needs an rng")
        if not 1 <= sample_count <= g.n:
            raise UsageError(f"sample_count must be in [1, {g.n}]")
        roots = rng.choice(g.n, size=sample_count, replace=False)
    if workers > 1 and roots.size > 4 * workers:
        chunks = np.array_split(roots, workers)
        counts = Counter()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_census_chunk, [g] * len(chunks), [k] * len(chunks), chunks):
                counts += part
    else:
        counts = _census_chunk(g, k, roots)
    return NeighborhoodCensus(depth=k, counts=counts, total=int(roots.size))


def census_limit(sampler, k: int, M: int, rng) -> NeighborhoodCensus:
    """Sample M limit trees, truncate to depth k, canonicalize, tally."""
    if M < 1:
        raise UsageError(f"M must be >= 1, got {M}")
    counts = Counter()
    for _ in range(M):
        tree = sampler(rng)
        counts[canonical_code(tree_neighborhood(tree, k))] += 1
    return NeighborhoodCensus(depth=k, counts=counts, total=M)


def tv_distance(a: NeighborhoodCensus, b: NeighborhoodCensus) -> float:
    """Half the L1 distance between class frequencies."""
    if a.depth != b.depth:
        raise UsageError(f"census depths differ: {a.depth} vs {b.depth}")
    fa = a.frequencies()
    fb = b.frequencies()
    # sorted keys pin the float summation order: symmetric and run-to-run stable
    keys = sorted(set(fa) | set(fb))
    return 0.5 * sum(abs(fa.get(c, 0.0) - fb.get(c, 0.0)) for c in keys)


@dataclass
class TailSample:
    """Sorted nonnegative values with a provenance tag."""

    values: np.ndarray
    tag: str = ""

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=np.float64))

    @property
    def size(self) -> int:
        return self.values.size


def ks_distance(a: TailSample, b: TailSample) -> float:
    """sup_r |fraction(a > r) - fraction(b > r)| by a merge scan."""
    if a.size == 0 or b.size == 0:
        raise UsageError("KS distance needs nonempty samples")
    pts = np.concatenate([a.values, b.values])
    fa = np.searchsorted(a.values, pts, side="right") / a.size
    fb = np.searchsorted(b.values, pts, side="right") / b.size
    return float(np.abs(fa - fb).max())


def ccdf(a: TailSample, thresholds) -> np.ndarray:
    """Fraction of the sample strictly exceeding each threshold."""
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if thresholds.size > 1 and (np.diff(thresholds) < 0).any():
        raise UsageError("thresholds must be sorted ascending")
    if a.size == 0:
        raise UsageError("ccdf needs a nonempty sample")
    above = a.size - np.searchsorted(a.values, thresholds, side="right")
    return above / a.size


def hill_estimator(a: TailSample, top_k: int) -> float:
    """Classical Hill tail-index estimate over the top_k order statistics."""
    if not 2 <= top_k <= a.size // 2:
        raise UsageError(f"top_k must be in [2, {a.size // 2}], got {top_k}")
    ref = float(a.values[a.size - top_k - 1])
    if ref <= 0:
        raise UsageError("nonpositive value in the tail block")
    logs = np.log(a.values[a.size - top_k:] / ref)
    mean = float(logs.mean())
    if mean <= 0:
        raise UsageError("zero log spacings: tail index undefined")
    return 1.0 / mean


# ---------------------------------------------------------------------------
# CSV export


def write_census_csv(c: NeighborhoodCensus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("code_hex,count\n")
        for code in sorted(c.counts):
            fh.write(f"{code.hex()},{c.counts[code]}\n")


def write_tail_csv(a: TailSample, thresholds, path) -> None:
    """Write the empirical CCDF at the given thresholds as `r,ccdf` rows."""
    fractions = ccdf(a, thresholds)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("r,ccdf\n")
        for r, f in zip(np.asarray(thresholds).tolist(), fractions.tolist()):
            fh.write(f"{r!r},{f!r}\n")


def read_tail_csv(path):
    rs, fs = [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "r,ccdf":
            raise UsageError(f"{path}: expected 'r,ccdf' header")
        for line in fh:
            line = line.strip()
            if line:
                r, f = line.split(",")
                rs.append(float(r))
                fs.append(float(f))
    return np.asarray(rs), np.asarray(fs)


def read_census_csv(path, depth: int) -> NeighborhoodCensus:
    counts = Counter()
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "code_hex,count":
            raise UsageError(f"{path}: expected 'code_hex,count' header")
        for line in fh:
            line = line.strip()
            if line:
                hexcode, cnt = line.split(",")
                counts[bytes.fromhex(hexcode)] = int(cnt)
    return NeighborhoodCensus(depth=depth, counts=counts, total=sum(counts.values()))
