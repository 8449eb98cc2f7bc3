"""Brute-force references: exact histograms and enumerated densities.

Everything here enumerates bins explicitly, which the sketch deliberately
cannot do. It exists to verify the sketch (and to compute the normalized
density and total-variation quantities that need the full bin list).

Conventions shared with the sketch layer: per-bin count-sketch estimates
are clamped at 0 wherever they act as densities, and the normalizer
``nhat`` is the clamped sum over the histogram's occupied bins. The raw
(unclamped) sum is exposed separately for concentration checks, where the
estimator must stay unbiased.
"""

import numpy as np

from .partition import _as_matrix
from .sketch import DensitySketch


class ExactHistogram:
    """Exact per-bin counts of a dataset under a grid partitioner."""

    def __init__(self, partitioner, counts: dict, n: int):
        self.partitioner = partitioner
        self.counts = counts
        self.n = n

    @classmethod
    def from_points(cls, points, partitioner) -> "ExactHistogram":
        X = _as_matrix(points, partitioner.dim)
        if X.shape[0] == 0:
            return cls(partitioner, {}, 0)
        bins = partitioner.bin_of_many(X)
        uniq, cnt = np.unique(bins, axis=0, return_counts=True)
        counts = {
            tuple(b): int(c) for b, c in zip(uniq.tolist(), cnt.tolist())
        }
        return cls(partitioner, counts, X.shape[0])

    def bins_array(self) -> np.ndarray:
        """Occupied bins as an (M, d) int64 array in bin-id order."""
        if not self.counts:
            return np.empty((0, self.partitioner.dim), dtype=np.int64)
        return np.array(sorted(self.counts), dtype=np.int64)

    def counts_array(self) -> np.ndarray:
        """Counts aligned with ``bins_array`` order."""
        return np.array([self.counts[b] for b in sorted(self.counts)], dtype=np.int64)

    def density(self, point) -> float:
        """Histogram density count / (n * volume) at one point."""
        return float(self.density_many(np.asarray(point, dtype=np.float64).reshape(1, -1))[0])

    def density_many(self, points) -> np.ndarray:
        if self.n == 0:
            raise ValueError("density of an empty histogram is undefined")
        bins = self.partitioner.bin_of_many(_as_matrix(points, self.partitioner.dim))
        counts = np.array(
            [self.counts.get(b, 0) for b in map(tuple, bins.tolist())],
            dtype=np.float64,
        )
        # same arithmetic as the sketch's density: count / (n * volume)
        return counts / (self.n * self.partitioner.bin_volume())


def clamped_estimates(histogram: ExactHistogram, cs) -> tuple[np.ndarray, np.ndarray]:
    """(occupied bins, max(0, estimate)) aligned arrays, in bin-id order."""
    bins = histogram.bins_array()
    if bins.shape[0] == 0:
        return bins, np.empty(0, dtype=np.float64)
    return bins, np.maximum(cs.estimate_many(bins), 0.0)


def nhat(histogram: ExactHistogram, cs, *, clamp: bool = True) -> float:
    """Sum of per-bin estimates over the occupied bins.

    clamp=True matches the density conventions; clamp=False is the unbiased
    estimator of n whose concentration the eval harness measures.
    """
    bins = histogram.bins_array()
    if bins.shape[0] == 0:
        return 0.0
    est = cs.estimate_many(bins)
    if clamp:
        est = np.maximum(est, 0.0)
    return float(est.sum())


def density_star_exact(histogram: ExactHistogram, cs, point) -> float:
    """Normalized sketch density at a point: estimate / (volume * nhat).

    Unlike the sketch's own density (normalized by the exact n), this one
    integrates to 1 over the occupied bins by construction. It requires
    enumerating the bins, hence lives here.
    """
    total = nhat(histogram, cs)
    if total <= 0.0:
        raise ValueError("nhat <= 0: normalized density is degenerate")
    b = histogram.partitioner.bin_of(point)
    est = max(0.0, cs.estimate(b).value)
    return est / (histogram.partitioner.bin_volume() * total)


def density_star_many(histogram: ExactHistogram, cs, points) -> np.ndarray:
    """Vectorized ``density_star_exact`` (nhat computed once)."""
    total = nhat(histogram, cs)
    if total <= 0.0:
        raise ValueError("nhat <= 0: normalized density is degenerate")
    part = histogram.partitioner
    bins = part.bin_of_many(_as_matrix(points, part.dim))
    est = np.maximum(cs.estimate_many(bins), 0.0)
    return est / (part.bin_volume() * total)


def sampling_density_many(sketch: DensitySketch, points) -> np.ndarray:
    """Density of the sketch's sampling distribution at each point.

    Piecewise constant: stored heap count / (heap total * volume) inside a
    heap bin, 0 elsewhere. This is exactly the law of ``sketch.sample``.
    """
    part = sketch.partitioner
    total = sketch.heap.total_count()
    if total <= 0.0:
        raise ValueError("sampling density undefined: heap is empty")
    bins = part.bin_of_many(_as_matrix(points, part.dim))
    scale = 1.0 / (total * part.bin_volume())
    out = np.zeros(bins.shape[0], dtype=np.float64)
    for i, b in enumerate(map(tuple, bins.tolist())):
        c = sketch.heap.get(b)
        if c is not None:
            out[i] = c * scale
    return out


def tv_gap(histogram: ExactHistogram, sketch: DensitySketch) -> tuple[float, float]:
    """Both sides of the heap-truncation total-variation identity.

    Returns (lhs, rhs) where lhs integrates |normalized density - sampling
    density| by exact bin enumeration and rhs = 2 * (1 - nhat_heap / nhat),
    with every per-bin estimate re-queried from the count sketch (clamped
    at 0) so both sides are built from the same numbers. The identity
    lhs == rhs is algebraic; any gap beyond float rounding is a bug.
    """
    if histogram.partitioner != sketch.partitioner:
        raise ValueError("histogram and sketch use different partitioners")
    bins, est = clamped_estimates(histogram, sketch.cs)
    total = float(est.sum())
    if total <= 0.0:
        raise ValueError("nhat <= 0: normalized density is degenerate")
    in_heap = np.array([b in sketch.heap for b in map(tuple, bins.tolist())])
    heap_total = float(est[in_heap].sum())
    if heap_total <= 0.0:
        raise ValueError("heap carries no estimated mass")
    # per-bin integral of |f*_C - f_S|: volumes cancel against the
    # piecewise-constant densities, leaving mass fractions
    lhs = float(
        np.abs(est[in_heap] / total - est[in_heap] / heap_total).sum()
        + (est[~in_heap] / total).sum()
    )
    rhs = 2.0 * (1.0 - heap_total / total)
    return lhs, rhs
