"""The density sketch: streaming build, density query, sampling, merge.

A ``DensitySketch`` compresses a stream of d-dimensional points into

* a grid partitioner (regular / aligned / lsh) mapping points to bin ids,
* a signed count sketch holding approximate per-bin counts,
* a top-H min-heap of the bins with the largest estimated counts,
* the exact number of inserted points n.

Per inserted point x: bin it, add 1 to the count sketch under its bin id,
re-estimate that bin, and offer (bin, estimate) to the heap; estimates that
are not positive are never offered. The density estimate at y is

    max(0, estimate(bin(y))) / (n * cell_volume)

and synthetic points are drawn by picking a heap bin with probability
proportional to its stored count, then sampling uniformly inside that cell.
The fraction of mass the heap retains (``capture_ratio``) governs how close
the sampling distribution is to the full count-sketch density.

Sketches with identical partitioner, count-sketch parameters and seeds are
mergeable: counters add exactly, n adds, and the heap is rebuilt from the
union of both heaps' bins re-estimated against the merged counters.

Construction is single-writer; queries and sampling are safe under shared
read-only access.
"""

import numpy as np

from ._hashing import slots_and_signs_vec
from .countsketch import CountSketch
from .errors import MergeError
from .partition import _as_matrix
from .topbins import TopBins

DEFAULT_DEPTH = 4
DEFAULT_WIDTH = 2**16
DEFAULT_HEAP_SIZE = 4096

_BULK_CHUNK = 65536


class DensitySketch:
    def __init__(
        self,
        partitioner,
        *,
        depth: int = DEFAULT_DEPTH,
        width: int = DEFAULT_WIDTH,
        heap_size: int = DEFAULT_HEAP_SIZE,
        seed: int = 0,
        recovery: str = "mean",
    ):
        self.partitioner = partitioner
        self.cs = CountSketch(depth, width, seed, recovery)
        self.heap = TopBins(heap_size)
        self.n = 0

    @classmethod
    def _from_parts(cls, partitioner, cs, heap, n):
        out = cls.__new__(cls)
        out.partitioner = partitioner
        out.cs = cs
        out.heap = heap
        out.n = n
        return out

    # ---------------------------------------------------------------- build

    def insert(self, point) -> None:
        """Ingest one point: bin, count, re-estimate, offer to the heap."""
        bin_id = self.partitioner.bin_of(point)
        self.cs.insert(bin_id, 1)
        est = self.cs.estimate(bin_id).value
        if est > 0.0:
            self.heap.update(bin_id, est)
        self.n += 1

    def insert_many(self, points) -> None:
        """Ingest a batch; identical end state to inserting row by row."""
        X = _as_matrix(points, self.partitioner.dim)
        for start in range(0, X.shape[0], _BULK_CHUNK):
            self._bulk_insert(self.partitioner.bin_of_many(X[start : start + _BULK_CHUNK]))

    def _bulk_insert(self, bins: np.ndarray) -> None:
        m = bins.shape[0]
        if m == 0:
            return
        cs, heap = self.cs, self.heap
        if cs.saturated or cs._headroom() < m:
            for b in map(tuple, bins.tolist()):
                cs.insert(b, 1)
                est = cs.estimate(b).value
                if est > 0.0:
                    heap.update(b, est)
            self.n += m
            return

        # hot path: pre-hash the whole chunk, then stream through plain
        # Python lists (exact int arithmetic, no per-element numpy overhead)
        depth = cs.depth
        slots = []
        signs = []
        for key in cs._row_keys:
            s, g = slots_and_signs_vec(key, bins, cs.width)
            slots.append(s.tolist())
            signs.append(g.tolist())
        keys = list(map(tuple, bins.tolist()))
        rows = [cs.counters[i].tolist() for i in range(depth)]
        mean_mode = cs.recovery == "mean"

        if depth == 1 and mean_mode:
            row, s0, g0 = rows[0], slots[0], signs[0]
            for j in range(m):
                sl = s0[j]
                g = g0[j]
                v = row[sl] + g
                row[sl] = v
                est = v if g > 0 else -v
                if est > 0:
                    heap.update(keys[j], float(est))
        elif mean_mode:
            # exact integer sum, then one division: matches np.mean bitwise
            # for counter magnitudes below 2**53
            for j in range(m):
                acc = 0
                for i in range(depth):
                    row = rows[i]
                    sl = slots[i][j]
                    g = signs[i][j]
                    v = row[sl] + g
                    row[sl] = v
                    acc += v if g > 0 else -v
                est = acc / depth
                if est > 0.0:
                    heap.update(keys[j], est)
        else:
            mid, odd = divmod(depth, 2)
            for j in range(m):
                vals = []
                for i in range(depth):
                    row = rows[i]
                    sl = slots[i][j]
                    g = signs[i][j]
                    v = row[sl] + g
                    row[sl] = v
                    vals.append(v if g > 0 else -v)
                vals.sort()
                est = float(vals[mid]) if odd else (vals[mid - 1] + vals[mid]) / 2.0
                if est > 0.0:
                    heap.update(keys[j], est)

        for i in range(depth):
            cs.counters[i] = rows[i]
        self.n += m

    # ---------------------------------------------------------------- query

    def density(self, point) -> float:
        """Estimated probability density at one point (clamped at 0)."""
        if self.n == 0:
            raise ValueError("density of an empty sketch is undefined")
        est = self.cs.estimate(self.partitioner.bin_of(point)).value
        return max(0.0, est) / (self.n * self.partitioner.bin_volume())

    def density_many(self, points) -> np.ndarray:
        """Vectorized ``density`` over an (N, d) batch."""
        if self.n == 0:
            raise ValueError("density of an empty sketch is undefined")
        bins = self.partitioner.bin_of_many(_as_matrix(points, self.partitioner.dim))
        est = self.cs.estimate_many(bins)
        return np.maximum(est, 0.0) / (self.n * self.partitioner.bin_volume())

    # --------------------------------------------------------------- sample

    def sample(self, rng) -> np.ndarray:
        """One synthetic point: heap bin by count weight, uniform in cell."""
        bin_id = self.heap.sample_bin(rng)
        return self.partitioner.sample_in_bin(bin_id, rng)

    def sample_many(self, count: int, rng) -> np.ndarray:
        """(count, d) synthetic points; reproducible for a seeded rng.

        Same distribution as repeated ``sample`` (cumulative-weight search
        over the heap), vectorized for bulk draws.
        """
        if count < 0:
            raise ValueError("count must be >= 0")
        if len(self.heap) == 0:
            raise ValueError("cannot sample: heap is empty")
        bins, counts = self.heap.entries_arrays()
        if count == 0:
            return np.empty((0, self.partitioner.dim), dtype=np.float64)
        cum = np.cumsum(counts)
        u = rng.random(count) * cum[-1]
        idx = np.minimum(np.searchsorted(cum, u, side="right"), len(counts) - 1)
        return self.partitioner.sample_in_bins(bins[idx], rng)

    def capture_ratio(self) -> float:
        """Estimated fraction of the data mass retained by the heap.

        total heap count / n, clamped to [0, 1] for reporting (count-sketch
        estimates can overshoot n).
        """
        if self.n == 0:
            raise ValueError("capture ratio of an empty sketch is undefined")
        return min(1.0, max(0.0, self.heap.total_count() / self.n))

    # ---------------------------------------------------------------- merge

    def merge(self, other: "DensitySketch") -> "DensitySketch":
        """Combine two sketches of disjoint streams into one.

        Counters and n add exactly; the heap is rebuilt from the union of
        both heaps' bins, re-estimated against the merged counters, keeping
        the top H by estimate (ties broken by bin id, deterministically).
        """
        self._check_mergeable(other)
        cs = self.cs.merge(other.cs)
        heap = TopBins(self.heap.capacity)
        union = sorted(
            {b for b, _ in self.heap.entries()} | {b for b, _ in other.heap.entries()}
        )
        if union:
            bins = np.array(union, dtype=np.int64)
            est = cs.estimate_many(bins)
            order = np.argsort(-est, kind="stable")[: heap.capacity]
            for i in order.tolist():
                if est[i] > 0.0:
                    heap.update(union[i], float(est[i]))
        return DensitySketch._from_parts(self.partitioner, cs, heap, self.n + other.n)

    def _check_mergeable(self, other) -> None:
        a, b = self.partitioner, other.partitioner
        if a.scheme != b.scheme:
            raise MergeError(
                f"sketches differ in partitioner scheme: {a.scheme} != {b.scheme}"
            )
        for (name, va), (_, vb) in zip(a._fields(), b._fields()):
            same = (
                va.tobytes() == vb.tobytes()
                if isinstance(va, np.ndarray)
                else va == vb
            )
            if not same:
                raise MergeError(f"sketches differ in partitioner {name}: {va!r} != {vb!r}")
        self.cs.compatible_with(other.cs)
        if self.heap.capacity != other.heap.capacity:
            raise MergeError(
                f"sketches differ in heap capacity: "
                f"{self.heap.capacity} != {other.heap.capacity}"
            )

    # ------------------------------------------------------------ serialize

    def to_bytes(self) -> bytes:
        from .serialization import to_bytes

        return to_bytes(self)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DensitySketch":
        from .serialization import from_bytes

        return from_bytes(data)

    def summary(self) -> dict:
        return {
            "scheme": self.partitioner.scheme,
            "dim": self.partitioner.dim,
            "n": self.n,
            "depth": self.cs.depth,
            "width": self.cs.width,
            "recovery": self.cs.recovery,
            "heap_capacity": self.heap.capacity,
            "heap_stored": len(self.heap),
            "capture_ratio": self.capture_ratio() if self.n else None,
            "saturated": self.cs.saturated,
        }

    def __repr__(self):
        return (
            f"DensitySketch(scheme={self.partitioner.scheme!r}, "
            f"dim={self.partitioner.dim}, n={self.n}, K={self.cs.depth}, "
            f"R={self.cs.width}, H={self.heap.capacity})"
        )
