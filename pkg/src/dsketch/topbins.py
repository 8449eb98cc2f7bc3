"""Augmented min-heap of the H bins with the largest estimated counts.

A classic binary min-heap ordered by count, augmented with a dict from bin
id to heap position so an existing entry's count can be overwritten in
place during streaming. Update policy per offer (bin, c):

* bin already stored      -> overwrite its count, restore heap order;
* heap not full           -> insert;
* heap full, c > min      -> evict the minimum, insert;
* heap full, c <= min     -> ignore (ties never evict).

Counts are reals (count-sketch estimates). Offers with non-positive counts
are ignored: a bin whose estimate is not positive cannot be a heavy hitter,
and the sketch layer never forwards them anyway.

Single writer; reads are safe whenever no update is in flight.
"""

import math

import numpy as np

from .partition import BinId


class TopBins:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._heap: list[list] = []  # [count, bin_id] cells
        self._pos: dict[BinId, int] = {}

    def __len__(self) -> int:
        return len(self._heap)

    def __contains__(self, bin_id) -> bool:
        return tuple(bin_id) in self._pos

    def get(self, bin_id) -> float | None:
        """Stored count for a bin, or None if absent."""
        i = self._pos.get(tuple(bin_id))
        return None if i is None else self._heap[i][0]

    def min_count(self) -> float:
        if not self._heap:
            raise ValueError("heap is empty")
        return self._heap[0][0]

    def update(self, bin_id, count: float) -> None:
        if not math.isfinite(count):
            raise ValueError("count must be finite")
        if count <= 0.0:
            return
        bin_id = tuple(bin_id)
        pos = self._pos.get(bin_id)
        if pos is not None:
            old = self._heap[pos][0]
            self._heap[pos][0] = count
            if count < old:
                self._sift_up(pos)
            else:
                self._sift_down(pos)
        elif len(self._heap) < self.capacity:
            self._heap.append([count, bin_id])
            self._pos[bin_id] = len(self._heap) - 1
            self._sift_up(len(self._heap) - 1)
        elif count > self._heap[0][0]:
            evicted = self._heap[0][1]
            del self._pos[evicted]
            self._heap[0] = [count, bin_id]
            self._pos[bin_id] = 0
            self._sift_down(0)

    def total_count(self) -> float:
        """Sum of stored counts (recomputed by iteration; 0 when empty)."""
        return float(sum(cell[0] for cell in self._heap))

    def sample_bin(self, rng) -> BinId:
        """One bin drawn with probability count / total_count.

        One uniform draw followed by a cumulative-weight scan.
        """
        if not self._heap:
            raise ValueError("cannot sample from an empty heap")
        u = rng.random() * self.total_count()
        acc = 0.0
        for count, bin_id in self._heap:
            acc += count
            if u < acc:
                return bin_id
        return self._heap[-1][1]  # u landed on the rounding slack at the top

    def entries(self) -> list[tuple[BinId, float]]:
        """(bin, count) pairs sorted by bin id, for reproducible output."""
        return sorted(((b, c) for c, b in self._heap), key=lambda e: e[0])

    def entries_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """entries() split into an (M, d) int64 bin array and (M,) counts."""
        items = self.entries()
        if not items:
            return np.empty((0, 0), dtype=np.int64), np.empty(0, dtype=np.float64)
        bins = np.array([b for b, _ in items], dtype=np.int64)
        counts = np.array([c for _, c in items], dtype=np.float64)
        return bins, counts

    def _sift_up(self, i: int) -> None:
        heap, pos = self._heap, self._pos
        cell = heap[i]
        while i > 0:
            parent = (i - 1) >> 1
            if heap[parent][0] <= cell[0]:
                break
            heap[i] = heap[parent]
            pos[heap[i][1]] = i
            i = parent
        heap[i] = cell
        pos[cell[1]] = i

    def _sift_down(self, i: int) -> None:
        heap, pos = self._heap, self._pos
        n = len(heap)
        cell = heap[i]
        while True:
            child = 2 * i + 1
            if child >= n:
                break
            if child + 1 < n and heap[child + 1][0] < heap[child][0]:
                child += 1
            if heap[child][0] >= cell[0]:
                break
            heap[i] = heap[child]
            pos[heap[i][1]] = i
            i = child
        heap[i] = cell
        pos[cell[1]] = i

    def check_invariants(self) -> None:
        """Assert heap order and index consistency (test helper)."""
        assert len(self._heap) <= self.capacity
        assert len(self._pos) == len(self._heap)
        for i, (count, bin_id) in enumerate(self._heap):
            assert count > 0
            assert self._pos[bin_id] == i
            for child in (2 * i + 1, 2 * i + 2):
                if child < len(self._heap):
                    assert count <= self._heap[child][0]

    def __repr__(self):
        return f"TopBins(capacity={self.capacity}, stored={len(self._heap)})"
