"""Signed count sketch over bin ids.

A K x R array of signed 64-bit counters plus K seeded hash pairs
(slot hash into [0, R), sign hash into {-1, +1}). Inserting (key, c) adds
sign_i(key) * c at counters[i, slot_i(key)] for every row; each row then
yields an unbiased estimate sign_i(key) * counters[i, slot_i(key)], and the
rows are combined by mean (default) or median.

Counter updates saturate at the int64 limits instead of wrapping; a sticky
``saturated`` flag records that precision was lost. With unit inserts this
is unreachable in practice.

Two sketches built with the same (K, R, seed) hash every key identically,
so their counter arrays add: merging sketches of two streams gives exactly
the sketch of the concatenated stream.
"""

from dataclasses import dataclass

import numpy as np

from ._hashing import MASK64, row_keys, slot_and_sign, slots_and_signs_vec
from .errors import MergeError

RECOVERY_MODES = ("mean", "median")

_INT64_MAX = 2**63 - 1
_INT64_MIN = -(2**63)


@dataclass(frozen=True)
class CountEstimate:
    """Combined count estimate plus the K per-row estimates behind it."""

    value: float
    per_row: np.ndarray


class CountSketch:
    def __init__(self, depth: int, width: int, seed: int = 0, recovery: str = "mean"):
        if depth < 1 or width < 1:
            raise ValueError("depth and width must be >= 1")
        if width >= 2**62:
            raise ValueError("width must be < 2**62")
        if recovery not in RECOVERY_MODES:
            raise ValueError(f"recovery must be one of {RECOVERY_MODES}")
        self.depth = int(depth)
        self.width = int(width)
        self.seed = int(seed) & MASK64
        self.recovery = recovery
        self.counters = np.zeros((self.depth, self.width), dtype=np.int64)
        self.saturated = False
        self._row_keys = row_keys(self.seed, self.depth)

    def insert(self, bin_id, count: int = 1) -> None:
        """Add ``count`` to the given key. O(depth)."""
        count = int(count)
        for i, key in enumerate(self._row_keys):
            slot, sign = slot_and_sign(key, bin_id, self.width)
            v = int(self.counters[i, slot]) + sign * count
            if v > _INT64_MAX:
                v = _INT64_MAX
                self.saturated = True
            elif v < _INT64_MIN:
                v = _INT64_MIN
                self.saturated = True
            self.counters[i, slot] = v

    def insert_many(self, bins: np.ndarray, count: int = 1) -> None:
        """Bulk insert of an (N, d) int64 array of keys, ``count`` each.

        Equivalent to ``insert`` per row (counter sums are order-free).
        """
        bins = np.asarray(bins, dtype=np.int64)
        if bins.ndim != 2:
            raise ValueError("expected an (N, d) array of bin ids")
        total = abs(int(count)) * bins.shape[0]
        fast = not self.saturated and self._headroom() >= total
        for i, key in enumerate(self._row_keys):
            slots, signs = slots_and_signs_vec(key, bins, self.width)
            if fast:
                np.add.at(self.counters[i], slots, signs * count)
            else:
                for s, g in zip(slots.tolist(), signs.tolist()):
                    self._insert_slot(i, s, g * count)

    def _headroom(self) -> int:
        m = int(np.max(np.abs(self.counters), initial=0))
        return _INT64_MAX - m

    def _insert_slot(self, row, slot, delta):
        v = int(self.counters[row, slot]) + delta
        if v > _INT64_MAX:
            v, self.saturated = _INT64_MAX, True
        elif v < _INT64_MIN:
            v, self.saturated = _INT64_MIN, True
        self.counters[row, slot] = v

    def _combine(self, per_row: np.ndarray) -> float:
        if self.recovery == "mean":
            return float(np.mean(per_row))
        return float(np.median(per_row))

    def estimate(self, bin_id) -> CountEstimate:
        """Estimate of the total count inserted under ``bin_id``."""
        per_row = np.empty(self.depth, dtype=np.float64)
        for i, key in enumerate(self._row_keys):
            slot, sign = slot_and_sign(key, bin_id, self.width)
            per_row[i] = sign * self.counters[i, slot]
        return CountEstimate(self._combine(per_row), per_row)

    def estimate_many(self, bins: np.ndarray) -> np.ndarray:
        """Combined estimates for an (N, d) array of keys, as float64 (N,)."""
        bins = np.asarray(bins, dtype=np.int64)
        if bins.ndim != 2:
            raise ValueError("expected an (N, d) array of bin ids")
        per_row = np.empty((self.depth, bins.shape[0]), dtype=np.float64)
        for i, key in enumerate(self._row_keys):
            slots, signs = slots_and_signs_vec(key, bins, self.width)
            per_row[i] = signs * self.counters[i, slots]
        if self.recovery == "mean":
            return per_row.mean(axis=0)
        return np.median(per_row, axis=0)

    def compatible_with(self, other: "CountSketch") -> None:
        """Raise MergeError naming the first mismatched parameter."""
        for name, a, b in (
            ("cs depth", self.depth, other.depth),
            ("cs width", self.width, other.width),
            ("cs seed", self.seed, other.seed),
            ("cs recovery", self.recovery, other.recovery),
        ):
            if a != b:
                raise MergeError(f"count sketches differ in {name}: {a} != {b}")

    def merge(self, other: "CountSketch") -> "CountSketch":
        """New sketch whose counters are the element-wise sum."""
        self.compatible_with(other)
        out = CountSketch(self.depth, self.width, self.seed, self.recovery)
        a, b = self.counters, other.counters
        summed = a + b  # may wrap; detected below
        overflow = ((a > 0) & (b > 0) & (summed < 0)) | ((a < 0) & (b < 0) & (summed >= 0))
        if overflow.any():
            summed[overflow & (a > 0)] = _INT64_MAX
            summed[overflow & (a < 0)] = _INT64_MIN
            out.saturated = True
        out.counters = summed
        out.saturated = out.saturated or self.saturated or other.saturated
        return out

    def copy(self) -> "CountSketch":
        out = CountSketch(self.depth, self.width, self.seed, self.recovery)
        out.counters = self.counters.copy()
        out.saturated = self.saturated
        return out

    def __repr__(self):
        return (
            f"CountSketch(depth={self.depth}, width={self.width}, "
            f"seed={self.seed}, recovery={self.recovery!r})"
        )
