"""Seeded 64-bit mixing hash over bin ids.

Each count-sketch row i needs a pair of hash functions: a slot hash into
[0, R) and a sign hash into {-1, +1}. Both are carved out of a single
64-bit value obtained by chaining a splitmix64-style finalizer over the
bin-id coordinates (interpreted as two's-complement uint64, fixed order).
The row seed is mixed from (sketch seed, row index), so one seed pins the
whole family. Everything is plain modular integer arithmetic, hence
bit-identical across platforms and between the scalar and the vectorized
paths.

Slot = low bits (value mod R); sign = bit 63. R must stay below 2**62 so
the two never overlap.
"""

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# uint64 copies for the vectorized path
_U_GOLDEN = np.uint64(_GOLDEN)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U63 = np.uint64(63)


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int (mod 2**64)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def row_keys(seed: int, depth: int) -> list[int]:
    """Per-row hash keys derived from the sketch seed."""
    return [mix64((seed & MASK64) + (i + 1) * _GOLDEN) for i in range(depth)]


def hash_bin(row_key: int, indices) -> int:
    """64-bit hash of one bin id (sequence of ints) under one row key."""
    z = row_key
    for j, v in enumerate(indices):
        z = mix64(z ^ ((v & MASK64) + (j + 1) * _GOLDEN))
    return z


def slot_and_sign(row_key: int, indices, width: int) -> tuple[int, int]:
    """(slot in [0, width), sign in {-1, +1}) for one bin id."""
    z = hash_bin(row_key, indices)
    return z % width, (1 if (z >> 63) == 0 else -1)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U30)) * _U_MIX1
    z = (z ^ (z >> _U27)) * _U_MIX2
    return z ^ (z >> _U31)


def hash_bins_vec(row_key: int, bins: np.ndarray) -> np.ndarray:
    """Vectorized hash_bin over an (N, d) int64 array of bin ids."""
    bins = np.ascontiguousarray(bins, dtype=np.int64)
    z = np.full(bins.shape[0], np.uint64(row_key), dtype=np.uint64)
    cols = bins.view(np.uint64)
    for j in range(bins.shape[1]):
        z = _mix64_vec(z ^ (cols[:, j] + np.uint64(((j + 1) * _GOLDEN) & MASK64)))
    return z


def slots_and_signs_vec(row_key: int, bins: np.ndarray, width: int):
    """Vectorized slot_and_sign: returns (slots intp array, signs int64 array)."""
    z = hash_bins_vec(row_key, bins)
    slots = (z % np.uint64(width)).astype(np.intp)
    signs = np.where((z >> _U63) == 0, 1, -1).astype(np.int64)
    return slots, signs
