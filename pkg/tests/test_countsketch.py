import numpy as np
import pytest

from dsketch.countsketch import CountSketch, _INT64_MAX
from dsketch.errors import MergeError


def test_new_sketch_is_zeroed_and_estimates_zero():
    cs = CountSketch(5, 1024, seed=1)
    assert not cs.counters.any()
    assert cs.estimate((3, 4)).value == 0.0
    assert cs.estimate((0,) * 7).value == 0.0


def test_same_parameters_hash_identically():
    a = CountSketch(3, 64, seed=9)
    b = CountSketch(3, 64, seed=9)
    a.insert((5, -2), 3)
    b.insert((5, -2), 3)
    assert np.array_equal(a.counters, b.counters)


def test_single_key_exact_for_any_shape():
    for depth, width in [(1, 1), (1, 16), (4, 1), (3, 512)]:
        cs = CountSketch(depth, width, seed=2)
        cs.insert((42,), 7)
        est = cs.estimate((42,))
        assert est.value == 7.0
        assert np.all(est.per_row == 7.0)


def test_two_keys_single_cell_interference():
    # K=1, R=1: everything lands in one counter; the estimate of a is
    # 5 + g(a) g(b) * 3, i.e. one of {8, 2}
    cs = CountSketch(1, 1, seed=3)
    cs.insert((0,), 5)
    cs.insert((1,), 3)
    assert cs.estimate((0,)).value in (8.0, 2.0)


def test_additivity_is_bit_exact():
    a = CountSketch(4, 128, seed=5)
    b = CountSketch(4, 128, seed=5)
    a.insert((7, 7), 2)
    a.insert((7, 7), 3)
    b.insert((7, 7), 5)
    assert np.array_equal(a.counters, b.counters)


def test_estimate_many_matches_scalar():
    rng = np.random.default_rng(0)
    bins = rng.integers(-100, 100, size=(300, 2), dtype=np.int64)
    for recovery in ("mean", "median"):
        cs = CountSketch(4, 64, seed=8, recovery=recovery)
        cs.insert_many(bins[:200])
        bulk = cs.estimate_many(bins)
        for i in range(len(bins)):
            assert bulk[i] == cs.estimate(tuple(bins[i].tolist())).value


def test_insert_many_matches_scalar_inserts():
    rng = np.random.default_rng(1)
    bins = rng.integers(-10, 10, size=(500, 3), dtype=np.int64)
    a = CountSketch(2, 32, seed=4)
    b = CountSketch(2, 32, seed=4)
    a.insert_many(bins)
    for row in bins:
        b.insert(tuple(row.tolist()), 1)
    assert np.array_equal(a.counters, b.counters)


def test_median_recovery():
    cs = CountSketch(3, 8, seed=11, recovery="median")
    rng = np.random.default_rng(2)
    bins = rng.integers(0, 50, size=(200, 1), dtype=np.int64)
    cs.insert_many(bins)
    est = cs.estimate((3,))
    assert est.value == float(np.median(est.per_row))


# ------------------------------------------------------------------ merge

def test_merge_identity_element():
    empty = CountSketch(3, 64, seed=6)
    s = CountSketch(3, 64, seed=6)
    s.insert((1, 2), 9)
    merged = empty.merge(s)
    assert np.array_equal(merged.counters, s.counters)


def test_merge_commutative_and_associative():
    rng = np.random.default_rng(3)
    sketches = []
    for _ in range(3):
        cs = CountSketch(2, 16, seed=7)
        cs.insert_many(rng.integers(-5, 5, size=(100, 2), dtype=np.int64))
        sketches.append(cs)
    a, b, c = sketches
    assert np.array_equal(a.merge(b).counters, b.merge(a).counters)
    assert np.array_equal(
        a.merge(b).merge(c).counters, a.merge(b.merge(c)).counters
    )


def test_merge_equals_single_pass_sketch():
    rng = np.random.default_rng(4)
    stream = rng.integers(-20, 20, size=(10_000, 2), dtype=np.int64)
    full = CountSketch(3, 128, seed=12)
    full.insert_many(stream)
    left = CountSketch(3, 128, seed=12)
    right = CountSketch(3, 128, seed=12)
    left.insert_many(stream[:6000])
    right.insert_many(stream[6000:])
    assert np.array_equal(left.merge(right).counters, full.counters)


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(depth=3), "cs depth"),
        (dict(width=32), "cs width"),
        (dict(seed=99), "cs seed"),
        (dict(recovery="median"), "cs recovery"),
    ],
)
def test_merge_refuses_mismatch_naming_field(kwargs, field):
    base = dict(depth=2, width=64, seed=1, recovery="mean")
    a = CountSketch(**base)
    b = CountSketch(**{**base, **kwargs})
    with pytest.raises(MergeError, match=field):
        a.merge(b)


# ------------------------------------------------------------- statistics

def test_mean_recovery_is_unbiased_over_seeds():
    # fixed small key set, many hash draws: the average estimate of each
    # key converges on its true count
    true = {(0,): 10, (1,): 3, (2,): 1, (3,): 6}
    n_seeds = 300
    estimates = np.empty(n_seeds)
    for seed in range(n_seeds):
        cs = CountSketch(1, 4, seed=seed)
        for k, c in true.items():
            cs.insert(k, c)
        estimates[seed] = cs.estimate((0,)).value
    se = estimates.std(ddof=1) / np.sqrt(n_seeds)
    assert abs(estimates.mean() - 10.0) < 3.0 * se


def test_epsilon_delta_exceedance_bound():
    # 1000 distinct keys inserted once; the fraction of keys whose error
    # exceeds eps * l2(counts) stays below 1 / (eps^2 K R)
    n_keys, depth, width = 1000, 5, 4096
    eps = 0.05
    delta = 1.0 / (eps * eps * depth * width)
    bins = np.arange(n_keys, dtype=np.int64).reshape(-1, 1)
    l2 = np.sqrt(n_keys)  # all counts are 1
    exceed = 0
    n_seeds = 20
    for seed in range(n_seeds):
        cs = CountSketch(depth, width, seed=seed)
        cs.insert_many(bins)
        err = np.abs(cs.estimate_many(bins) - 1.0)
        exceed += int((err > eps * l2).sum())
    assert exceed / (n_seeds * n_keys) <= delta


# --------------------------------------------------------------- overflow

def test_saturation_instead_of_wraparound():
    cs = CountSketch(1, 1, seed=0)
    cs.insert((0,), _INT64_MAX - 5)
    sign = 1 if cs.counters[0, 0] > 0 else -1
    cs.insert((0,), sign * 100)  # push past the limit in the same direction
    assert cs.saturated
    assert abs(int(cs.counters[0, 0])) == _INT64_MAX


def test_bulk_insert_falls_back_when_headroom_is_low():
    cs = CountSketch(1, 4, seed=0)
    cs.counters[0, :] = _INT64_MAX - 2
    # key (0,) hashes with sign +1 under this seed: 40 unit inserts must
    # saturate, not wrap
    cs.insert_many(np.zeros((40, 1), dtype=np.int64))
    assert cs.saturated
    assert int(np.max(cs.counters)) == _INT64_MAX


def test_parameter_validation():
    with pytest.raises(ValueError):
        CountSketch(0, 4)
    with pytest.raises(ValueError):
        CountSketch(4, 0)
    with pytest.raises(ValueError):
        CountSketch(1, 1, recovery="mode")
    with pytest.raises(ValueError):
        CountSketch(1, 2**62)
