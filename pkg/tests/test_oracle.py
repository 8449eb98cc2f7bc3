import numpy as np
import pytest

from dsketch import (
    DensitySketch,
    ExactHistogram,
    RegularGrid,
    density_star_exact,
    density_star_many,
    nhat,
    sampling_density_many,
    tv_gap,
)
from dsketch.countsketch import CountSketch


def collision_free_sketch(X, part, heap_size=4096, seed=0):
    ds = DensitySketch(part, depth=1, width=2**20, heap_size=heap_size, seed=seed)
    ds.insert_many(X)
    return ds


def test_exact_histogram_empty():
    eh = ExactHistogram.from_points(np.empty((0, 2)), RegularGrid(2, 1.0))
    assert eh.counts == {}
    assert eh.n == 0


def test_exact_histogram_repeated_point():
    eh = ExactHistogram.from_points(np.tile([0.5, 0.5], (5, 1)), RegularGrid(2, 1.0))
    assert eh.counts == {(0, 0): 5}
    assert eh.n == 5


def test_exact_histogram_matches_collision_free_heap():
    rng = np.random.default_rng(0)
    part = RegularGrid(2, 0.5)
    X = rng.normal(size=(3000, 2))
    ds = collision_free_sketch(X, part)
    eh = ExactHistogram.from_points(X, part)
    assert dict(ds.heap.entries()) == {b: float(c) for b, c in eh.counts.items()}


def test_histogram_density_integrates_to_one():
    rng = np.random.default_rng(1)
    part = RegularGrid(2, 0.7)
    eh = ExactHistogram.from_points(rng.normal(size=(1500, 2)), part)
    total = sum(c for c in eh.counts.values()) / eh.n
    assert total == 1.0
    centers = part.width * (eh.bins_array() + 0.5)
    mass = float(eh.density_many(centers).sum() * part.bin_volume())
    assert mass == pytest.approx(1.0, abs=1e-12)


# ----------------------------------------------------------- density star

def test_density_star_equals_histogram_when_collision_free():
    rng = np.random.default_rng(2)
    part = RegularGrid(1, 0.5)
    X = rng.normal(size=(500, 1))
    ds = collision_free_sketch(X, part)
    eh = ExactHistogram.from_points(X, part)
    Q = rng.uniform(-3, 3, size=(50, 1))
    assert np.allclose(
        density_star_many(eh, ds.cs, Q), eh.density_many(Q), rtol=1e-14, atol=0
    )
    q = [0.2]
    assert density_star_exact(eh, ds.cs, q) == pytest.approx(eh.density(q), rel=1e-14)


def test_density_star_single_bin():
    part = RegularGrid(2, 2.0)
    X = np.tile([1.0, 1.0], (7, 1))
    ds = collision_free_sketch(X, part)
    eh = ExactHistogram.from_points(X, part)
    assert density_star_exact(eh, ds.cs, [0.5, 0.5]) == pytest.approx(
        1.0 / part.bin_volume()
    )


def test_density_star_integrates_to_one_with_clamped_estimates():
    # noisy regime: small R forces collisions and negative estimates
    rng = np.random.default_rng(3)
    part = RegularGrid(1, 0.25)
    X = rng.normal(size=(2000, 1))
    ds = DensitySketch(part, depth=2, width=64, heap_size=64, seed=1)
    ds.insert_many(X)
    eh = ExactHistogram.from_points(X, part)
    bins = eh.bins_array()
    centers = part.width * (bins + 0.5)
    mass = float(
        (density_star_many(eh, ds.cs, centers) * part.bin_volume()).sum()
    )
    assert mass == pytest.approx(1.0, abs=1e-9)


def test_density_star_degenerate_normalizer():
    eh = ExactHistogram.from_points(np.empty((0, 1)), RegularGrid(1, 1.0))
    cs = CountSketch(1, 8, seed=0)
    with pytest.raises(ValueError):
        density_star_exact(eh, cs, [0.0])


def test_nhat_clamped_vs_raw():
    rng = np.random.default_rng(4)
    part = RegularGrid(1, 0.5)
    X = rng.normal(size=(400, 1))
    ds = DensitySketch(part, depth=1, width=16, heap_size=16, seed=2)
    ds.insert_many(X)
    eh = ExactHistogram.from_points(X, part)
    assert nhat(eh, ds.cs, clamp=True) >= nhat(eh, ds.cs, clamp=False)


# ----------------------------------------------------------------- tv gap

def test_tv_gap_zero_when_heap_holds_everything():
    rng = np.random.default_rng(5)
    part = RegularGrid(2, 1.0)
    X = rng.normal(size=(800, 2))
    ds = collision_free_sketch(X, part)
    eh = ExactHistogram.from_points(X, part)
    lhs, rhs = tv_gap(eh, ds)
    assert lhs == 0.0 and rhs == 0.0


def test_tv_gap_dropping_one_bin_gives_two_p():
    rng = np.random.default_rng(6)
    part = RegularGrid(1, 1.0)
    # three well-separated clusters with distinct sizes
    X = np.concatenate([
        rng.uniform(0, 1, size=(60, 1)),
        rng.uniform(5, 6, size=(25, 1)),
        rng.uniform(10, 11, size=(15, 1)),
    ])
    eh = ExactHistogram.from_points(X, part)
    ds = collision_free_sketch(X, part, heap_size=len(eh.counts) - 1)
    lhs, rhs = tv_gap(eh, ds)
    p = min(eh.counts.values()) / eh.n
    assert lhs == pytest.approx(2 * p, abs=1e-12)
    assert rhs == pytest.approx(2 * p, abs=1e-12)


def test_tv_gap_identity_in_noisy_regime():
    rng = np.random.default_rng(7)
    part = RegularGrid(2, 0.5)
    X = rng.normal(size=(3000, 2))
    for heap_size in (4, 16, 64):
        ds = DensitySketch(part, depth=2, width=512, heap_size=heap_size, seed=3)
        ds.insert_many(X)
        eh = ExactHistogram.from_points(X, part)
        lhs, rhs = tv_gap(eh, ds)
        assert abs(lhs - rhs) < 1e-9


def test_tv_gap_partitioner_mismatch():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(100, 1))
    eh = ExactHistogram.from_points(X, RegularGrid(1, 1.0))
    ds = collision_free_sketch(X, RegularGrid(1, 0.5))
    with pytest.raises(ValueError):
        tv_gap(eh, ds)


# ------------------------------------------------------- sampling density

def test_sampling_density_integrates_to_one():
    rng = np.random.default_rng(9)
    part = RegularGrid(2, 0.5)
    X = rng.normal(size=(2000, 2))
    ds = DensitySketch(part, depth=1, width=2**18, heap_size=32, seed=4)
    ds.insert_many(X)
    bins, _ = ds.heap.entries_arrays()
    centers = part.width * (bins + 0.5)
    mass = float(sampling_density_many(ds, centers).sum() * part.bin_volume())
    assert mass == pytest.approx(1.0, abs=1e-9)


def test_sampling_density_zero_outside_heap():
    part = RegularGrid(1, 1.0)
    ds = collision_free_sketch(np.full((5, 1), 0.5), part)
    vals = sampling_density_many(ds, np.array([[0.5], [99.5]]))
    assert vals[0] == pytest.approx(1.0)
    assert vals[1] == 0.0
