import numpy as np
import pytest
from scipy import integrate

from dsketch import GaussianMixture, single_gaussian
from dsketch.evaluation import (
    CSV_COLUMNS,
    covariance_mse,
    estimate_imse,
    lemma1_sweep,
    nhat_concentration,
    rows_to_csv,
    theorem2_convergence,
    theorem3_iv_gap,
    theorem5_bound,
)


def metric(rows, name):
    return [r for r in rows if r["metric"] == name]


# ---------------------------------------------------------- estimate_imse

def test_perfect_estimator_has_zero_imse():
    truth = single_gaussian([0.0, 0.0], [1.0, 1.0])
    report = estimate_imse(lambda rng: truth.pdf, truth, n_trials=6, n_mc=512,
                           rng=np.random.default_rng(0))
    assert report.imse == 0.0
    assert report.iv == 0.0
    assert report.isb == 0.0


def test_zero_estimator_imse_equals_roughness():
    truth = single_gaussian([0.3], [2.0])
    # independent quadrature oracle for the integral of f^2
    roughness, _ = integrate.quad(lambda x: float(truth.pdf([[x]])[0]) ** 2,
                                  -np.inf, np.inf)
    report = estimate_imse(
        lambda rng: (lambda X: np.zeros(len(X))), truth,
        n_trials=4, n_mc=40_000, rng=np.random.default_rng(1),
    )
    assert report.iv == 0.0
    assert abs(report.imse - roughness) < 4 * report.std_err
    assert report.std_err < 0.05 * roughness


def test_imse_equals_iv_plus_isb():
    truth = single_gaussian([0.0], [1.0])
    rng = np.random.default_rng(2)

    def fit(child):
        data = truth.sample(300, child)
        lo, hi = data.min(), data.max()

        def density(X, lo=lo, hi=hi):
            inside = (X[:, 0] >= lo) & (X[:, 0] <= hi)
            return inside / max(hi - lo, 1e-9)

        return density

    report = estimate_imse(fit, truth, n_trials=12, n_mc=2048, rng=rng)
    assert report.imse == pytest.approx(report.iv + report.isb, abs=1e-15)
    assert report.iv > 0.0
    assert report.isb > 0.0
    assert report.n_trials == 12 and report.n_mc_points == 2048


def test_estimate_imse_requires_replication():
    truth = single_gaussian([0.0], [1.0])
    with pytest.raises(ValueError):
        estimate_imse(lambda rng: truth.pdf, truth, 1, 64, np.random.default_rng(0))


def test_paired_calls_share_integration_points_and_children():
    truth = single_gaussian([0.0], [1.0])
    seen = []

    def fit(child):
        seen.append(child.integers(2**63))
        return truth.pdf

    estimate_imse(fit, truth, 4, 64, np.random.default_rng(9))
    first = list(seen)
    seen.clear()
    estimate_imse(fit, truth, 4, 64, np.random.default_rng(9))
    assert seen == first


# --------------------------------------------------------- covariance mse

def test_covariance_mse_identical_samples():
    ref = np.array([[2.0, 0.5], [0.5, 1.0]])
    samples = np.tile([3.0, -1.0], (10, 1))
    assert covariance_mse(samples, ref) == pytest.approx(np.mean(ref**2))


def test_covariance_mse_consistency():
    gm = single_gaussian([0.0, 0.0], [1.0, 3.0])
    rng = np.random.default_rng(3)
    small = covariance_mse(gm.sample(200_000, rng), gm.covariance())
    large = covariance_mse(gm.sample(2_000, rng), gm.covariance())
    assert small < large


def test_covariance_mse_needs_two_samples():
    with pytest.raises(ValueError):
        covariance_mse(np.zeros((1, 2)), np.eye(2))


# -------------------------------------------------------------- scenarios

def test_lemma1_sweep_identity_holds_everywhere():
    rows = lemma1_sweep(seed=0)
    lhs = metric(rows, "lemma1_lhs")
    rhs = metric(rows, "lemma1_rhs")
    assert len(lhs) == len(rhs) == 20
    ratios = []
    for a, b in zip(lhs, rhs):
        assert abs(a["value"] - b["value"]) < 1e-9
        ratios.append(1.0 - b["value"] / 2.0)
    assert min(ratios) < 0.35  # the sweep reaches heavy truncation
    assert max(ratios) > 0.999


def test_theorem3_iv_gap_matches_prediction():
    rows = theorem3_iv_gap(seed=0, depths=(1,), widths=(64, 256), n_trials=100)
    for width in (64, 256):
        got = [r for r in rows if r["R"] == width]
        measured = next(r for r in got if r["metric"] == "iv_gap_measured")
        predicted = next(r for r in got if r["metric"] == "iv_gap_predicted")
        tol = 3 * np.hypot(measured["std_err"], predicted["std_err"])
        assert abs(measured["value"] - predicted["value"]) < tol


def test_theorem5_bound_margin_nonnegative():
    cfgs = [
        dict(truth=single_gaussian([0.0], [1.0]), d=1, h=0.25, H=8, n=1500, K=4, R=4096),
        dict(truth=single_gaussian([0.0], [1.0]), d=1, h=0.5, H=256, n=1500, K=4, R=4096),
    ]
    rows = theorem5_bound(seed=0, configs=cfgs, n_trials=8, n_mc=1024)
    margins = metric(rows, "bound_margin")
    assert len(margins) == 2
    for r in margins:
        assert r["value"] >= -3 * r["std_err"]


def test_nhat_concentration_respects_bound():
    rows = nhat_concentration(seed=0, n_seeds=100)
    rate = metric(rows, "nhat_exceedance_rate")[0]["value"]
    bound = metric(rows, "nhat_chebyshev_bound")[0]["value"]
    assert bound < 0.5
    assert rate <= bound


def test_theorem2_rows_shape():
    rows = theorem2_convergence(seed=0, n_values=(500, 2000), n_trials=4, n_mc=512)
    imse = metric(rows, "imse")
    assert [r["n"] for r in imse] == [500, 2000]
    assert all(r["std_err"] > 0 for r in imse)


def test_rows_to_csv_schema():
    rows = nhat_concentration(seed=1, n_seeds=20)
    text = rows_to_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == len(rows) + 1
    first = lines[1].split(",")
    assert len(first) == len(CSV_COLUMNS)
    assert first[CSV_COLUMNS.index("metric")] == "nhat_exceedance_rate"
