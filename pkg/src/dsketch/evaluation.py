"""Statistical metrology and the desk-scale verification scenarios.

``estimate_imse`` measures the integrated mean squared error of a density
estimator against a known truth by Monte Carlo integration over a bounding
box, decomposed into integrated variance and integrated squared bias from
the spread across refit trials.

The scenario functions (`lemma1_sweep`, `theorem2_convergence`,
`theorem3_iv_gap`, `theorem5_bound`, `nhat_concentration`,
`covariance_experiment`) each run one statistical check end to end and
emit flat result rows for CSV output; they back both the acceptance tests
and the ``eval`` CLI subcommand.
"""

from dataclasses import dataclass

import numpy as np

from .countsketch import CountSketch
from .oracle import (
    ExactHistogram,
    clamped_estimates,
    density_star_many,
    sampling_density_many,
    tv_gap,
)
from .partition import RegularGrid
from .sketch import DensitySketch
from .synthetic import GaussianMixture, single_gaussian

CSV_COLUMNS = ("scheme", "d", "n", "h", "K", "R", "H", "metric", "value", "std_err", "seed")


def _row(metric, value, std_err=None, *, scheme="regular", d=None, n=None, h=None,
         K=None, R=None, H=None, seed=None):
    return {
        "scheme": scheme, "d": d, "n": n, "h": h, "K": K, "R": R, "H": H,
        "metric": metric, "value": value, "std_err": std_err, "seed": seed,
    }


# ------------------------------------------------------------------ IMSE

@dataclass
class ImseReport:
    """Integrated MSE of a density estimator and its variance/bias split.

    imse == iv + isb by construction; std_err combines the trial-to-trial
    spread (group means) with the Monte-Carlo spread over integration
    points. iv/isb carry their own group-based standard errors.
    """

    imse: float
    iv: float
    isb: float
    n_trials: int
    n_mc_points: int
    std_err: float
    iv_std_err: float
    isb_std_err: float
    group_iv: np.ndarray
    group_isb: np.ndarray


def estimate_imse(fit, truth: GaussianMixture, n_trials: int, n_mc: int, rng,
                  box_sigmas: float = 6.0, n_groups: int | None = None) -> ImseReport:
    """Monte-Carlo IMSE of a refit density estimator against ``truth``.

    ``fit`` is called once per trial with a child generator and must return
    the trial's density function (vectorized over an (N, d) array). The
    integration points are uniform over the truth's bounding box and are
    shared across trials, so two calls seeded identically are paired
    trial-for-trial and point-for-point.

    Variance is the ddof=1 spread across trials; squared bias subtracts
    the variance of the trial mean so both components stay unbiased.
    """
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2 to separate variance from bias")
    lo, hi = truth.bounding_box(box_sigmas)
    volume = float(np.prod(hi - lo))
    X = rng.uniform(lo, hi, size=(n_mc, truth.dim))
    f_true = truth.pdf(X)
    children = rng.spawn(n_trials)

    est = np.empty((n_trials, n_mc))
    for t in range(n_trials):
        est[t] = fit(children[t])(X)

    if n_groups is None:
        n_groups = min(10, max(1, n_trials // 2))
    group_iv, group_isb = [], []
    for idx in np.array_split(np.arange(n_trials), n_groups):
        block = est[idx]
        t_g = len(idx)
        var_g = block.var(axis=0, ddof=1) if t_g > 1 else np.zeros(n_mc)
        bias2_g = (block.mean(axis=0) - f_true) ** 2 - (var_g / t_g if t_g > 1 else 0.0)
        group_iv.append(volume * var_g.mean())
        group_isb.append(volume * bias2_g.mean())
    group_iv = np.array(group_iv)
    group_isb = np.array(group_isb)

    iv = float(group_iv.mean())
    isb_raw = float(group_isb.mean())
    isb = max(0.0, isb_raw)
    imse = iv + isb

    def _group_se(values):
        if len(values) < 2:
            return 0.0
        return float(values.std(ddof=1) / np.sqrt(len(values)))

    # Monte-Carlo (integration point) share of the error, common to groups
    var_all = est.var(axis=0, ddof=1)
    bias2_all = (est.mean(axis=0) - f_true) ** 2 - var_all / n_trials
    contrib = var_all + bias2_all
    se_points = float(volume * contrib.std(ddof=1) / np.sqrt(n_mc))

    se_groups = _group_se(group_iv + group_isb)
    return ImseReport(
        imse=imse,
        iv=iv,
        isb=isb,
        n_trials=n_trials,
        n_mc_points=n_mc,
        std_err=float(np.hypot(se_groups, se_points)),
        iv_std_err=_group_se(group_iv),
        isb_std_err=_group_se(group_isb),
        group_iv=group_iv,
        group_isb=group_isb,
    )


def covariance_mse(samples, reference) -> float:
    """Mean squared element-wise error of the sample covariance vs a reference."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 samples to estimate a covariance")
    ref = np.asarray(reference, dtype=np.float64)
    cov = np.cov(X, rowvar=False)
    cov = np.atleast_2d(cov)
    if cov.shape != ref.shape:
        raise ValueError("reference shape does not match sample dimension")
    return float(np.mean((cov - ref) ** 2))


# ------------------------------------------------- scenario: tv identity

def lemma1_sweep(seed: int = 0, drop_fractions=None, n: int = 2000,
                 depth: int = 2, width: int = 4096) -> list[dict]:
    """Heap-truncation TV identity across dimensions and retention levels.

    For each configuration the heap size is chosen so the retained mass
    spans roughly 100% down to 10%; both sides of the identity are
    enumerated exactly and emitted side by side.
    """
    if drop_fractions is None:
        drop_fractions = np.linspace(0.0, 0.9, 10)
    rows = []
    rng = np.random.default_rng(seed)
    for d in (1, 2):
        truth = (
            single_gaussian([0.0], [1.0]) if d == 1
            else GaussianMixture(
                weights=np.array([0.5, 0.5]),
                means=np.array([[-1.5, 0.0], [1.5, 0.5]]),
                variances=np.full((2, d), 1.0),
            )
        )
        h = 0.25 if d == 1 else 0.5
        part = RegularGrid(d, h)
        for frac in drop_fractions:
            child = rng.spawn(1)[0]
            data = truth.sample(n, child)
            eh = ExactHistogram.from_points(data, part)
            counts = np.sort(eh.counts_array())[::-1]
            keep = np.searchsorted(np.cumsum(counts), (1.0 - frac) * n) + 1
            heap_size = int(min(len(counts), max(1, keep)))
            ds = DensitySketch(
                part, depth=depth, width=width, heap_size=heap_size,
                seed=int(child.integers(2**63)),
            )
            ds.insert_many(data)
            lhs, rhs = tv_gap(eh, ds)
            common = dict(d=d, n=n, h=h, K=depth, R=width, H=heap_size, seed=seed)
            rows.append(_row("lemma1_lhs", lhs, **common))
            rows.append(_row("lemma1_rhs", rhs, **common))
    return rows


# -------------------------------------------- scenario: IMSE convergence

def _two_component_2d() -> GaussianMixture:
    return GaussianMixture(
        weights=np.array([0.5, 0.5]),
        means=np.array([[-2.0, 0.0], [2.0, 1.0]]),
        variances=np.array([[1.0, 1.0], [1.0, 0.5]]),
    )


def theorem2_convergence(seed: int = 0, n_values=(1000, 10000, 100000),
                         n_trials: int = 20, n_mc: int = 2048) -> list[dict]:
    """Histogram-regime IMSE of the sketch density as n grows, h = n^(-1/4).

    Collisions are made negligible (K=1, R=2**20) so the sketch density
    tracks the exact histogram; the IMSE should drop roughly like
    n^(-1/2) on the fixed 2-D mixture.
    """
    truth = _two_component_2d()
    rows = []
    for n in n_values:
        h = float(n) ** (-1.0 / 4.0)
        part = RegularGrid(2, h)

        def fit(child, _part=part, _n=n):
            data = truth.sample(_n, child)
            ds = DensitySketch(
                _part, depth=1, width=2**20, heap_size=1024,
                seed=int(child.integers(2**63)),
            )
            ds.insert_many(data)
            return ds.density_many

        report = estimate_imse(fit, truth, n_trials, n_mc, np.random.default_rng(seed))
        common = dict(d=2, n=n, h=h, K=1, R=2**20, H=1024, seed=seed)
        rows.append(_row("imse", report.imse, report.std_err, **common))
        rows.append(_row("iv", report.iv, report.iv_std_err, **common))
        rows.append(_row("isb", report.isb, report.isb_std_err, **common))
    return rows


# ------------------------------------------------- scenario: IV gap

def theorem3_iv_gap(seed: int = 0, depths=(1, 4), widths=(64, 256), *,
                    d: int = 1, n: int = 2000, h: float = 0.5,
                    n_trials: int = 200, spread_sigma: float = 5e4) -> list[dict]:
    """Extra integrated variance contributed by count-sketch collisions.

    Per trial the exact histogram and the sketch share one dataset, so the
    gap IV(sketch) - IV(histogram) is measured directly as the enumerated
    integral of (sketch density - histogram density)^2 over the occupied
    bins (the histogram part of the variance cancels; the cross term has
    zero mean by sign symmetry). The prediction (#bins - 1) / (K R n h^d)
    assumes bins hold at most a handful of points, so the truth is spread
    wide enough that per-bin counts are essentially 0/1.
    """
    truth = single_gaussian(
        np.zeros(d), np.full(d, spread_sigma**2)
    )
    part = RegularGrid(d, h)
    volume = part.bin_volume()
    rows = []
    master = np.random.default_rng(seed)
    for depth in depths:
        for width in widths:
            children = master.spawn(n_trials)
            gaps = np.empty(n_trials)
            predicted = np.empty(n_trials)
            for t, child in enumerate(children):
                data = truth.sample(n, child)
                bins = part.bin_of_many(data)
                uniq, counts = np.unique(bins, axis=0, return_counts=True)
                cs = CountSketch(depth, width, int(child.integers(2**63)))
                cs.insert_many(bins)
                est = cs.estimate_many(uniq)
                gaps[t] = float(((est - counts) ** 2).sum()) / (n * n * volume)
                predicted[t] = (len(uniq) - 1) / (depth * width * n * volume)
            common = dict(d=d, n=n, h=h, K=depth, R=width, seed=seed)
            rows.append(_row(
                "iv_gap_measured", float(gaps.mean()),
                float(gaps.std(ddof=1) / np.sqrt(n_trials)), **common,
            ))
            rows.append(_row(
                "iv_gap_predicted", float(predicted.mean()),
                float(predicted.std(ddof=1) / np.sqrt(n_trials)), **common,
            ))
    return rows


# ------------------------------------------------- scenario: sampling bound

def _theorem5_configs():
    one_d = single_gaussian([0.0], [1.0])
    two_d = _two_component_2d()
    configs = []
    for h, heap_size in ((0.25, 4), (0.25, 16), (0.25, 64), (0.5, 8), (0.5, 1024)):
        configs.append(dict(truth=one_d, d=1, h=h, H=heap_size, n=3000, K=4, R=8192))
    for h, heap_size in ((0.4, 8), (0.4, 32), (0.4, 256), (0.8, 16), (0.8, 64), (0.8, 2048)):
        configs.append(dict(truth=two_d, d=2, h=h, H=heap_size, n=3000, K=4, R=16384))
    return configs


def theorem5_bound(seed: int = 0, configs=None, n_trials: int = 16,
                   n_mc: int = 2048) -> list[dict]:
    """Sampling-distribution IMSE against its truncation + normalization bound.

    Per configuration, per trial: IMSE terms are single-trial integrated
    squared errors over a shared point set, the capture ratio is computed
    by exact enumeration, and the margin

        12 (1 - ratio)^2 + 3 ISE(normalized density) - ISE(sampling density)

    must stay nonnegative within noise.
    """
    rows = []
    master = np.random.default_rng(seed)
    for cfg in configs if configs is not None else _theorem5_configs():
        truth, d, h = cfg["truth"], cfg["d"], cfg["h"]
        part = RegularGrid(d, h)
        lo, hi = truth.bounding_box()
        box_volume = float(np.prod(hi - lo))
        X = master.uniform(lo, hi, size=(n_mc, d))
        f_true = truth.pdf(X)
        children = master.spawn(n_trials)
        ise_s = np.empty(n_trials)
        ise_star = np.empty(n_trials)
        one_minus_r_sq = np.empty(n_trials)
        for t, child in enumerate(children):
            data = truth.sample(cfg["n"], child)
            ds = DensitySketch(
                part, depth=cfg["K"], width=cfg["R"], heap_size=cfg["H"],
                seed=int(child.integers(2**63)),
            )
            ds.insert_many(data)
            eh = ExactHistogram.from_points(data, part)
            bins, est = clamped_estimates(eh, ds.cs)
            total = est.sum()
            heap_mask = np.array([b in ds.heap for b in map(tuple, bins.tolist())])
            ratio = float(est[heap_mask].sum() / total)
            one_minus_r_sq[t] = (1.0 - ratio) ** 2
            ise_s[t] = box_volume * float(
                ((sampling_density_many(ds, X) - f_true) ** 2).mean()
            )
            ise_star[t] = box_volume * float(
                ((density_star_many(eh, ds.cs, X) - f_true) ** 2).mean()
            )
        margins = 12.0 * one_minus_r_sq + 3.0 * ise_star - ise_s
        common = dict(
            d=d, n=cfg["n"], h=h, K=cfg["K"], R=cfg["R"], H=cfg["H"], seed=seed
        )
        se = lambda a: float(a.std(ddof=1) / np.sqrt(n_trials))  # noqa: E731
        rows.append(_row("imse_sampling", float(ise_s.mean()), se(ise_s), **common))
        rows.append(_row("imse_normalized", float(ise_star.mean()), se(ise_star), **common))
        rows.append(_row(
            "mean_sq_one_minus_ratio", float(one_minus_r_sq.mean()),
            se(one_minus_r_sq), **common,
        ))
        rows.append(_row("bound_margin", float(margins.mean()), se(margins), **common))
    return rows


# ------------------------------------------ scenario: nhat concentration

def nhat_concentration(seed: int = 0, n: int = 1000, width: int = 8192,
                       eps: float = 0.1, n_seeds: int = 500, h: float = 1.0,
                       spread_sigma: float = 1e5) -> list[dict]:
    """Tail probability of the estimated total count vs its Chebyshev bound.

    nhat sums the raw (unclamped) per-bin estimates over the occupied bins;
    the bound #bins / (eps^2 n R) again assumes near-unit bin occupancy,
    hence the widely spread truth.
    """
    truth = single_gaussian([0.0], [spread_sigma**2])
    part = RegularGrid(1, h)
    master = np.random.default_rng(seed)
    exceed = 0
    bounds = np.empty(n_seeds)
    for t, child in enumerate(master.spawn(n_seeds)):
        data = truth.sample(n, child)
        bins = part.bin_of_many(data)
        uniq = np.unique(bins, axis=0)
        cs = CountSketch(1, width, int(child.integers(2**63)))
        cs.insert_many(bins)
        total = float(cs.estimate_many(uniq).sum())
        if abs(total - n) > eps * n:
            exceed += 1
        bounds[t] = len(uniq) / (eps * eps * n * width)
    rate = exceed / n_seeds
    common = dict(d=1, n=n, h=h, K=1, R=width, seed=seed)
    rows = [
        _row("nhat_exceedance_rate", rate,
             float(np.sqrt(max(rate * (1 - rate), 1e-12) / n_seeds)), **common),
        _row("nhat_chebyshev_bound", float(bounds.mean()),
             float(bounds.std(ddof=1) / np.sqrt(n_seeds)), **common),
    ]
    return rows


# --------------------------------------------- scenario: covariance task

def _clustered_grid_mixture(k: int = 5, spacing: float = 1.0,
                            cell: float = 0.5, variance: float = 0.0025) -> GaussianMixture:
    """k x k grid of tight Gaussian clusters centered on grid cells."""
    pts = [i * spacing + cell / 2.0 for i in range(-(k // 2), k - k // 2)]
    means = np.array([[x, y] for x in pts for y in pts])
    m = len(means)
    return GaussianMixture(np.full(m, 1.0 / m), means, np.full((m, 2), variance))


def covariance_experiment(seed: int = 0, n: int = 50000, n_runs: int = 50,
                          h: float = 0.5, depth: int = 3, width: int = 2048,
                          heap_size: int = 64, n_synthetic: int = 500000,
                          recovery: str = "median") -> list[dict]:
    """Covariance recovery from sketch samples vs a size-matched subsample.

    Per run: draw a clustered 2-D mixture dataset, take its empirical
    covariance as the reference, and compare (a) the covariance of
    synthetic points drawn from a sketch against (b) the covariance of a
    uniform random subsample whose raw float64 size equals the serialized
    sketch bytes.

    Clustered data is the structure's favorable regime: the mass lands in
    a few dozen heavy bins, so the sketch stores the shape of the
    distribution almost losslessly (median recovery votes away lone-row
    collisions) while the byte-matched subsample pays full multinomial
    noise on m points. Widely scattered data reverses the comparison, in
    line with the capture-ratio story.
    """
    truth = _clustered_grid_mixture(cell=h)
    part = RegularGrid(2, h)
    master = np.random.default_rng(seed)
    wins = 0
    mse_ds = np.empty(n_runs)
    mse_rand = np.empty(n_runs)
    sketch_bytes = 0
    for t, child in enumerate(master.spawn(n_runs)):
        data = truth.sample(n, child)
        reference = np.cov(data, rowvar=False)
        ds = DensitySketch(
            part, depth=depth, width=width, heap_size=heap_size,
            seed=int(child.integers(2**63)),
        )
        ds.insert_many(data)
        sketch_bytes = len(ds.to_bytes())
        synthetic = ds.sample_many(n_synthetic, child)
        mse_ds[t] = covariance_mse(synthetic, reference)
        m = min(n, sketch_bytes // (8 * 2))
        subsample = data[child.choice(n, size=m, replace=False)]
        mse_rand[t] = covariance_mse(subsample, reference)
        if mse_ds[t] < mse_rand[t]:
            wins += 1
    common = dict(d=2, n=n, h=h, K=depth, R=width, H=heap_size, seed=seed)
    rate = wins / n_runs
    return [
        _row("covariance_win_rate", rate,
             float(np.sqrt(max(rate * (1 - rate), 1e-12) / n_runs)), **common),
        _row("covariance_mse_sketch", float(mse_ds.mean()),
             float(mse_ds.std(ddof=1) / np.sqrt(n_runs)), **common),
        _row("covariance_mse_subsample", float(mse_rand.mean()),
             float(mse_rand.std(ddof=1) / np.sqrt(n_runs)), **common),
        _row("matched_bytes", float(sketch_bytes), **common),
    ]


SCENARIOS = {
    "lemma1": lemma1_sweep,
    "theorem2-convergence": theorem2_convergence,
    "theorem3-ivgap": theorem3_iv_gap,
    "theorem5-bound": theorem5_bound,
    "nhat-concentration": nhat_concentration,
    "covariance": covariance_experiment,
}


def rows_to_csv(rows) -> str:
    """Render scenario rows with the fixed CSV schema."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        cells = []
        for col in CSV_COLUMNS:
            v = row.get(col)
            cells.append("" if v is None else (repr(v) if isinstance(v, float) else str(v)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
