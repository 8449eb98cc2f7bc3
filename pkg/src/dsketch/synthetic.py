"""Synthetic ground-truth distributions for the evaluation harness."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaussianMixture:
    """Mixture of axis-aligned Gaussians with known density.

    weights must be positive and sum to 1; variances are per-axis
    (diagonal covariance) and strictly positive.
    """

    weights: np.ndarray
    means: np.ndarray       # (m, d)
    variances: np.ndarray   # (m, d), diagonal entries

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.asarray(self.means, dtype=np.float64)
        var = np.asarray(self.variances, dtype=np.float64)
        if mu.ndim != 2 or var.shape != mu.shape or w.shape != (mu.shape[0],):
            raise ValueError("weights (m,), means (m, d), variances (m, d) required")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(var <= 0) or not np.all(np.isfinite(var)):
            raise ValueError("variances must be strictly positive and finite")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(mu))):
            raise ValueError("weights and means must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def sample(self, n: int, rng, return_components: bool = False):
        """n i.i.d. draws; deterministic for a seeded generator."""
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        x = self.means[comp] + rng.standard_normal((n, self.dim)) * np.sqrt(
            self.variances[comp]
        )
        return (x, comp) if return_components else x

    def pdf(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        # (n, m, d) standardized squared distances
        z2 = (X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]
        log_norm = -0.5 * (
            self.dim * np.log(2.0 * np.pi) + np.log(self.variances).sum(axis=1)
        )
        comp_pdf = np.exp(log_norm[None, :] - 0.5 * z2.sum(axis=2))
        return comp_pdf @ self.weights

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def covariance(self) -> np.ndarray:
        """Exact covariance matrix of the mixture."""
        mu = self.mean()
        d = self.dim
        cov = np.zeros((d, d))
        for w, m, v in zip(self.weights, self.means, self.variances):
            delta = m - mu
            cov += w * (np.diag(v) + np.outer(delta, delta))
        return cov

    def bounding_box(self, sigmas: float = 6.0) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box covering every component mean +- sigmas * sd."""
        sd = np.sqrt(self.variances)
        lo = (self.means - sigmas * sd).min(axis=0)
        hi = (self.means + sigmas * sd).max(axis=0)
        return lo, hi


def single_gaussian(mean, variance) -> GaussianMixture:
    """Convenience wrapper for a one-component mixture."""
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    variance = np.atleast_1d(np.asarray(variance, dtype=np.float64))
    return GaussianMixture(
        weights=np.array([1.0]),
        means=mean.reshape(1, -1),
        variances=variance.reshape(1, -1),
    )
