"""Frechet distance between Gaussian fits of feature sets (FID and its normalized form)."""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ..errors import ConfigurationError, DimensionError, InsufficientDataError, NumericalDivergenceError
from . import GaussianStats


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def gaussian_stats(features) -> GaussianStats:
    """Sample mean and 1/(n-1) covariance of an (n, d) feature array."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.shape[0] < 2:
        raise InsufficientDataError(f"Need at least 2 feature vectors, got {arr.shape[0]}")
    cov = np.atleast_2d(np.cov(arr, rowvar=False, ddof=1))
    return GaussianStats(mean=arr.mean(axis=0), cov=_symmetrize(cov), n_samples=arr.shape[0])


@dataclass
class MomentAccumulator:
    """Streaming mean and centered second moment (M2); merging is associative.

    Batches are centered on their own mean and combined with the pairwise
    update, so a large common offset in the features does not cancel the
    covariance.
    """
    dim: int
    n: int = 0
    mean: np.ndarray = field(default=None)
    m2: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        if self.m2 is None:
            self.m2 = np.zeros((self.dim, self.dim))

    @classmethod
    def from_features(cls, features) -> "MomentAccumulator":
        batch = np.atleast_2d(np.asarray(features, dtype=np.float64))
        return cls(batch.shape[1]).add(batch)

    def add(self, features) -> "MomentAccumulator":
        batch = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if batch.shape[1] != self.dim:
            raise DimensionError(f"Expected {self.dim}-dim features, got {batch.shape[1]}")
        if batch.shape[0] == 0:
            return self
        batch_mean = batch.mean(axis=0)
        centered = batch - batch_mean
        merged = self.merge(MomentAccumulator(self.dim, batch.shape[0], batch_mean, centered.T @ centered))
        self.n, self.mean, self.m2 = merged.n, merged.mean, merged.m2
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.dim != self.dim:
            raise DimensionError(f"Cannot merge {self.dim}-dim and {other.dim}-dim moments")
        if other.n == 0:
            return MomentAccumulator(self.dim, self.n, self.mean.copy(), self.m2.copy())
        if self.n == 0:
            return MomentAccumulator(other.dim, other.n, other.mean.copy(), other.m2.copy())
        n = self.n + other.n
        delta = other.mean - self.mean
        return MomentAccumulator(
            dim=self.dim,
            n=n,
            mean=self.mean + delta * (other.n / n),
            m2=self.m2 + other.m2 + np.outer(delta, delta) * (self.n * other.n / n),
        )

    def to_stats(self) -> GaussianStats:
        if self.n < 2:
            raise InsufficientDataError(f"Need at least 2 feature vectors, got {self.n}")
        return GaussianStats(mean=self.mean, cov=_symmetrize(self.m2 / (self.n - 1)), n_samples=self.n)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = linalg.eigh(_symmetrize(m))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The trace of the product root is taken from the symmetric form
    S_a^(1/2) S_b S_a^(1/2), whose eigenvalues are clamped at 0.
    """
    if a.dim != b.dim:
        raise DimensionError(f"Feature dimensions differ: {a.dim} vs {b.dim}")
    diff = a.mean - b.mean
    root_a = _psd_sqrt(a.cov)
    inner = _symmetrize(root_a @ b.cov @ root_a)
    eigvals = np.clip(linalg.eigvalsh(inner), 0.0, None)
    value = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.sum(np.sqrt(eigvals)))
    if not np.isfinite(value):
        raise NumericalDivergenceError("Frechet distance is not finite")
    return max(value, 0.0)


def nfid(fid_value: float, normalizer: float) -> float:
    """FID divided by an explicit normalizer (e.g. the FID of a fully random set)."""
    if normalizer is None or normalizer <= 0:
        raise ConfigurationError(f"nFID normalizer must be positive, got {normalizer}")
    return fid_value / normalizer
