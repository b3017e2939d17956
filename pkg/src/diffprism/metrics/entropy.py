"""Shannon entropy of grayscale histograms."""

import numpy as np

from ..errors import ConfigurationError
from ..imagecore import LUMA_WEIGHTS, BinaryMask, ImageRGB


def _gray(image) -> np.ndarray:
    if isinstance(image, ImageRGB):
        return image.to_gray()
    if isinstance(image, BinaryMask):
        return image.values.astype(np.float64)
    arr = np.asarray(image, dtype=np.float64)
    return arr @ LUMA_WEIGHTS if arr.ndim == 3 else arr


def _histogram_entropy(values: np.ndarray, bins: int) -> float:
    if bins < 2:
        raise ConfigurationError(f"Entropy needs at least 2 bins, got {bins}")
    hist, _ = np.histogram(np.clip(values, 0.0, 1.0), bins=bins, range=(0.0, 1.0))
    p = hist[hist > 0] / hist.sum()
    return float(-np.sum(p * np.log2(p))) + 0.0


def shannon_entropy(image, bins: int = 256) -> float:
    """-sum p log2 p over the grayscale histogram on [0, 1], in bits."""
    return _histogram_entropy(_gray(image), bins)


def detail_entropy(image, bins: int = 256) -> float:
    """Entropy of horizontal and vertical first differences, mapped from [-1, 1] to [0, 1].

    Separates fine from coarse texture, which a value histogram cannot.
    """
    gray = _gray(image)
    diffs = np.concatenate([np.diff(gray, axis=1).reshape(-1), np.diff(gray, axis=0).reshape(-1)])
    if diffs.size == 0:
        return 0.0
    return _histogram_entropy((diffs + 1.0) / 2.0, bins)
