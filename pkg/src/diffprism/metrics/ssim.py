"""Windowed SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03."""

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import DimensionError
from ..imagecore import BinaryMask, ImageRGB

WIN_SIZE = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03


def _as_array(x) -> np.ndarray:
    if isinstance(x, ImageRGB):
        return x.pixels
    if isinstance(x, BinaryMask):
        return x.values.astype(np.float64)[:, :, None]
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        return arr[:, :, None]
    if arr.ndim == 3:
        return arr
    raise DimensionError(f"SSIM needs 2-D or 3-D input, got shape {arr.shape}")


def ssim(a, b, data_range: float = 1.0) -> float:
    """Mean structural similarity of two equally shaped images or masks.

    Channels are averaged, then windows; the window-radius border is cropped
    when the image is large enough to have interior windows.
    """
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape:
        raise DimensionError(f"SSIM inputs differ in shape: {x.shape} vs {y.shape}")

    radius = (WIN_SIZE - 1) // 2
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2

    def blur(arr: np.ndarray) -> np.ndarray:
        return gaussian_filter(arr, sigma=(SIGMA, SIGMA, 0.0), truncate=radius / SIGMA, mode="reflect")

    mu_x, mu_y = blur(x), blur(y)
    var_x = blur(x * x) - mu_x * mu_x
    var_y = blur(y * y) - mu_y * mu_y
    cov_xy = blur(x * y) - mu_x * mu_y

    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov_xy + c2)) / (
        (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    )

    height, width = ssim_map.shape[:2]
    if height > 2 * radius and width > 2 * radius:
        ssim_map = ssim_map[radius:height - radius, radius:width - radius]
    return float(ssim_map.mean(axis=(0, 1)).mean())
