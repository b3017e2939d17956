"""Chromatic aberration: reshuffle channel values without moving structure."""

import numpy as np

from ..errors import ConfigurationError, DimensionError
from ..imagecore import ImageRGB
from . import ChromaMode, ChromaSpec


def _channel_offset(pixels: np.ndarray, offsets) -> np.ndarray:
    height, width, _ = pixels.shape
    out = np.empty_like(pixels)
    rows = np.arange(height)
    cols = np.arange(width)
    for c, (dy, dx) in enumerate(offsets):
        if abs(dy) >= height or abs(dx) >= width:
            raise DimensionError(
                f"Channel {c} offset ({dy}, {dx}) exceeds image size {height}x{width}"
            )
        src_r = np.clip(rows - dy, 0, height - 1)
        src_c = np.clip(cols - dx, 0, width - 1)
        out[:, :, c] = pixels[src_r[:, None], src_c[None, :], c]
    return out


def chromatic_aberration(image: ImageRGB, spec: ChromaSpec) -> ImageRGB:
    """Apply the configured channel reshuffle.

    pixel_shuffle draws an independent permutation of (R, G, B) at every
    pixel, so each pixel keeps its multiset of channel values.
    """
    mode = spec.mode
    if mode == ChromaMode.NONE:
        return image

    rng = np.random.default_rng(spec.seed)
    pixels = image.pixels

    if mode == ChromaMode.GLOBAL_PERMUTE:
        out = pixels[:, :, rng.permutation(3)]
    elif mode == ChromaMode.PIXEL_SHUFFLE:
        order = np.argsort(rng.random(pixels.shape), axis=2)
        out = np.take_along_axis(pixels, order, axis=2)
    elif mode == ChromaMode.CHANNEL_OFFSET:
        out = _channel_offset(pixels, spec.offsets)
    else:
        raise ConfigurationError(f"Unknown chroma mode: {mode!r}")

    return ImageRGB(out)
