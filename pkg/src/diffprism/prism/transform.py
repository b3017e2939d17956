"""Style injection: out_c = clip(M * sigma_c + mu_c + n_c), then chroma."""

import numpy as np

from ..errors import DimensionError
from ..imagecore import BinaryMask, ChannelStats, ImageRGB, channel_stats
from . import ChromaSpec, NoiseField, NoiseSpec
from .chroma import chromatic_aberration
from .noise import sample_noise


def _resolve_noise(mask: BinaryMask, style: ChannelStats, noise: NoiseSpec | NoiseField) -> NoiseField:
    if isinstance(noise, NoiseField):
        if noise.shape != mask.shape:
            raise DimensionError(
                f"Noise field {noise.shape} does not match mask {mask.shape}"
            )
        return noise
    return sample_noise(noise, mask.height, mask.width, mean=style.mu)


def prism_field(mask: BinaryMask, style: ChannelStats, noise: NoiseSpec | NoiseField) -> np.ndarray:
    """Pre-clip styled tensor M * sigma + mu + n, shape H x W x 3."""
    field = _resolve_noise(mask, style, noise)
    m = mask.values.astype(np.float64)[:, :, None]
    return m * np.asarray(style.sigma) + np.asarray(style.mu) + field.values


def apply_prism(
    mask: BinaryMask,
    style: ChannelStats,
    noise: NoiseSpec | NoiseField,
    chroma: ChromaSpec,
) -> ImageRGB:
    """Render a mask into a noisy styled image ready for img2img.

    Noise is added before clipping; chromatic aberration runs on the clipped
    image.
    """
    styled = ImageRGB.from_array(prism_field(mask, style, noise), clip=True)
    return chromatic_aberration(styled, chroma)


def random_style(seed: int, height: int = 512, width: int = 512) -> ChannelStats:
    """Statistics of a uniform-random image (mu ~ 0.5, sigma ~ 1/sqrt(12))."""
    rng = np.random.default_rng(seed)
    return channel_stats(ImageRGB(rng.random((height, width, 3))))
