"""Linear stand-in for a latent-diffusion model, exact enough to check the algebra by hand."""

import hashlib
from enum import Enum

import numpy as np

from ..ddim import LatentTensor
from ..errors import DimensionError
from ..imagecore import ImageRGB
from .base import Capability, DenoiseBackend


class Codec(str, Enum):
    IDENTITY = "identity"
    AVGPOOL_2 = "avgpool_2"
    AVGPOOL_4 = "avgpool_4"
    AVGPOOL_8 = "avgpool_8"

    @property
    def factor(self) -> int:
        return 1 if self is Codec.IDENTITY else int(self.value.rsplit("_", 1)[1])


class ToyBackend(DenoiseBackend):
    """Average-pool encoder, nearest-neighbor decoder and eps(z, t) = k(t) * z.

    k(t) = predictor_gain + gain_slope * t; the slope defaults to 0 so the
    predictor is time-independent. Latents have 3 pixel-aligned channels.
    """

    name = "toy"

    def __init__(
        self,
        codec: Codec | str = Codec.IDENTITY,
        predictor_gain: float = 0.1,
        gain_slope: float = 0.0,
        feature_grid: int = 8,
    ):
        self.codec = Codec(codec)
        self.predictor_gain = float(predictor_gain)
        self.gain_slope = float(gain_slope)
        self.feature_grid = int(feature_grid)

    @property
    def capabilities(self) -> frozenset[Capability]:
        return frozenset({
            Capability.ENCODE,
            Capability.DECODE,
            Capability.PREDICT_EPS,
            Capability.EMBED_IMAGE,
            Capability.EMBED_TEXT,
            Capability.EXTRACT_FEATURES,
        })

    def gain(self, t: int) -> float:
        return self.predictor_gain + self.gain_slope * t

    def encode_array(self, pixels: np.ndarray) -> np.ndarray:
        """HxWx3 -> 3xhxw block average; linear."""
        k = self.codec.factor
        height, width, channels = pixels.shape
        if height % k or width % k:
            raise DimensionError(f"{self.codec.value} needs dimensions divisible by {k}, got {height}x{width}")
        pooled = pixels.reshape(height // k, k, width // k, k, channels).mean(axis=(1, 3))
        return pooled.transpose(2, 0, 1)

    def decode_array(self, z: np.ndarray) -> np.ndarray:
        """3xhxw -> HxWx3 nearest-neighbor upsample; linear."""
        k = self.codec.factor
        up = np.repeat(np.repeat(z, k, axis=1), k, axis=2)
        return up.transpose(1, 2, 0)

    def _encode(self, image: ImageRGB) -> LatentTensor:
        return LatentTensor(self.encode_array(image.pixels))

    def _decode(self, z: LatentTensor) -> ImageRGB:
        return ImageRGB.from_array(self.decode_array(z.values), clip=True)

    def _predict_eps(self, z: LatentTensor, t: int, prompt: str, guidance: float) -> LatentTensor:
        # prompt and guidance have no effect on the toy predictor
        return LatentTensor(self.gain(t) * z.values)

    def _embed_image(self, image: ImageRGB) -> np.ndarray:
        return image.pixels.reshape(-1, 3).mean(axis=0)

    def _embed_text(self, text: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")
        return np.random.default_rng(seed).random(3)

    def _extract_features(self, image: ImageRGB) -> np.ndarray:
        """Block means on a feature_grid x feature_grid raster, flattened."""
        grid = self.feature_grid
        row_groups = np.array_split(np.arange(image.height), min(grid, image.height))
        col_groups = np.array_split(np.arange(image.width), min(grid, image.width))
        cells = [
            image.pixels[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1].mean(axis=(0, 1))
            for rows in row_groups
            for cols in col_groups
        ]
        return np.concatenate(cells)
