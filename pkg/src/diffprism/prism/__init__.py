"""The Prism pixel-domain transform: noise, chromatic aberration, style injection."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import DimensionError

SEED_MAX = 2**64 - 1


class NoiseKind(str, Enum):
    GAUSSIAN = "gaussian"
    SALT_PEPPER = "salt_pepper"
    PERLIN = "perlin"


class ChromaMode(str, Enum):
    NONE = "none"
    GLOBAL_PERMUTE = "global_permute"
    PIXEL_SHUFFLE = "pixel_shuffle"
    CHANNEL_OFFSET = "channel_offset"


class NoiseSpec(BaseModel):
    """Parameters of the injected signal n.

    ``mu=None`` means the mean is taken from the style statistics, the literal
    reading of n ~ N(mu, sigma). Salt-and-pepper uses ``sigma`` as impulse
    amplitude and ignores ``mu``.
    """
    model_config = ConfigDict(frozen=True, use_enum_values=False)

    kind: NoiseKind = NoiseKind.GAUSSIAN
    mu: Optional[float] = None
    sigma: float = Field(default=0.1, ge=0.0)
    density: float = Field(default=0.05, ge=0.0, le=1.0)
    scale: float = Field(default=32.0, gt=0.0)
    octaves: int = Field(default=4, ge=1)
    persistence: float = Field(default=0.5, gt=0.0)
    seed: int = Field(default=0, ge=0, le=SEED_MAX)


class ChromaSpec(BaseModel):
    """Chromatic aberration settings; ``offsets`` holds one (dy, dx) per channel."""
    model_config = ConfigDict(frozen=True)

    mode: ChromaMode = ChromaMode.PIXEL_SHUFFLE
    offsets: tuple[tuple[int, int], tuple[int, int], tuple[int, int]] = ((0, 0), (0, 0), (0, 0))
    seed: int = Field(default=0, ge=0, le=SEED_MAX)


@dataclass(frozen=True, eq=False)
class NoiseField:
    """Unclipped H x W x 3 realization of a NoiseSpec."""
    values: np.ndarray
    spec: NoiseSpec

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionError(f"NoiseField needs an HxWx3 array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]


from .noise import sample_noise  # noqa: E402
from .chroma import chromatic_aberration  # noqa: E402
from .transform import apply_prism, prism_field, random_style  # noqa: E402

__all__ = [
    "NoiseKind",
    "ChromaMode",
    "NoiseSpec",
    "ChromaSpec",
    "NoiseField",
    "sample_noise",
    "chromatic_aberration",
    "apply_prism",
    "prism_field",
    "random_style",
]
