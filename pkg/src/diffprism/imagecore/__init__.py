"""Image and mask carriers plus per-channel statistics."""

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError

# ITU-R 601 luma, the weights PIL uses for mode "L"
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ImageRGB:
    """H x W x 3 image with float pixels in [0, 1], channel order R, G, B."""
    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionError(f"ImageRGB needs an HxWx3 array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"ImageRGB needs H, W >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("ImageRGB pixels must lie in [0, 1]; use ImageRGB.from_array(clip=True)")
        object.__setattr__(self, "pixels", _frozen(arr))

    @classmethod
    def from_array(cls, arr: np.ndarray, clip: bool = True) -> "ImageRGB":
        """Build from HxW (replicated to 3 channels) or HxWx3 data, clipping to [0, 1]."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        if clip:
            arr = np.clip(np.nan_to_num(arr, nan=0.0), 0.0, 1.0)
        return cls(arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def to_gray(self) -> np.ndarray:
        """Luma channel as an HxW float array."""
        return self.pixels @ LUMA_WEIGHTS

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageRGB):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """H x W mask with values exactly 0 or 1."""
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"BinaryMask needs a non-empty HxW array, got shape {arr.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("BinaryMask values must be exactly 0 or 1")
        object.__setattr__(self, "values", _frozen(arr.astype(np.uint8)))

    @classmethod
    def from_array(cls, arr: np.ndarray, threshold: float = 0.5) -> "BinaryMask":
        """Threshold arbitrary grayscale data: 1 where value >= threshold."""
        return cls((np.asarray(arr, dtype=np.float64) >= threshold).astype(np.uint8))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def to_image(self) -> ImageRGB:
        """Black/white rendering of the mask."""
        return ImageRGB.from_array(self.values.astype(np.float64))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean and population standard deviation of a reference image."""
    mu: tuple[float, float, float]
    sigma: tuple[float, float, float]
    n_pixels: int

    def __post_init__(self):
        if len(self.mu) != 3 or len(self.sigma) != 3:
            raise DimensionError("ChannelStats needs 3-vectors for mu and sigma")
        if any(s < 0 for s in self.sigma):
            raise ValueError(f"ChannelStats sigma must be non-negative, got {self.sigma}")
        if self.n_pixels < 1:
            raise ValueError(f"ChannelStats n_pixels must be positive, got {self.n_pixels}")
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))

    @classmethod
    def uniform(cls, mu: float, sigma: float) -> "ChannelStats":
        """Same mean and deviation on all three channels."""
        return cls(mu=(mu, mu, mu), sigma=(sigma, sigma, sigma), n_pixels=1)

    def to_dict(self) -> dict:
        return {"mu": list(self.mu), "sigma": list(self.sigma), "n_pixels": self.n_pixels}


def channel_stats(image: ImageRGB) -> ChannelStats:
    """Per-channel mean and population (1/N) standard deviation."""
    flat = image.pixels.reshape(-1, 3)
    mu = flat.mean(axis=0)
    sigma = np.sqrt(np.mean((flat - mu) ** 2, axis=0))
    return ChannelStats(mu=tuple(mu), sigma=tuple(sigma), n_pixels=flat.shape[0])


from .io import load_image, load_mask, save_image  # noqa: E402

__all__ = [
    "ImageRGB",
    "BinaryMask",
    "ChannelStats",
    "channel_stats",
    "load_image",
    "load_mask",
    "save_image",
    "LUMA_WEIGHTS",
]
