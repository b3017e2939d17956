"""Raster file I/O. Pixels are quantized only here, at the file boundary."""

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import ConfigurationError, ImageFormatError, ImageIOError
from . import BinaryMask, ImageRGB

# 16-bit PIL modes and their max code value
_WIDE_MODES = {"I;16", "I;16B", "I;16L", "I;16N", "I"}


def _decode(path: Path) -> np.ndarray:
    """Read a raster into a float HxW or HxWx3 array in [0, 1]."""
    if not path.exists():
        raise ImageIOError(f"Image not found: {path}")
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in _WIDE_MODES:
                arr = np.asarray(img, dtype=np.float64) / 65535.0
            elif mode in ("L", "RGB"):
                arr = np.asarray(img, dtype=np.float64) / 255.0
            elif mode == "LA":
                arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
            else:
                # palette, RGBA, CMYK, 1-bit
                arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"Cannot decode image {path}: {exc}") from exc
    except OSError as exc:
        raise ImageFormatError(f"Cannot decode image {path}: {exc}") from exc
    return np.clip(arr, 0.0, 1.0)


def load_image(path: str | Path) -> ImageRGB:
    """Load an 8- or 16-bit raster; grayscale inputs are replicated to RGB."""
    return ImageRGB.from_array(_decode(Path(path)))


def load_mask(path: str | Path, threshold: float = 0.5) -> BinaryMask:
    """Load a raster and threshold its luma: 1 iff gray >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ConfigurationError(f"Mask threshold must lie in (0, 1), got {threshold}")
    return BinaryMask.from_array(load_image(path).to_gray(), threshold=threshold)


def save_image(image: ImageRGB, path: str | Path) -> None:
    """Write a lossless 8-bit PNG (or TIFF by suffix), round(v * 255) per channel."""
    path = Path(path)
    if not path.parent.exists():
        raise ImageIOError(f"Output directory does not exist: {path.parent}")
    data = np.floor(image.pixels * 255.0 + 0.5).astype(np.uint8)
    try:
        Image.fromarray(data, mode="RGB").save(path)
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"Cannot write image {path}: {exc}") from exc
