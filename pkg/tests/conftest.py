"""Shared fixtures: small PNG masks, a coloured style image and job configs."""

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from diffprism.backends import ToyBackend
from diffprism.ddim import DiffusionConfig
from diffprism.imagecore import BinaryMask
from diffprism.pipeline import EvalConfig, JobConfig
from diffprism.prism import ChromaMode, ChromaSpec, NoiseSpec

SIZE = 32


def write_png(path: Path, arr: np.ndarray) -> Path:
    """Write float data in [0, 1] as an 8-bit L or RGB PNG."""
    data = np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(data).save(path)
    return path


def disc(size: int = SIZE, radius: float = 10.0) -> np.ndarray:
    yy, xx = np.mgrid[:size, :size]
    centre = (size - 1) / 2.0
    return ((yy - centre) ** 2 + (xx - centre) ** 2 <= radius**2).astype(np.float64)


def bar(size: int = SIZE) -> np.ndarray:
    arr = np.zeros((size, size))
    arr[size // 4: 3 * size // 4, size // 8: size // 2] = 1.0
    return arr


@pytest.fixture
def disc_mask() -> BinaryMask:
    return BinaryMask.from_array(disc())


@pytest.fixture
def mask_dir(tmp_path) -> Path:
    root = tmp_path / "masks"
    root.mkdir()
    write_png(root / "disc.png", disc())
    write_png(root / "bar.png", bar())
    return root


@pytest.fixture
def style_path(tmp_path) -> Path:
    """Left half (0, 0.2, 0.1), right half (0.8, 1.0, 0.9): mu (0.4, 0.6, 0.5), sigma 0.4 per channel."""
    arr = np.zeros((SIZE, SIZE, 3))
    arr[:, : SIZE // 2] = (0.0, 0.2, 0.1)
    arr[:, SIZE // 2:] = (0.8, 1.0, 0.9)
    return write_png(tmp_path / "style.png", arr)


@pytest.fixture
def toy() -> ToyBackend:
    return ToyBackend()


@pytest.fixture
def make_job(tmp_path, mask_dir, style_path):
    """JobConfig factory for fast toy runs; keyword arguments override fields."""

    def factory(**overrides) -> JobConfig:
        base = dict(
            masks=mask_dir,
            style=str(style_path),
            noise=NoiseSpec(mu=0.0, sigma=0.05),
            chroma=ChromaSpec(mode=ChromaMode.NONE),
            diffusion=DiffusionConfig(strength=0.1),
            samples_per_mask=2,
            output_dir=tmp_path / "run",
            eval=EvalConfig(ssim=False, clip=True, entropy=True, diversity=True),
        )
        base.update(overrides)
        return JobConfig(**base)

    return factory
