"""DDIM schedule, sampler and residual analysis over latent tensors."""

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigurationError, DimensionError, NumericalDivergenceError

SEED_MAX = 2**64 - 1
DEFAULT_PROMPT = "a realistic dendrite sample"


@dataclass(frozen=True, eq=False)
class LatentTensor:
    """C x h x w latent; construction fails on NaN or Inf."""
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 3:
            raise DimensionError(f"LatentTensor needs a CxHxW array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericalDivergenceError("Latent tensor contains NaN or Inf values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def check_shape(self, other: "LatentTensor") -> None:
        if self.shape != other.shape:
            raise DimensionError(f"Latent shapes differ: {self.shape} vs {other.shape}")


@dataclass(frozen=True, eq=False)
class Schedule:
    """Cumulative alphas (alpha-bar) indexed by training step t = 0..T-1."""
    alphas: np.ndarray
    beta_start: float = 0.0
    beta_end: float = 0.0

    def __post_init__(self):
        arr = np.array(self.alphas, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise ConfigurationError("Schedule needs at least one step")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ConfigurationError("Schedule alphas must lie in [0, 1]")
        if np.any(np.diff(arr) > 0):
            raise ConfigurationError("Schedule alphas must be non-increasing in t")
        arr.setflags(write=False)
        object.__setattr__(self, "alphas", arr)

    @classmethod
    def from_alphas(cls, alphas) -> "Schedule":
        return cls(alphas=np.asarray(alphas, dtype=np.float64))

    @property
    def T(self) -> int:
        return int(self.alphas.size)

    def alpha(self, t: int) -> float:
        """alpha-bar at step t; t = -1 is the final, noiseless step (1.0)."""
        if t == -1:
            return 1.0
        if not 0 <= t < self.T:
            raise ConfigurationError(f"Step {t} outside schedule of length {self.T}")
        return float(self.alphas[t])

    def alpha_hat(self, t: int) -> float:
        """sqrt(1 - a_t) / sqrt(a_t), the weight of the residual on x0."""
        a = self.alpha(t)
        return float(np.sqrt(1.0 - a) / np.sqrt(a))


class DiffusionConfig(BaseModel):
    """img2img parameters; defaults are the experiment settings (10 steps, 0.3 strength)."""
    model_config = ConfigDict(frozen=True)

    steps: int = Field(default=10, ge=1)
    strength: float = Field(default=0.3, ge=0.0, le=1.0)
    guidance: float = Field(default=10.0, ge=0.0)
    prompt: str = DEFAULT_PROMPT
    seed: int = Field(default=0, ge=0, le=SEED_MAX)
    eta: float = Field(default=0.0, ge=0.0, le=1.0)
    train_steps: int = Field(default=1000, ge=1)
    beta_start: float = Field(default=0.00085, ge=0.0, lt=1.0)
    beta_end: float = Field(default=0.012, ge=0.0, lt=1.0)
    spacing: Literal["leading", "trailing"] = "leading"

    @model_validator(mode="after")
    def _schedule_is_consistent(self):
        if self.beta_start > self.beta_end:
            raise ValueError(f"beta_start {self.beta_start} exceeds beta_end {self.beta_end}")
        if self.steps > self.train_steps:
            raise ValueError(f"steps {self.steps} exceeds train_steps {self.train_steps}")
        return self


@dataclass(frozen=True)
class ResidualReport:
    """Measured shift of the predicted noise and of x0 when a signal is injected."""
    delta: LatentTensor
    alpha_hat: float
    z0_clean: LatentTensor
    z0_shifted: LatentTensor
    identity_residual: float
    z0_reencoded: Optional[LatentTensor] = None
    reencoded_gap: float = 0.0

    def summary(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "delta_rms": float(np.sqrt(np.mean(self.delta.values ** 2))),
            "identity_residual": self.identity_residual,
            "reencoded_gap": self.reencoded_gap,
        }


@dataclass(frozen=True)
class BranchStats:
    ssim: float
    mean: float
    std: float


@dataclass(frozen=True)
class ComparisonReport:
    """Pixel-space vs latent-space injection, side by side."""
    pixel: BranchStats
    latent: BranchStats
    outputs: dict = field(default_factory=dict, compare=False, repr=False)

    def summary(self) -> dict:
        return {
            "pixel_ssim": self.pixel.ssim,
            "pixel_mean": self.pixel.mean,
            "pixel_std": self.pixel.std,
            "latent_ssim": self.latent.ssim,
            "latent_mean": self.latent.mean,
            "latent_std": self.latent.std,
        }


from .schedule import forward_diffuse, make_schedule, predict_x0, timesteps  # noqa: E402
from .sampler import ddim_step, img2img, img2img_latent, iterations_for  # noqa: E402
from .analysis import latent_injection_compare, residual_analysis  # noqa: E402

__all__ = [
    "LatentTensor",
    "Schedule",
    "DiffusionConfig",
    "ResidualReport",
    "ComparisonReport",
    "BranchStats",
    "make_schedule",
    "timesteps",
    "forward_diffuse",
    "predict_x0",
    "ddim_step",
    "img2img",
    "img2img_latent",
    "iterations_for",
    "residual_analysis",
    "latent_injection_compare",
    "DEFAULT_PROMPT",
]
