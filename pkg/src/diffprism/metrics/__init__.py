"""Evaluation metrics: Frechet distance, SSIM, mask recovery, entropy, CLIP score."""

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..errors import DimensionError


@dataclass(frozen=True, eq=False)
class GaussianStats:
    """Mean and covariance of a feature distribution."""
    mean: np.ndarray
    cov: np.ndarray
    n_samples: int

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        cov = np.atleast_2d(np.array(self.cov, dtype=np.float64))
        d = mean.size
        if cov.shape != (d, d):
            raise DimensionError(f"Covariance shape {cov.shape} does not match mean dimension {d}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-9):
            raise ValueError("Covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min(initial=0.0) < -1e-8:
            raise ValueError("Covariance must be positive semi-definite")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be positive, got {self.n_samples}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


class MetricValue(BaseModel):
    value: float
    n_samples: int = Field(ge=1)


class MetricReport(BaseModel):
    """Evaluation results; every populated metric carries its sample count."""
    fid: Optional[MetricValue] = None
    nfid: Optional[MetricValue] = None
    ssim: Optional[MetricValue] = None
    clip_score: Optional[MetricValue] = None
    entropy_bits: Optional[MetricValue] = None
    diversity: Optional[MetricValue] = None
    params: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_ranges(self):
        for name in ("fid", "nfid", "entropy_bits", "diversity"):
            metric = getattr(self, name)
            if metric is not None and metric.value < 0:
                raise ValueError(f"{name} must be non-negative, got {metric.value}")
        if self.ssim is not None and not -1.0 <= self.ssim.value <= 1.0:
            raise ValueError(f"ssim must lie in [-1, 1], got {self.ssim.value}")
        return self

    def flat(self) -> dict[str, float | int | None]:
        """Scalar view for tables: value and sample count per metric."""
        row: dict[str, float | int | None] = {}
        for name in ("fid", "nfid", "ssim", "clip_score", "entropy_bits", "diversity"):
            metric = getattr(self, name)
            row[name] = metric.value if metric is not None else None
            row[f"{name}_n"] = metric.n_samples if metric is not None else None
        return row


from .frechet import MomentAccumulator, frechet_distance, gaussian_stats, nfid  # noqa: E402
from .ssim import ssim  # noqa: E402
from .classifier import (  # noqa: E402
    MaskClassifier,
    morphology_similarity,
    pixel_features,
    predict_mask,
    train_mask_classifier,
)
from .entropy import detail_entropy, shannon_entropy  # noqa: E402
from .clip import clip_score  # noqa: E402
from .diversity import mean_pairwise_distance  # noqa: E402

__all__ = [
    "GaussianStats",
    "MetricValue",
    "MetricReport",
    "MomentAccumulator",
    "gaussian_stats",
    "frechet_distance",
    "nfid",
    "ssim",
    "MaskClassifier",
    "train_mask_classifier",
    "predict_mask",
    "pixel_features",
    "morphology_similarity",
    "shannon_entropy",
    "detail_entropy",
    "clip_score",
    "mean_pairwise_distance",
]
