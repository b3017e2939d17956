"""Noise schedule and the forward/inverse diffusion algebra.

Internally the sampler uses the sqrt(alpha-bar) coefficient on x0, as the
pretrained latent-diffusion models do. ``forward_diffuse`` defaults to the
printed form with alpha_t on x0; pass ``convention="sqrt"`` for the form
that ``predict_x0`` inverts exactly.
"""

from typing import Literal

import numpy as np

from ..errors import ConfigurationError, SingularityError
from . import LatentTensor, Schedule

Convention = Literal["printed", "sqrt"]
Spacing = Literal["leading", "trailing"]


def make_schedule(T: int, beta_start: float, beta_end: float) -> Schedule:
    """Scaled-linear schedule: betas linear in sqrt space, alphas their cumulative product."""
    if T < 1:
        raise ConfigurationError(f"Schedule length must be >= 1, got {T}")
    if not (0.0 <= beta_start <= beta_end < 1.0):
        raise ConfigurationError(
            f"Need 0 <= beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )
    betas = np.linspace(np.sqrt(beta_start), np.sqrt(beta_end), T, dtype=np.float64) ** 2
    alphas = np.cumprod(1.0 - betas)
    return Schedule(alphas=alphas, beta_start=beta_start, beta_end=beta_end)


def timesteps(steps: int, T: int, spacing: Spacing = "leading") -> np.ndarray:
    """Descending DDIM step indices.

    "leading": 10 of 1000 -> 900..0; full strength never starts above T - T//steps.
    "trailing": 10 of 1000 -> 999..99; full strength starts at T - 1, i.e. from
    (almost) pure noise.
    """
    if steps < 1 or steps > T:
        raise ConfigurationError(f"Need 1 <= steps <= {T}, got {steps}")
    if spacing == "leading":
        ratio = T // steps
        return (np.arange(steps, dtype=np.int64) * ratio)[::-1]
    if spacing == "trailing":
        return np.round(np.arange(T, 0, -T / steps)).astype(np.int64)[:steps] - 1
    raise ConfigurationError(f"Unknown timestep spacing: {spacing!r}")


def forward_diffuse(
    x0: LatentTensor,
    t: int,
    eps: LatentTensor,
    sched: Schedule,
    convention: Convention = "printed",
) -> LatentTensor:
    """Noise x0 to step t: a_t * x0 + sqrt(1 - a_t) * eps (printed form)."""
    x0.check_shape(eps)
    a = sched.alpha(t)
    if convention == "printed":
        signal = a
    elif convention == "sqrt":
        signal = np.sqrt(a)
    else:
        raise ConfigurationError(f"Unknown coefficient convention: {convention!r}")
    return LatentTensor(signal * x0.values + np.sqrt(1.0 - a) * eps.values)


def predict_x0(z_t: LatentTensor, eps_pred: LatentTensor, t: int, sched: Schedule) -> LatentTensor:
    """(z_t - sqrt(1 - a_t) * eps_pred) / sqrt(a_t)."""
    z_t.check_shape(eps_pred)
    a = sched.alpha(t)
    if a <= 0.0:
        raise SingularityError(f"alpha-bar vanishes at step {t}; x0 is undefined")
    return LatentTensor((z_t.values - np.sqrt(1.0 - a) * eps_pred.values) / np.sqrt(a))
