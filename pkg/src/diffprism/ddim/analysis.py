"""How an injected signal propagates through noise prediction and x0 recovery."""

from typing import TYPE_CHECKING, Optional

import numpy as np

from ..errors import DimensionError
from ..imagecore import ImageRGB
from ..metrics.ssim import ssim
from ..prism import NoiseField
from . import BranchStats, ComparisonReport, DiffusionConfig, LatentTensor, ResidualReport, Schedule
from .sampler import img2img_latent
from .schedule import make_schedule, predict_x0

if TYPE_CHECKING:
    from ..backends.base import DenoiseBackend


def _check_noise(x: ImageRGB, n: NoiseField) -> None:
    if n.shape != x.shape:
        raise DimensionError(f"Noise field {n.shape} does not match image {x.shape}")


def residual_analysis(
    x: ImageRGB,
    n: NoiseField,
    backend: "DenoiseBackend",
    t: int,
    sched: Schedule,
    prompt: str = "",
    guidance: float = 0.0,
) -> ResidualReport:
    """Measure delta = eps(E(x + n)) - eps(E(x)) and its effect on x0.

    ``z0_shifted`` re-uses the clean z_t with the shifted noise prediction, for
    which z0_shifted = z0_clean - alpha_hat * delta holds exactly;
    ``identity_residual`` is the measured violation of that identity.
    ``z0_reencoded`` also moves z_t to E(x + n), and ``reencoded_gap`` reports how
    far that lands from ``z0_shifted``. x + n is clipped to [0, 1] before encoding.
    """
    _check_noise(x, n)
    z_t = backend.encode(x)
    z_t_shifted = backend.encode(ImageRGB.from_array(x.pixels + n.values, clip=True))

    eps = backend.predict_eps(z_t, t, prompt, guidance)
    eps_shifted = backend.predict_eps(z_t_shifted, t, prompt, guidance)
    delta = LatentTensor(eps_shifted.values - eps.values)

    z0_clean = predict_x0(z_t, eps, t, sched)
    z0_shifted = predict_x0(z_t, LatentTensor(eps.values + delta.values), t, sched)
    alpha_hat = sched.alpha_hat(t)
    identity_residual = float(np.max(np.abs((z0_shifted.values - z0_clean.values) + alpha_hat * delta.values)))

    z0_reencoded = predict_x0(z_t_shifted, eps_shifted, t, sched)
    reencoded_gap = float(np.max(np.abs(z0_reencoded.values - z0_shifted.values)))

    return ResidualReport(
        delta=delta,
        alpha_hat=alpha_hat,
        z0_clean=z0_clean,
        z0_shifted=z0_shifted,
        identity_residual=identity_residual,
        z0_reencoded=z0_reencoded,
        reencoded_gap=reencoded_gap,
    )


def _latent_like(noise: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Nearest-neighbor resample of an HxWx3 field onto a CxhXw latent grid.

    Per-element energy is kept; on a pixel-aligned latent the field is copied.
    """
    channels, h, w = shape
    height, width, _ = noise.shape
    rows = (np.arange(h) * height) // h
    cols = (np.arange(w) * width) // w
    sub = noise[rows][:, cols].transpose(2, 0, 1)
    return sub[np.arange(channels) % 3]


def _branch(out: ImageRGB, reference: ImageRGB) -> BranchStats:
    return BranchStats(
        ssim=ssim(out, reference),
        mean=float(out.pixels.mean()),
        std=float(out.pixels.std()),
    )


def latent_injection_compare(
    x: ImageRGB,
    n: NoiseField,
    backend: "DenoiseBackend",
    cfg: DiffusionConfig,
    sched: Optional[Schedule] = None,
) -> ComparisonReport:
    """Run img2img with n injected in pixel space and, with equal energy, in latent space."""
    from ..backends.base import SAMPLER_CAPABILITIES

    _check_noise(x, n)
    for cap in SAMPLER_CAPABILITIES:
        backend.require(cap)
    sched = sched or make_schedule(cfg.train_steps, cfg.beta_start, cfg.beta_end)

    pixel_in = ImageRGB.from_array(x.pixels + n.values, clip=True)
    pixel_out = img2img_latent(backend.encode(pixel_in), backend, cfg, sched)

    z = backend.encode(x)
    z_perturbed = LatentTensor(z.values + _latent_like(n.values, z.shape))
    latent_out = img2img_latent(z_perturbed, backend, cfg, sched)

    return ComparisonReport(
        pixel=_branch(pixel_out, x),
        latent=_branch(latent_out, x),
        outputs={"pixel": pixel_out, "latent": latent_out},
    )
