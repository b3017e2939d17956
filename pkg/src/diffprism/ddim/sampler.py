"""DDIM update and the image-to-image loop driven by a denoising backend."""

import math
from typing import TYPE_CHECKING, Optional

import numpy as np

from ..errors import ConfigurationError, SequencingError, UnsupportedOperationError
from ..imagecore import ImageRGB
from ..logs import get_logger
from . import DiffusionConfig, LatentTensor, Schedule
from .schedule import forward_diffuse, make_schedule, predict_x0, timesteps

if TYPE_CHECKING:
    from ..backends.base import DenoiseBackend

logger = get_logger(__name__)


def ddim_step(
    z_t: LatentTensor,
    eps_pred: LatentTensor,
    t: int,
    t_prev: int,
    sched: Schedule,
    eta: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> LatentTensor:
    """One DDIM update from step t to t_prev (t_prev = -1 means fully denoised).

    With eta = 0 the update is deterministic:
    z_prev = sqrt(a_prev) * x0_hat + sqrt(1 - a_prev) * eps_pred.
    """
    if t_prev >= t:
        raise SequencingError(f"DDIM steps must descend, got t={t}, t_prev={t_prev}")
    if not 0.0 <= eta <= 1.0:
        raise ConfigurationError(f"eta must lie in [0, 1], got {eta}")

    a_t = sched.alpha(t)
    a_prev = sched.alpha(t_prev)
    x0 = predict_x0(z_t, eps_pred, t, sched)

    sigma = 0.0
    if eta > 0.0 and a_t < 1.0:
        if rng is None:
            raise ConfigurationError("Stochastic DDIM (eta > 0) needs a random generator")
        sigma = eta * math.sqrt((1.0 - a_prev) / (1.0 - a_t)) * math.sqrt(1.0 - a_t / a_prev)

    direction = math.sqrt(max(1.0 - a_prev - sigma**2, 0.0))
    out = math.sqrt(a_prev) * x0.values + direction * eps_pred.values
    if sigma > 0.0:
        out = out + sigma * rng.standard_normal(z_t.shape)
    return LatentTensor(out)


def iterations_for(strength: float, steps: int) -> int:
    """floor(strength * steps) denoising iterations; the epsilon absorbs float noise like 0.7 * 10."""
    return min(steps, int(math.floor(strength * steps + 1e-9)))


def img2img_latent(
    z0: LatentTensor,
    backend: "DenoiseBackend",
    cfg: DiffusionConfig,
    sched: Optional[Schedule] = None,
) -> ImageRGB:
    """Noise ``z0`` to the strength-derived start step, run DDIM to the end, decode."""
    sched = sched or make_schedule(cfg.train_steps, cfg.beta_start, cfg.beta_end)
    n_iter = iterations_for(cfg.strength, cfg.steps)
    if n_iter == 0:
        return backend.decode(z0)

    tail = timesteps(cfg.steps, sched.T, cfg.spacing)[cfg.steps - n_iter:]
    rng = np.random.default_rng(cfg.seed)
    eps = LatentTensor(rng.standard_normal(z0.shape))
    z = forward_diffuse(z0, int(tail[0]), eps, sched, convention="sqrt")

    for i, t in enumerate(tail):
        t_prev = int(tail[i + 1]) if i + 1 < len(tail) else -1
        eps_pred = backend.predict_eps(z, int(t), cfg.prompt, cfg.guidance)
        z = ddim_step(z, eps_pred, int(t), t_prev, sched, cfg.eta, rng=rng)
        logger.debug("ddim step=%d/%d t=%d t_prev=%d", i + 1, n_iter, int(t), t_prev)

    return backend.decode(z)


def img2img(
    image: ImageRGB,
    backend: "DenoiseBackend",
    cfg: DiffusionConfig,
    sched: Optional[Schedule] = None,
) -> ImageRGB:
    """Image-to-image with denoising strength.

    Runs the local DDIM loop when the backend exposes encode, decode and
    predict_eps, otherwise delegates to the backend's own img2img.
    """
    from ..backends.base import SAMPLER_CAPABILITIES, Capability

    if backend.supports(*SAMPLER_CAPABILITIES):
        return img2img_latent(backend.encode(image), backend, cfg, sched)
    if backend.supports(Capability.FULL_IMG2IMG):
        return backend.img2img(image, cfg)
    raise UnsupportedOperationError(
        f"Backend '{backend.name}' offers neither a sampler interface nor full img2img"
    )
