"""Denoising backends: an analytic toy model and a remote-service client."""

from typing import Literal, Optional

import httpx

from ..errors import ConfigurationError
from ..settings import backend_settings
from .base import SAMPLER_CAPABILITIES, Capability, DenoiseBackend
from .remote import RemoteBackend
from .toy import Codec, ToyBackend


def create_backend(
    kind: Literal["toy", "remote"] = "toy",
    *,
    url: Optional[str] = None,
    timeout_s: Optional[float] = None,
    model_id: str = "",
    codec: Codec | str = Codec.IDENTITY,
    predictor_gain: float = 0.1,
    gain_slope: float = 0.0,
    transport: Optional[httpx.BaseTransport] = None,
) -> DenoiseBackend:
    """
    Create a configured backend.

    Args:
        kind: "toy" for the in-process linear model, "remote" for an HTTP service
        url: Service base URL; falls back to PRISM_BACKEND_URL
        timeout_s: Request timeout; falls back to PRISM_BACKEND_TIMEOUT_S
        model_id: Expected model identifier (checked against the handshake)
        codec, predictor_gain, gain_slope: ToyBackend parameters
        transport: Optional httpx transport (tests pass httpx.MockTransport)

    Returns:
        A DenoiseBackend ready for use
    """
    if kind == "toy":
        return ToyBackend(codec=codec, predictor_gain=predictor_gain, gain_slope=gain_slope)
    if kind == "remote":
        return RemoteBackend(backend_settings(url, timeout_s), model_id=model_id, transport=transport)
    raise ConfigurationError(f"Unknown backend kind: {kind!r} (expected 'toy' or 'remote')")


__all__ = [
    "Capability",
    "Codec",
    "DenoiseBackend",
    "RemoteBackend",
    "SAMPLER_CAPABILITIES",
    "ToyBackend",
    "create_backend",
]
