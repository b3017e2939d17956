"""Environment-driven settings for the remote denoising backend."""

import os
from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class BackendSettings:
    """Connection settings for a remote latent-diffusion service."""
    base_url: str
    timeout_s: float = 60.0
    retries: int = 2
    max_connections: int = 4
    backoff_s: float = 0.5


def _env_number(name: str, default: float, cast=float):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{name} must be a number, got {raw!r}") from exc


def backend_settings(base_url: str | None = None, timeout_s: float | None = None) -> BackendSettings:
    """Build backend settings from arguments, falling back to environment variables."""
    url = base_url or os.environ.get("PRISM_BACKEND_URL")
    if not url:
        raise ConfigurationError(
            "Missing remote backend URL.\n"
            "Set PRISM_BACKEND_URL in your .env file or backend.url in the job config.\n"
            "The service must expose the /v1 img2img protocol (see README)."
        )

    timeout = timeout_s if timeout_s is not None else _env_number("PRISM_BACKEND_TIMEOUT_S", 60.0)
    retries = _env_number("PRISM_BACKEND_RETRIES", 2, int)
    max_connections = _env_number("PRISM_BACKEND_MAX_CONNECTIONS", 4, int)
    backoff = _env_number("PRISM_BACKEND_BACKOFF_S", 0.5)

    if timeout <= 0:
        raise ConfigurationError(f"Backend timeout must be positive, got {timeout}")
    if retries < 0:
        raise ConfigurationError(f"Backend retries must be non-negative, got {retries}")
    if max_connections < 1:
        raise ConfigurationError(f"Backend connection limit must be >= 1, got {max_connections}")
    if backoff < 0:
        raise ConfigurationError(f"Backend backoff must be non-negative, got {backoff}")

    return BackendSettings(
        base_url=url.rstrip("/"),
        timeout_s=float(timeout),
        retries=retries,
        max_connections=max_connections,
        backoff_s=float(backoff),
    )
