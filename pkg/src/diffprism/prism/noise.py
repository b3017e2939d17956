"""Noise generators for the injected signal: Gaussian, salt-and-pepper, Perlin."""

from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, DimensionError
from . import NoiseField, NoiseKind, NoiseSpec


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6 - 15) + 10)


def _perlin_octave(rng: np.random.Generator, height: int, width: int, period: float) -> np.ndarray:
    """One octave of 2-D gradient noise with lattice spacing ``period`` pixels."""
    ys = np.arange(height) / period
    xs = np.arange(width) / period
    y0 = np.floor(ys).astype(np.int64)[:, None]
    x0 = np.floor(xs).astype(np.int64)[None, :]
    fy = (ys[:, None] - y0)
    fx = (xs[None, :] - x0)

    angles = rng.uniform(0.0, 2.0 * np.pi, size=(int(y0.max()) + 2, int(x0.max()) + 2))
    gy, gx = np.sin(angles), np.cos(angles)

    def corner(dy: int, dx: int) -> np.ndarray:
        iy, ix = y0 + dy, x0 + dx
        return gx[iy, ix] * (fx - dx) + gy[iy, ix] * (fy - dy)

    u, v = _fade(fx), _fade(fy)
    top = corner(0, 0) + u * (corner(0, 1) - corner(0, 0))
    bottom = corner(1, 0) + u * (corner(1, 1) - corner(1, 0))
    return top + v * (bottom - top)


def perlin_field(spec: NoiseSpec, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """Fractal Perlin noise per channel, standardized to zero mean and unit std."""
    out = np.empty((height, width, 3))
    for c in range(3):
        acc = np.zeros((height, width))
        amplitude, period = 1.0, float(spec.scale)
        for _ in range(spec.octaves):
            if period < 1.0:
                break
            acc += amplitude * _perlin_octave(rng, height, width, period)
            amplitude *= spec.persistence
            period /= 2.0
        std = acc.std()
        out[:, :, c] = (acc - acc.mean()) / std if std > 0 else 0.0
    return out


def _salt_pepper(spec: NoiseSpec, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    n_sites = height * width
    n_each = int(round(spec.density / 2.0 * n_sites))
    flat = np.zeros(n_sites)
    chosen = rng.permutation(n_sites)[: 2 * n_each]
    flat[chosen[:n_each]] = spec.sigma
    flat[chosen[n_each:]] = -spec.sigma
    return np.repeat(flat.reshape(height, width, 1), 3, axis=2)


def sample_noise(
    spec: NoiseSpec,
    height: int,
    width: int,
    mean: Optional[float | Sequence[float]] = None,
) -> NoiseField:
    """Draw a deterministic noise field for ``spec``.

    ``mean`` is the fallback per-channel mean used when ``spec.mu`` is unset
    (the style mean in apply_prism); without either the mean is 0.
    """
    if height < 1 or width < 1:
        raise DimensionError(f"Noise field needs positive dimensions, got {height}x{width}")

    if spec.mu is not None:
        mu = np.full(3, float(spec.mu))
    elif mean is not None:
        mu = np.broadcast_to(np.asarray(mean, dtype=np.float64), (3,)).copy()
    else:
        mu = np.zeros(3)

    rng = np.random.default_rng(spec.seed)
    kind = spec.kind

    if kind == NoiseKind.GAUSSIAN:
        if spec.sigma == 0:
            values = np.broadcast_to(mu, (height, width, 3)).copy()
        else:
            values = mu + spec.sigma * rng.standard_normal((height, width, 3))
    elif kind == NoiseKind.SALT_PEPPER:
        values = _salt_pepper(spec, height, width, rng)
    elif kind == NoiseKind.PERLIN:
        values = mu + spec.sigma * perlin_field(spec, height, width, rng)
    else:
        raise ConfigurationError(f"Unknown noise kind: {kind!r}")

    return NoiseField(values=values, spec=spec)
