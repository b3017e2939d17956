"""The denoising-backend interface.

Public methods check the advertised capabilities first, so an unsupported
call always raises UnsupportedOperationError before any work or I/O.
"""

from abc import ABC, abstractmethod
from enum import Enum

import numpy as np

from ..ddim import DiffusionConfig, LatentTensor
from ..errors import UnsupportedOperationError
from ..imagecore import ImageRGB


class Capability(str, Enum):
    ENCODE = "encode"
    DECODE = "decode"
    PREDICT_EPS = "predict_eps"
    FULL_IMG2IMG = "full_img2img"
    EMBED_IMAGE = "embed_image"
    EMBED_TEXT = "embed_text"
    EXTRACT_FEATURES = "extract_features"


# what ddim.img2img needs to run its own sampler loop
SAMPLER_CAPABILITIES = frozenset({Capability.ENCODE, Capability.DECODE, Capability.PREDICT_EPS})


class DenoiseBackend(ABC):
    """VAE encode/decode, noise prediction and embedding services."""

    name = "backend"

    @property
    @abstractmethod
    def capabilities(self) -> frozenset[Capability]:
        ...

    def supports(self, *caps: Capability) -> bool:
        return all(cap in self.capabilities for cap in caps)

    def require(self, cap: Capability) -> None:
        if cap not in self.capabilities:
            raise UnsupportedOperationError(f"Backend '{self.name}' does not support {cap.value}")

    def encode(self, image: ImageRGB) -> LatentTensor:
        self.require(Capability.ENCODE)
        return self._encode(image)

    def decode(self, z: LatentTensor) -> ImageRGB:
        self.require(Capability.DECODE)
        return self._decode(z)

    def predict_eps(self, z: LatentTensor, t: int, prompt: str = "", guidance: float = 0.0) -> LatentTensor:
        self.require(Capability.PREDICT_EPS)
        return self._predict_eps(z, t, prompt, guidance)

    def img2img(self, image: ImageRGB, cfg: DiffusionConfig) -> ImageRGB:
        """Whole-image denoising executed by the backend itself."""
        self.require(Capability.FULL_IMG2IMG)
        return self._img2img(image, cfg)

    def embed_image(self, image: ImageRGB) -> np.ndarray:
        self.require(Capability.EMBED_IMAGE)
        return self._embed_image(image)

    def embed_text(self, text: str) -> np.ndarray:
        self.require(Capability.EMBED_TEXT)
        return self._embed_text(text)

    def extract_features(self, image: ImageRGB) -> np.ndarray:
        self.require(Capability.EXTRACT_FEATURES)
        return self._extract_features(image)

    def close(self) -> None:
        """Release held resources."""

    def _encode(self, image: ImageRGB) -> LatentTensor:
        raise UnsupportedOperationError(f"{self.name}: encode not implemented")

    def _decode(self, z: LatentTensor) -> ImageRGB:
        raise UnsupportedOperationError(f"{self.name}: decode not implemented")

    def _predict_eps(self, z: LatentTensor, t: int, prompt: str, guidance: float) -> LatentTensor:
        raise UnsupportedOperationError(f"{self.name}: predict_eps not implemented")

    def _img2img(self, image: ImageRGB, cfg: DiffusionConfig) -> ImageRGB:
        raise UnsupportedOperationError(f"{self.name}: img2img not implemented")

    def _embed_image(self, image: ImageRGB) -> np.ndarray:
        raise UnsupportedOperationError(f"{self.name}: embed_image not implemented")

    def _embed_text(self, text: str) -> np.ndarray:
        raise UnsupportedOperationError(f"{self.name}: embed_text not implemented")

    def _extract_features(self, image: ImageRGB) -> np.ndarray:
        raise UnsupportedOperationError(f"{self.name}: extract_features not implemented")
