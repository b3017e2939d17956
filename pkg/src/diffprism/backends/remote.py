"""HTTP client for a remote latent-diffusion service (JSON over httpx).

Wire protocol:
  GET  /v1/capabilities -> {capabilities, dims, model_id}
  POST /v1/img2img      {image_b64, prompt, steps, strength, guidance, seed, eta} -> {image_b64, model_id, seed}
  POST /v1/encode       {image_b64} -> {shape, data}
  POST /v1/decode       {shape, data} -> {image_b64}
  POST /v1/predict_eps  {shape, data, t, prompt, guidance} -> {shape, data}
  POST /v1/embed        {image_b64} | {text} -> {vector, dim}
  POST /v1/features     {image_b64} -> {vector, dim}
"""

import base64
import binascii
import io
import threading
import time
import uuid
from typing import Any, Optional

import httpx
import numpy as np
from PIL import Image, UnidentifiedImageError

from ..ddim import DiffusionConfig, LatentTensor
from ..errors import BackendDecodeError, BackendError, BackendTimeoutError, DimensionError
from ..imagecore import ImageRGB
from ..logs import get_logger
from ..settings import BackendSettings
from .base import Capability, DenoiseBackend

logger = get_logger(__name__)

RETRYABLE_STATUS = {429, 500, 502, 503, 504}
BODY_EXCERPT = 200


def encode_png_b64(image: ImageRGB) -> str:
    data = np.floor(image.pixels * 255.0 + 0.5).astype(np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(data, mode="RGB").save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def decode_png_b64(payload: Any) -> ImageRGB:
    if not isinstance(payload, str):
        raise BackendDecodeError("Response image is missing or not a base64 string")
    try:
        raw = base64.b64decode(payload, validate=True)
        with Image.open(io.BytesIO(raw)) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except (binascii.Error, ValueError, UnidentifiedImageError, OSError) as exc:
        raise BackendDecodeError(f"Cannot decode response image: {exc}") from exc
    return ImageRGB(arr)


def _latent_payload(z: LatentTensor) -> dict:
    return {"shape": list(z.shape), "data": z.values.reshape(-1).tolist()}


def _latent_from(body: dict) -> LatentTensor:
    try:
        shape = tuple(int(s) for s in body["shape"])
        data = np.asarray(body["data"], dtype=np.float64)
        return LatentTensor(data.reshape(shape))
    except (KeyError, TypeError, ValueError) as exc:
        raise BackendDecodeError(f"Malformed latent in response: {exc}") from exc


class ServiceTransport:
    """httpx client with bounded retries; a logical request keeps one request id."""

    def __init__(self, settings: BackendSettings, transport: Optional[httpx.BaseTransport] = None):
        self.settings = settings
        self._client = httpx.Client(
            base_url=settings.base_url,
            timeout=settings.timeout_s,
            limits=httpx.Limits(max_connections=settings.max_connections),
            transport=transport,
        )

    def request(self, method: str, path: str, payload: Optional[dict] = None) -> dict:
        request_id = uuid.uuid4().hex
        attempts = self.settings.retries + 1
        last_error: Optional[BackendError] = None

        for attempt in range(1, attempts + 1):
            try:
                response = self._client.request(
                    method,
                    path,
                    json=payload,
                    headers={"X-Request-ID": request_id},
                )
            except httpx.TimeoutException as exc:
                last_error = BackendTimeoutError(
                    f"{method} {path} timed out after {self.settings.timeout_s}s",
                    attempts=attempt,
                    request_id=request_id,
                )
                last_error.__cause__ = exc
            except httpx.TransportError as exc:
                last_error = BackendError(
                    f"{method} {path} failed: {exc}", attempts=attempt, request_id=request_id
                )
                last_error.__cause__ = exc
            else:
                if response.is_success:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise BackendDecodeError(
                            f"{method} {path} returned non-JSON body",
                            status=response.status_code,
                            body=response.text[:BODY_EXCERPT],
                            attempts=attempt,
                            request_id=request_id,
                        ) from exc
                last_error = BackendError(
                    f"{method} {path} returned HTTP {response.status_code}",
                    status=response.status_code,
                    body=response.text[:BODY_EXCERPT],
                    attempts=attempt,
                    request_id=request_id,
                )
                if response.status_code not in RETRYABLE_STATUS:
                    raise last_error

            if attempt < attempts:
                delay = self.settings.backoff_s * 2 ** (attempt - 1)
                logger.warning(
                    "backend retry path=%s attempt=%d/%d delay=%.2fs request_id=%s error=%s",
                    path, attempt, attempts, delay, request_id, last_error,
                )
                if delay > 0:
                    time.sleep(delay)

        raise last_error

    def close(self):
        self._client.close()


class RemoteBackend(DenoiseBackend):
    """Client for a pretrained latent-diffusion model served over HTTP.

    The capability handshake runs lazily on first use and is cached.
    """

    name = "remote"

    def __init__(
        self,
        settings: BackendSettings,
        model_id: str = "",
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.settings = settings
        self.model_id = model_id
        self._transport = transport
        self._http: Optional[ServiceTransport] = None
        self._capabilities: Optional[frozenset[Capability]] = None
        self.dims: dict[str, int] = {}
        self._lock = threading.Lock()

    def connect(self) -> None:
        """Open the connection pool and fetch capabilities."""
        with self._lock:
            if self._capabilities is not None:
                return
            if self._http is None:
                self._http = ServiceTransport(self.settings, self._transport)
            body = self._http.request("GET", "/v1/capabilities")
            caps = set()
            for name in body.get("capabilities", []):
                try:
                    caps.add(Capability(name))
                except ValueError:
                    logger.warning("backend unknown capability=%s ignored", name)
            self.dims = {k: int(v) for k, v in (body.get("dims") or {}).items()}
            served = body.get("model_id", "")
            if self.model_id and served and served != self.model_id:
                logger.warning("backend model mismatch requested=%s served=%s", self.model_id, served)
            self.model_id = self.model_id or served
            self._capabilities = frozenset(caps)
            logger.info(
                "backend connected url=%s model=%s capabilities=%s",
                self.settings.base_url, self.model_id, ",".join(sorted(c.value for c in caps)),
            )

    @property
    def capabilities(self) -> frozenset[Capability]:
        if self._capabilities is None:
            self.connect()
        return self._capabilities

    def _post(self, path: str, payload: dict) -> dict:
        if self._http is None:
            self.connect()
        return self._http.request("POST", path, payload)

    def _vector(self, body: dict, dim_key: str) -> np.ndarray:
        try:
            vector = np.asarray(body["vector"], dtype=np.float64).reshape(-1)
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendDecodeError(f"Malformed vector in response: {exc}") from exc
        expected = self.dims.get(dim_key) or body.get("dim")
        if expected and vector.size != int(expected):
            raise DimensionError(f"Expected a {expected}-dim vector, got {vector.size}")
        return vector

    def _img2img(self, image: ImageRGB, cfg: DiffusionConfig) -> ImageRGB:
        body = self._post("/v1/img2img", img2img_request(image, cfg))
        return decode_png_b64(body.get("image_b64"))

    def _encode(self, image: ImageRGB) -> LatentTensor:
        return _latent_from(self._post("/v1/encode", {"image_b64": encode_png_b64(image)}))

    def _decode(self, z: LatentTensor) -> ImageRGB:
        return decode_png_b64(self._post("/v1/decode", _latent_payload(z)).get("image_b64"))

    def _predict_eps(self, z: LatentTensor, t: int, prompt: str, guidance: float) -> LatentTensor:
        payload = {**_latent_payload(z), "t": int(t), "prompt": prompt, "guidance": float(guidance)}
        eps = _latent_from(self._post("/v1/predict_eps", payload))
        z.check_shape(eps)
        return eps

    def _embed_image(self, image: ImageRGB) -> np.ndarray:
        return self._vector(self._post("/v1/embed", {"image_b64": encode_png_b64(image)}), "embed")

    def _embed_text(self, text: str) -> np.ndarray:
        return self._vector(self._post("/v1/embed", {"text": text}), "embed")

    def _extract_features(self, image: ImageRGB) -> np.ndarray:
        return self._vector(self._post("/v1/features", {"image_b64": encode_png_b64(image)}), "features")

    def close(self) -> None:
        if self._http is not None:
            self._http.close()
            self._http = None
        self._capabilities = None


def img2img_request(image: ImageRGB, cfg: DiffusionConfig) -> dict:
    """JSON body for POST /v1/img2img."""
    return {
        "image_b64": encode_png_b64(image),
        "prompt": cfg.prompt,
        "steps": cfg.steps,
        "strength": cfg.strength,
        "guidance": cfg.guidance,
        "seed": cfg.seed,
        "eta": cfg.eta,
    }
