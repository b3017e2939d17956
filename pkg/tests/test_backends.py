import json

import httpx
import numpy as np
import pytest

from diffprism.backends import Capability, Codec, RemoteBackend, ToyBackend, create_backend
from diffprism.backends.remote import decode_png_b64, encode_png_b64, img2img_request
from diffprism.ddim import DiffusionConfig, LatentTensor, img2img
from diffprism.errors import (
    BackendDecodeError,
    BackendError,
    BackendTimeoutError,
    ConfigurationError,
    DimensionError,
    UnsupportedOperationError,
)
from diffprism.imagecore import ImageRGB
from diffprism.settings import BackendSettings, backend_settings

ALL_CAPS = [c.value for c in Capability]


# --- toy backend ---

def test_identity_codec_roundtrip():
    backend = ToyBackend()
    img = ImageRGB(np.random.default_rng(0).random((6, 5, 3)))
    assert backend.decode(backend.encode(img)) == img


def test_avgpool_fixed_point_on_block_constant_image():
    backend = ToyBackend(codec=Codec.AVGPOOL_2)
    blocks = np.random.default_rng(0).random((3, 3, 3))
    img = ImageRGB(np.repeat(np.repeat(blocks, 2, axis=0), 2, axis=1))
    assert backend.decode(backend.encode(img)) == img


def test_avgpool_checkerboard_averages_to_half():
    backend = ToyBackend(codec=Codec.AVGPOOL_2)
    board = (np.indices((4, 4)).sum(axis=0) % 2).astype(float)
    out = backend.decode(backend.encode(ImageRGB.from_array(board)))
    np.testing.assert_allclose(out.pixels, 0.5)


def test_avgpool_needs_divisible_dimensions():
    with pytest.raises(DimensionError):
        ToyBackend(codec=Codec.AVGPOOL_4).encode(ImageRGB(np.zeros((6, 8, 3))))


def test_predictor_gain():
    z = LatentTensor(np.full((3, 2, 2), 2.0))
    assert not ToyBackend(predictor_gain=0.0).predict_eps(z, 10).values.any()
    np.testing.assert_allclose(ToyBackend(predictor_gain=0.5).predict_eps(z, 10).values, 1.0)


def test_predictor_is_linear():
    backend = ToyBackend(predictor_gain=0.3)
    rng = np.random.default_rng(0)
    z, w = LatentTensor(rng.random((3, 4, 4))), LatentTensor(rng.random((3, 4, 4)))
    shifted = backend.predict_eps(LatentTensor(z.values + w.values), 5).values
    np.testing.assert_allclose(shifted - backend.predict_eps(z, 5).values, 0.3 * w.values, atol=1e-12)


def test_codec_arrays_are_linear():
    backend = ToyBackend(codec=Codec.AVGPOOL_2)
    rng = np.random.default_rng(0)
    x, y = rng.random((8, 6, 3)), rng.random((8, 6, 3))
    a, b = 0.7, -1.3
    np.testing.assert_allclose(
        backend.encode_array(a * x + b * y),
        a * backend.encode_array(x) + b * backend.encode_array(y),
        atol=1e-9,
    )
    zx, zy = backend.encode_array(x), backend.encode_array(y)
    np.testing.assert_allclose(
        backend.decode_array(a * zx + b * zy),
        a * backend.decode_array(zx) + b * backend.decode_array(zy),
        atol=1e-9,
    )


def test_time_varying_gain():
    assert ToyBackend(predictor_gain=0.1, gain_slope=0.001).gain(100) == pytest.approx(0.2)


def test_features_of_black_image_are_zero():
    vec = ToyBackend().extract_features(ImageRGB(np.zeros((16, 16, 3))))
    assert vec.shape == (8 * 8 * 3,)
    assert not vec.any()


def test_embed_image_ignores_pixel_order():
    backend = ToyBackend()
    pixels = np.random.default_rng(0).random((4, 4, 3))
    shuffled = pixels.reshape(-1, 3)[np.random.default_rng(1).permutation(16)].reshape(4, 4, 3)
    np.testing.assert_allclose(backend.embed_image(ImageRGB(pixels)), backend.embed_image(ImageRGB(shuffled)))


def test_embed_text_is_deterministic():
    backend = ToyBackend()
    np.testing.assert_array_equal(backend.embed_text("a"), backend.embed_text("a"))


def test_create_backend_kinds(monkeypatch):
    monkeypatch.delenv("PRISM_BACKEND_URL", raising=False)
    assert isinstance(create_backend("toy", codec="avgpool_2"), ToyBackend)
    with pytest.raises(ConfigurationError):
        create_backend("remote")
    with pytest.raises(ConfigurationError):
        create_backend("gpu")


# --- settings ---

def test_backend_settings_from_env(monkeypatch):
    monkeypatch.setenv("PRISM_BACKEND_URL", "http://svc:8000/")
    monkeypatch.setenv("PRISM_BACKEND_RETRIES", "5")
    settings = backend_settings()
    assert settings.base_url == "http://svc:8000"
    assert settings.retries == 5
    assert settings.timeout_s == 60.0


def test_backend_settings_rejects_bad_numbers(monkeypatch):
    monkeypatch.setenv("PRISM_BACKEND_TIMEOUT_S", "soon")
    with pytest.raises(ConfigurationError):
        backend_settings("http://svc")


def test_backend_settings_backoff(monkeypatch):
    monkeypatch.delenv("PRISM_BACKEND_BACKOFF_S", raising=False)
    assert backend_settings("http://svc").backoff_s == 0.5
    monkeypatch.setenv("PRISM_BACKEND_BACKOFF_S", "0")
    assert backend_settings("http://svc").backoff_s == 0.0
    monkeypatch.setenv("PRISM_BACKEND_BACKOFF_S", "-1")
    with pytest.raises(ConfigurationError):
        backend_settings("http://svc")


# --- remote backend ---

class FakeService:
    """In-process stand-in for the /v1 protocol; echoes img2img inputs."""

    def __init__(self, capabilities=ALL_CAPS, fail_first: int = 0, fail_status: int = 503):
        self.capabilities = capabilities
        self.fail_first = fail_first
        self.fail_status = fail_status
        self.requests: list[httpx.Request] = []
        self.img2img_reply = None

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(request)
        if self.fail_first > 0:
            self.fail_first -= 1
            return httpx.Response(self.fail_status, text="busy")
        path = request.url.path
        body = json.loads(request.content) if request.content else {}
        if path == "/v1/capabilities":
            return httpx.Response(200, json={
                "capabilities": self.capabilities, "dims": {"embed": 3, "features": 3}, "model_id": "sd15",
            })
        if path == "/v1/img2img":
            reply = self.img2img_reply if self.img2img_reply is not None else body["image_b64"]
            return httpx.Response(200, json={"image_b64": reply, "model_id": "sd15", "seed": body["seed"]})
        if path == "/v1/encode":
            img = decode_png_b64(body["image_b64"])
            z = img.pixels.transpose(2, 0, 1)
            return httpx.Response(200, json={"shape": list(z.shape), "data": z.reshape(-1).tolist()})
        if path == "/v1/decode":
            z = np.asarray(body["data"]).reshape(body["shape"])
            return httpx.Response(200, json={"image_b64": encode_png_b64(ImageRGB.from_array(z.transpose(1, 2, 0)))})
        if path == "/v1/predict_eps":
            return httpx.Response(200, json={"shape": body["shape"], "data": [0.0] * len(body["data"])})
        if path == "/v1/embed":
            return httpx.Response(200, json={"vector": [1.0, 0.0, 0.0], "dim": 3})
        if path == "/v1/features":
            return httpx.Response(200, json={"vector": [0.5, 0.5], "dim": 2})
        return httpx.Response(404)


def remote(service: FakeService, retries: int = 2, backoff_s: float = 0.0) -> RemoteBackend:
    settings = BackendSettings(base_url="http://svc", timeout_s=5.0, retries=retries, backoff_s=backoff_s)
    return RemoteBackend(settings, transport=httpx.MockTransport(service))


def gray_image(value: float = 0.4) -> ImageRGB:
    return ImageRGB(np.full((4, 4, 3), round(value * 255) / 255))


def test_remote_handshake_is_lazy_and_cached():
    service = FakeService()
    backend = remote(service)
    assert service.requests == []
    assert backend.supports(Capability.EMBED_TEXT)
    backend.embed_text("x")
    backend.embed_text("y")
    assert [r.url.path for r in service.requests].count("/v1/capabilities") == 1
    assert backend.model_id == "sd15"


def test_remote_full_img2img_echo():
    service = FakeService(capabilities=["full_img2img"])
    img = gray_image()
    out = img2img(img, remote(service), DiffusionConfig())
    assert out == img


def test_remote_sampler_loop_when_latent_ops_are_served():
    service = FakeService(capabilities=["encode", "decode", "predict_eps"])
    img = gray_image(0.6)
    img2img(img, remote(service), DiffusionConfig(strength=0.3))
    paths = [r.url.path for r in service.requests]
    assert paths.count("/v1/predict_eps") == 3
    assert "/v1/img2img" not in paths


def test_remote_malformed_image_reply():
    service = FakeService(capabilities=["full_img2img"])
    service.img2img_reply = "%%% not base64 %%%"
    with pytest.raises(BackendDecodeError):
        remote(service).img2img(gray_image(), DiffusionConfig())


def test_img2img_request_matches_wire_schema():
    body = img2img_request(gray_image(), DiffusionConfig())
    assert set(body) == {"image_b64", "prompt", "steps", "strength", "guidance", "seed", "eta"}
    assert body["prompt"] == "a realistic dendrite sample"
    assert (body["steps"], body["strength"], body["guidance"]) == (10, 0.3, 10.0)


def test_remote_retries_keep_request_id():
    service = FakeService(fail_first=2)
    backend = remote(service, retries=2)
    backend.connect()
    ids = {r.headers["X-Request-ID"] for r in service.requests}
    assert len(service.requests) == 3
    assert len(ids) == 1


def test_remote_gives_up_after_retries():
    service = FakeService(fail_first=10)
    with pytest.raises(BackendError) as info:
        remote(service, retries=1).connect()
    assert info.value.status == 503
    assert info.value.attempts == 2
    assert info.value.body == "busy"


def test_remote_does_not_retry_client_errors():
    service = FakeService(fail_first=1, fail_status=400)
    with pytest.raises(BackendError):
        remote(service, retries=3).connect()
    assert len(service.requests) == 1


def test_remote_timeout():
    def slow(request):
        raise httpx.ReadTimeout("slow", request=request)

    settings = BackendSettings(base_url="http://svc", timeout_s=1.0, retries=0, backoff_s=0.0)
    backend = RemoteBackend(settings, transport=httpx.MockTransport(slow))
    with pytest.raises(BackendTimeoutError):
        backend.connect()


def test_remote_vector_dimension_is_checked():
    backend = remote(FakeService())
    with pytest.raises(DimensionError):
        backend.extract_features(gray_image())


def test_unadvertised_capability_fails_before_any_request():
    service = FakeService(capabilities=["embed_text"])
    backend = remote(service)
    with pytest.raises(UnsupportedOperationError):
        backend.embed_image(gray_image())
    assert [r.url.path for r in service.requests] == ["/v1/capabilities"]


def test_remote_retries_back_off_exponentially(monkeypatch):
    delays = []
    monkeypatch.setattr("diffprism.backends.remote.time.sleep", delays.append)
    service = FakeService(fail_first=2)
    remote(service, retries=2, backoff_s=0.5).connect()
    assert delays == [0.5, 1.0]


def test_remote_zero_backoff_never_sleeps(monkeypatch):
    delays = []
    monkeypatch.setattr("diffprism.backends.remote.time.sleep", delays.append)
    remote(FakeService(fail_first=1), retries=1).connect()
    assert delays == []
