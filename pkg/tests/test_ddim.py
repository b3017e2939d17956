import numpy as np
import pytest

from diffprism.backends import Codec, ToyBackend
from diffprism.ddim import (
    DiffusionConfig,
    LatentTensor,
    Schedule,
    ddim_step,
    forward_diffuse,
    img2img,
    iterations_for,
    latent_injection_compare,
    make_schedule,
    predict_x0,
    residual_analysis,
    timesteps,
)
from diffprism.errors import (
    ConfigurationError,
    DimensionError,
    NumericalDivergenceError,
    SequencingError,
    SingularityError,
    UnsupportedOperationError,
)
from diffprism.imagecore import ImageRGB
from diffprism.prism import NoiseField, NoiseSpec


def const(value: float, shape=(3, 2, 2)) -> LatentTensor:
    return LatentTensor(np.full(shape, value))


class CountingBackend(ToyBackend):
    """Toy backend that records every noise prediction."""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.calls: list[int] = []

    def _predict_eps(self, z, t, prompt, guidance):
        self.calls.append(t)
        return super()._predict_eps(z, t, prompt, guidance)


def test_latent_rejects_nan():
    with pytest.raises(NumericalDivergenceError):
        LatentTensor(np.array([[[np.nan]]]))


def test_latent_needs_three_dims():
    with pytest.raises(DimensionError):
        LatentTensor(np.zeros((2, 2)))


def test_single_step_schedule():
    sched = make_schedule(1, 0.5, 0.5)
    np.testing.assert_allclose(sched.alphas, [0.5])


def test_zero_betas_keep_alphas_at_one():
    sched = make_schedule(10, 0.0, 0.0)
    np.testing.assert_array_equal(sched.alphas, np.ones(10))


def test_scaled_linear_schedule_matches_cumulative_product():
    sched = make_schedule(1000, 0.00085, 0.012)
    betas = [(np.sqrt(0.00085) + (np.sqrt(0.012) - np.sqrt(0.00085)) * i / 999) ** 2 for i in range(1000)]
    expected = 1.0
    for beta in betas:
        expected *= 1.0 - beta
    assert sched.alphas[999] == pytest.approx(expected, rel=1e-10)
    assert np.all(np.diff(sched.alphas) <= 0)


def test_schedule_rejects_increasing_alphas():
    with pytest.raises(ConfigurationError):
        Schedule.from_alphas([0.5, 0.9])


def test_schedule_final_step_alpha_is_one():
    assert make_schedule(10, 0.001, 0.01).alpha(-1) == 1.0


def test_leading_timesteps():
    np.testing.assert_array_equal(timesteps(10, 1000), [900, 800, 700, 600, 500, 400, 300, 200, 100, 0])


def test_residual_weight_is_non_decreasing_in_t():
    sched = make_schedule(1000, 0.00085, 0.012)
    weights = [sched.alpha_hat(t) for t in range(sched.T)]
    assert np.all(np.diff(weights) >= 0)


def test_trailing_timesteps():
    np.testing.assert_array_equal(timesteps(10, 1000, "trailing"), [999, 899, 799, 699, 599, 499, 399, 299, 199, 99])
    np.testing.assert_array_equal(timesteps(1, 1000, "trailing"), [999])


def test_unknown_spacing():
    with pytest.raises(ConfigurationError):
        timesteps(10, 1000, "linspace")


def test_full_strength_trailing_starts_from_the_last_step():
    backend = CountingBackend()
    img2img(ImageRGB(np.full((4, 4, 3), 0.5)), backend, DiffusionConfig(strength=1.0, spacing="trailing"))
    assert backend.calls[0] == 999
    assert len(backend.calls) == 10


def test_full_strength_leading_starts_below_the_last_step():
    backend = CountingBackend()
    img2img(ImageRGB(np.full((4, 4, 3), 0.5)), backend, DiffusionConfig(strength=1.0))
    assert backend.calls[0] == 900


@pytest.mark.parametrize("overrides", [
    {"steps": 20, "train_steps": 10},
    {"beta_start": 0.5, "beta_end": 0.01},
])
def test_diffusion_config_rejects_inconsistent_schedule(overrides):
    with pytest.raises(ValueError):
        DiffusionConfig(**overrides)


def test_img2img_deviation_grows_with_strength():
    backend = ToyBackend()
    rng = np.random.default_rng(0)
    images = [ImageRGB(rng.random((8, 8, 3))) for _ in range(4)]

    def deviation(strength: float) -> float:
        total = 0.0
        for seed, img in enumerate(images):
            base = backend.decode(backend.encode(img)).pixels
            out = img2img(img, backend, DiffusionConfig(strength=strength, seed=seed)).pixels
            total += float(((out - base) ** 2).mean())
        return total / len(images)

    values = [deviation(s) for s in (0.0, 0.3, 0.6, 0.99)]
    assert values[0] == pytest.approx(0.0, abs=1e-12)
    assert values == sorted(values)


def test_forward_diffuse_identity_when_alpha_is_one():
    sched = Schedule.from_alphas([1.0])
    out = forward_diffuse(const(2.0), 0, const(5.0), sched)
    np.testing.assert_array_equal(out.values, const(2.0).values)


def test_forward_diffuse_printed_form():
    sched = Schedule.from_alphas([0.5])
    out = forward_diffuse(const(2.0), 0, const(1.0), sched)
    assert out.values[0, 0, 0] == pytest.approx(1.0 + np.sqrt(0.5))


def test_forward_diffuse_zero_signal():
    sched = Schedule.from_alphas([0.3])
    out = forward_diffuse(const(0.0), 0, const(1.0), sched, convention="sqrt")
    assert out.values[0, 0, 0] == pytest.approx(np.sqrt(0.7))


def test_forward_diffuse_rejects_shape_mismatch():
    with pytest.raises(DimensionError):
        forward_diffuse(const(0.0), 0, const(0.0, (3, 4, 4)), Schedule.from_alphas([0.5]))


def test_predict_x0_closed_form():
    sched = Schedule.from_alphas([0.25])
    out = predict_x0(const(1.0), const(1.0), 0, sched)
    assert out.values[0, 0, 0] == pytest.approx((1 - np.sqrt(0.75)) / 0.5)


def test_predict_x0_identity_at_alpha_one():
    out = predict_x0(const(0.7), const(0.0), 0, Schedule.from_alphas([1.0]))
    assert out.values[0, 0, 0] == pytest.approx(0.7)


def test_predict_x0_singular_schedule():
    with pytest.raises(SingularityError):
        predict_x0(const(1.0), const(1.0), 0, Schedule.from_alphas([0.0]))


def test_forward_then_predict_roundtrip():
    sched = make_schedule(1000, 0.00085, 0.012)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        x0 = LatentTensor(rng.standard_normal((3, 2, 2)))
        eps = LatentTensor(rng.standard_normal((3, 2, 2)))
        t = int(rng.integers(0, 1000))
        z_t = forward_diffuse(x0, t, eps, sched, convention="sqrt")
        worst = max(worst, float(np.abs(predict_x0(z_t, eps, t, sched).values - x0.values).max()))
    assert worst <= 1e-9


def test_ddim_step_to_final_returns_x0():
    sched = Schedule.from_alphas([0.4])
    z_t, eps = const(1.3), const(0.2)
    out = ddim_step(z_t, eps, 0, -1, sched)
    np.testing.assert_allclose(out.values, predict_x0(z_t, eps, 0, sched).values)


def test_ddim_step_with_true_eps_lands_on_trajectory():
    sched = Schedule.from_alphas([0.9, 0.5])
    x0, eps = const(0.8), const(-0.4)
    z_t = forward_diffuse(x0, 1, eps, sched, convention="sqrt")
    out = ddim_step(z_t, eps, 1, 0, sched)
    expected = forward_diffuse(x0, 0, eps, sched, convention="sqrt")
    np.testing.assert_allclose(out.values, expected.values, atol=1e-12)


def test_ddim_step_hand_oracle():
    sched = Schedule.from_alphas([0.81, 0.25])
    z_t = const(1.0)
    eps_pred = const(0.5)
    out = ddim_step(z_t, eps_pred, 1, 0, sched)
    x0 = (1 - np.sqrt(0.75) * 0.5) / 0.5
    assert out.values[0, 0, 0] == pytest.approx(0.9 * x0 + np.sqrt(0.19) * 0.5, abs=1e-5)
    assert out.values[0, 0, 0] == pytest.approx(1.23852, abs=1e-4)


def test_ddim_step_must_descend():
    sched = Schedule.from_alphas([0.9, 0.5])
    with pytest.raises(SequencingError):
        ddim_step(const(1.0), const(0.0), 0, 1, sched)


def test_stochastic_step_needs_generator():
    sched = Schedule.from_alphas([0.9, 0.5])
    with pytest.raises(ConfigurationError):
        ddim_step(const(1.0), const(0.0), 1, 0, sched, eta=0.5)
    out = ddim_step(const(1.0), const(0.0), 1, 0, sched, eta=0.5, rng=np.random.default_rng(0))
    assert out.shape == (3, 2, 2)


@pytest.mark.parametrize("strength, steps, expected", [(0.3, 10, 3), (0.99, 10, 9), (0.7, 10, 7), (0.0, 10, 0), (1.0, 10, 10)])
def test_iterations_for(strength, steps, expected):
    assert iterations_for(strength, steps) == expected


def test_img2img_zero_strength_identity_codec_returns_input():
    img = ImageRGB(np.random.default_rng(0).random((8, 8, 3)))
    out = img2img(img, ToyBackend(), DiffusionConfig(strength=0.0))
    assert out == img


def test_img2img_runs_three_iterations_at_default_strength():
    backend = CountingBackend()
    img2img(ImageRGB(np.full((4, 4, 3), 0.5)), backend, DiffusionConfig(steps=10, strength=0.3))
    assert backend.calls == [200, 100, 0]


def test_img2img_is_deterministic_per_seed():
    img = ImageRGB(np.random.default_rng(1).random((8, 8, 3)))
    cfg = DiffusionConfig(seed=5)
    assert img2img(img, ToyBackend(), cfg) == img2img(img, ToyBackend(), cfg)


def test_img2img_without_any_sampler_capability():
    class Embedder(ToyBackend):
        @property
        def capabilities(self):
            return frozenset()

    with pytest.raises(UnsupportedOperationError):
        img2img(ImageRGB(np.zeros((2, 2, 3))), Embedder(), DiffusionConfig())


def test_img2img_delta_grows_with_strength_for_zero_predictor():
    img = ImageRGB(np.full((8, 8, 3), 0.5))
    backend = ToyBackend(predictor_gain=0.0)
    diffs = [
        float(np.abs(img2img(img, backend, DiffusionConfig(strength=s, seed=3)).pixels - img.pixels).mean())
        for s in (0.1, 0.5, 0.9)
    ]
    assert diffs[0] < diffs[1] < diffs[2]


def noise_field(values: np.ndarray) -> NoiseField:
    return NoiseField(values=values, spec=NoiseSpec())


def test_residual_analysis_zero_noise():
    sched = make_schedule(1000, 0.00085, 0.012)
    x = ImageRGB(np.full((4, 4, 3), 0.4))
    report = residual_analysis(x, noise_field(np.zeros((4, 4, 3))), ToyBackend(), 500, sched)
    assert not report.delta.values.any()
    assert report.identity_residual == 0.0


def test_residual_analysis_linear_toy_matches_closed_form():
    sched = make_schedule(1000, 0.00085, 0.012)
    rng = np.random.default_rng(0)
    k = 0.3
    backend = ToyBackend(codec=Codec.AVGPOOL_2, predictor_gain=k)
    for _ in range(100):
        x = ImageRGB(0.25 + 0.5 * rng.random((8, 8, 3)))
        n = 0.2 * (rng.random((8, 8, 3)) - 0.5)
        t = int(rng.integers(0, 1000))
        report = residual_analysis(x, noise_field(n), backend, t, sched)
        assert report.identity_residual <= 1e-6
        np.testing.assert_allclose(report.delta.values, k * backend.encode_array(n), atol=1e-9)


def test_residual_analysis_rejects_mismatched_noise():
    with pytest.raises(DimensionError):
        residual_analysis(
            ImageRGB(np.zeros((4, 4, 3))), noise_field(np.zeros((2, 2, 3))), ToyBackend(), 0,
            make_schedule(10, 0.001, 0.01),
        )


def test_latent_injection_zero_noise_branches_match():
    x = ImageRGB(np.random.default_rng(0).random((8, 8, 3)))
    report = latent_injection_compare(x, noise_field(np.zeros((8, 8, 3))), ToyBackend(), DiffusionConfig())
    assert report.outputs["pixel"] == report.outputs["latent"]


def test_latent_injection_identity_codec_branches_match():
    rng = np.random.default_rng(0)
    x = ImageRGB(0.25 + 0.5 * rng.random((8, 8, 3)))
    n = noise_field(0.1 * (rng.random((8, 8, 3)) - 0.5))
    report = latent_injection_compare(x, n, ToyBackend(), DiffusionConfig())
    np.testing.assert_allclose(report.outputs["pixel"].pixels, report.outputs["latent"].pixels, atol=1e-12)
    assert report.pixel.ssim == pytest.approx(report.latent.ssim, abs=1e-12)


def test_pixel_injection_preserves_structure_better_than_latent():
    rng = np.random.default_rng(0)
    blocks = 0.2 + 0.6 * rng.random((8, 8, 3))
    x = ImageRGB(np.repeat(np.repeat(blocks, 4, axis=0), 4, axis=1))
    n = noise_field(0.1 * rng.standard_normal((32, 32, 3)))
    report = latent_injection_compare(x, n, ToyBackend(codec=Codec.AVGPOOL_4), DiffusionConfig(strength=0.0))
    assert report.pixel.ssim >= report.latent.ssim
