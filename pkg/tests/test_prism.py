import numpy as np
import pytest

from diffprism.errors import DimensionError
from diffprism.imagecore import BinaryMask, ChannelStats, ImageRGB
from diffprism.metrics import detail_entropy, shannon_entropy
from diffprism.prism import (
    ChromaMode,
    ChromaSpec,
    NoiseField,
    NoiseKind,
    NoiseSpec,
    apply_prism,
    chromatic_aberration,
    prism_field,
    random_style,
    sample_noise,
)

from conftest import disc

NO_CHROMA = ChromaSpec(mode=ChromaMode.NONE)


def half_mask(size: int) -> BinaryMask:
    values = np.zeros((size, size), dtype=np.uint8)
    values[:, : size // 2] = 1
    return BinaryMask(values)


def test_gaussian_sigma_zero_is_constant_mu():
    field = sample_noise(NoiseSpec(mu=0.3, sigma=0.0), 4, 5)
    assert field.shape == (4, 5)
    np.testing.assert_array_equal(field.values, np.full((4, 5, 3), 0.3))


def test_gaussian_moments():
    field = sample_noise(NoiseSpec(mu=0.0, sigma=1.0, seed=7), 256, 256)
    assert abs(field.values.mean()) < 0.01
    assert abs(field.values.std() - 1.0) < 0.01


def test_noise_is_deterministic_per_seed():
    spec = NoiseSpec(kind=NoiseKind.PERLIN, sigma=0.2, seed=3)
    a = sample_noise(spec, 16, 16)
    b = sample_noise(spec, 16, 16)
    np.testing.assert_array_equal(a.values, b.values)


def test_unset_mu_falls_back_to_given_mean():
    field = sample_noise(NoiseSpec(sigma=0.0), 2, 2, mean=(0.1, 0.2, 0.3))
    np.testing.assert_allclose(field.values[0, 0], [0.1, 0.2, 0.3])


def test_salt_pepper_density_zero_is_all_zero():
    field = sample_noise(NoiseSpec(kind=NoiseKind.SALT_PEPPER, density=0.0, sigma=0.5), 8, 8)
    assert not field.values.any()


def test_salt_pepper_exact_counts_shared_across_channels():
    spec = NoiseSpec(kind=NoiseKind.SALT_PEPPER, density=0.1, sigma=0.4, seed=1)
    values = sample_noise(spec, 20, 20).values
    np.testing.assert_array_equal(values[..., 0], values[..., 2])
    assert (values[..., 0] == 0.4).sum() == 20
    assert (values[..., 0] == -0.4).sum() == 20


def test_perlin_field_is_standardized_before_scaling():
    values = sample_noise(NoiseSpec(kind=NoiseKind.PERLIN, mu=0.0, sigma=0.5, scale=8, seed=2), 64, 64).values
    assert values[..., 0].mean() == pytest.approx(0.0, abs=1e-9)
    assert values[..., 0].std() == pytest.approx(0.5, rel=1e-9)


def test_noise_field_rejects_bad_shape():
    with pytest.raises(DimensionError):
        NoiseField(values=np.zeros((4, 4)), spec=NoiseSpec())


def test_chroma_none_is_identity():
    img = ImageRGB(np.random.default_rng(0).random((4, 4, 3)))
    assert chromatic_aberration(img, NO_CHROMA) is img


def test_pixel_shuffle_leaves_gray_image_unchanged():
    img = ImageRGB.from_array(np.random.default_rng(0).random((8, 8)))
    assert chromatic_aberration(img, ChromaSpec(mode=ChromaMode.PIXEL_SHUFFLE, seed=4)) == img


def test_pixel_shuffle_preserves_channel_multisets():
    img = ImageRGB(np.random.default_rng(0).random((32, 32, 3)))
    out = chromatic_aberration(img, ChromaSpec(mode=ChromaMode.PIXEL_SHUFFLE, seed=9))
    np.testing.assert_array_equal(np.sort(out.pixels, axis=2), np.sort(img.pixels, axis=2))
    assert out != img


def test_global_permute_moves_whole_channels():
    pixels = np.zeros((2, 2, 3))
    pixels[..., 0], pixels[..., 1], pixels[..., 2] = 0.1, 0.5, 0.9
    out = chromatic_aberration(ImageRGB(pixels), ChromaSpec(mode=ChromaMode.GLOBAL_PERMUTE, seed=1))
    assert sorted(out.pixels[0, 0]) == pytest.approx([0.1, 0.5, 0.9])
    np.testing.assert_array_equal(out.pixels[0, 0], out.pixels[1, 1])


def test_channel_offset_shifts_with_edge_clamp():
    pixels = np.zeros((1, 4, 3))
    pixels[0, :, 0] = [0.1, 0.2, 0.3, 0.4]
    spec = ChromaSpec(mode=ChromaMode.CHANNEL_OFFSET, offsets=((0, 1), (0, 0), (0, 0)))
    out = chromatic_aberration(ImageRGB(pixels), spec)
    np.testing.assert_allclose(out.pixels[0, :, 0], [0.1, 0.1, 0.2, 0.3])


def test_channel_offset_larger_than_image():
    spec = ChromaSpec(mode=ChromaMode.CHANNEL_OFFSET, offsets=((0, 4), (0, 0), (0, 0)))
    with pytest.raises(DimensionError):
        chromatic_aberration(ImageRGB(np.zeros((4, 4, 3))), spec)


def test_apply_prism_with_degenerate_noise_saturates():
    mask = half_mask(4)
    style = ChannelStats.uniform(0.5, 0.1)
    out = apply_prism(mask, style, NoiseSpec(sigma=0.0), NO_CHROMA)
    # unset noise mean takes the style mean, so both classes sit at or above 1.0
    np.testing.assert_array_equal(out.pixels, np.ones((4, 4, 3)))


def test_apply_prism_reduces_to_mask():
    mask = BinaryMask.from_array(disc(16, 5))
    out = apply_prism(mask, ChannelStats.uniform(0.0, 1.0), NoiseSpec(mu=0.0, sigma=0.0), NO_CHROMA)
    np.testing.assert_array_equal(out.pixels[..., 1], mask.values.astype(float))


def test_prism_field_class_means():
    mask = half_mask(512)
    style = ChannelStats.uniform(0.25, 0.1)
    means_bg, means_fg = [], []
    for seed in range(20):
        field = prism_field(mask, style, NoiseSpec(mu=0.25, sigma=0.1, seed=seed))
        means_bg.append(field[mask.values == 0].mean())
        means_fg.append(field[mask.values == 1].mean())
    count = 20 * 512 * 256 * 3
    bound = 3 * 0.1 / np.sqrt(count)
    assert abs(np.mean(means_bg) - 0.5) < bound
    assert abs(np.mean(means_fg) - 0.6) < bound


def test_prism_field_class_variance_is_noise_variance():
    mask = half_mask(512)
    field = prism_field(mask, ChannelStats.uniform(0.3, 0.2), NoiseSpec(mu=0.0, sigma=0.1, seed=4))
    for label in (0, 1):
        assert field[mask.values == label].var() == pytest.approx(0.01, rel=0.02)


@pytest.mark.parametrize("noise_sigma", [0.0, 0.05, 0.1, 0.5])
def test_prism_field_class_gap_is_style_sigma(noise_sigma):
    mask = half_mask(512)
    field = prism_field(mask, ChannelStats.uniform(0.3, 0.2), NoiseSpec(mu=0.0, sigma=noise_sigma, seed=9))
    gap = field[mask.values == 1].mean() - field[mask.values == 0].mean()
    assert gap == pytest.approx(0.2, abs=5e-3)


def test_apply_prism_rejects_mismatched_noise_field(disc_mask):
    field = sample_noise(NoiseSpec(), 8, 8)
    with pytest.raises(DimensionError):
        apply_prism(disc_mask, ChannelStats.uniform(0.5, 0.1), field, NO_CHROMA)


def test_random_style_matches_uniform_moments():
    stats = random_style(11, 1024, 1024)
    for mu, sigma in zip(stats.mu, stats.sigma):
        assert abs(mu - 0.5) < 0.01
        assert abs(sigma - 1 / np.sqrt(12)) < 0.01
    assert random_style(11, 64, 64) == random_style(11, 64, 64)


def test_gaussian_input_carries_more_entropy_than_sparse_impulses():
    mask = BinaryMask.from_array(disc(128, 40))
    style = ChannelStats.uniform(0.3, 0.3)
    gaussian = apply_prism(mask, style, NoiseSpec(mu=0.0, sigma=0.1, seed=1), NO_CHROMA)
    impulses = apply_prism(
        mask, style, NoiseSpec(kind=NoiseKind.SALT_PEPPER, density=0.01, sigma=0.1, seed=1), NO_CHROMA
    )
    assert shannon_entropy(gaussian) > shannon_entropy(impulses)


def test_coarse_perlin_has_less_detail_than_fine():
    mask = BinaryMask.from_array(disc(128, 40))
    style = ChannelStats.uniform(0.3, 0.3)
    coarse = apply_prism(mask, style, NoiseSpec(kind=NoiseKind.PERLIN, mu=0.0, sigma=0.1, scale=256, seed=1), NO_CHROMA)
    fine = apply_prism(mask, style, NoiseSpec(kind=NoiseKind.PERLIN, mu=0.0, sigma=0.1, scale=8, seed=1), NO_CHROMA)
    assert detail_entropy(coarse) < detail_entropy(fine)
