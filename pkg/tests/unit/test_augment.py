"""Unit tests for photometric augmentation."""

import numpy as np
import pytest

from src.normperturb.services.augment import (
    AugmentGates,
    augment_batch,
    color_jitter,
    gaussian_blur,
    grayscale,
    photometric_augment,
    solarize,
)


@pytest.fixture
def image(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=(3, 8, 8))


def test_no_gates_is_identity(image: np.ndarray, rng: np.random.Generator) -> None:
    """Test all-off gates return the image unchanged."""
    out = photometric_augment(image, rng, gates=AugmentGates())
    np.testing.assert_array_equal(out, image)


def test_solarize() -> None:
    """Test pixels above the threshold are inverted."""
    np.testing.assert_allclose(solarize(np.array([0.2, 0.5, 0.8])), [0.2, 0.5, 0.2])


def test_grayscale_uses_luma(image: np.ndarray) -> None:
    """Test channels become equal luma values."""
    gray = grayscale(image)
    expected = 0.299 * image[0] + 0.587 * image[1] + 0.114 * image[2]
    for channel in gray:
        np.testing.assert_allclose(channel, expected)


def test_blur_keeps_constant_image() -> None:
    """Test blurring a flat image changes nothing."""
    flat = np.full((3, 6, 6), 0.4)
    np.testing.assert_allclose(gaussian_blur(flat, 0.8), flat)


def test_blur_smooths(image: np.ndarray) -> None:
    """Test blur lowers pixel variance and stays per-channel."""
    blurred = gaussian_blur(image, 1.0)
    assert blurred.shape == image.shape
    assert blurred.std() < image.std()
    single = image.copy()
    single[1:] = 0.0
    assert not gaussian_blur(single, 1.0)[1:].any()


def test_blur_sigma_positive(image: np.ndarray) -> None:
    """Test a zero sigma is rejected."""
    with pytest.raises(ValueError):
        gaussian_blur(image, 0.0)


def test_color_jitter_range(image: np.ndarray, rng: np.random.Generator) -> None:
    """Test jittered images stay in [0, 1] and differ from the input."""
    out = color_jitter(image, rng)
    assert out.min() >= 0.0 and out.max() <= 1.0
    assert not np.allclose(out, image)


def test_keeps_dtype_and_range(rng: np.random.Generator) -> None:
    """Test float32 images stay float32 in [0, 1] under every transform."""
    image = rng.uniform(0.0, 1.0, size=(3, 8, 8)).astype(np.float32)
    gates = AugmentGates(color_jitter=True, grayscale=True, blur=True, solarize=True)
    out = photometric_augment(image, rng, gates=gates)
    assert out.dtype == np.float32
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_gate_probability() -> None:
    """Test each transform fires about half of the time."""
    rng = np.random.default_rng(0)
    draws = [AugmentGates.draw(rng) for _ in range(4000)]
    for name in ("color_jitter", "grayscale", "blur", "solarize"):
        rate = np.mean([getattr(g, name) for g in draws])
        assert abs(rate - 0.5) < 0.05


def test_rejects_wrong_layout(rng: np.random.Generator) -> None:
    """Test H×W×3 input is rejected."""
    with pytest.raises(ValueError):
        photometric_augment(np.zeros((8, 8, 3)), rng)


def test_batch_is_seeded(rng: np.random.Generator) -> None:
    """Test batch augmentation depends only on the generator state."""
    images = rng.uniform(0.0, 1.0, size=(5, 3, 8, 8))
    a = augment_batch(images, np.random.default_rng(3))
    b = augment_batch(images, np.random.default_rng(3))
    assert a.shape == images.shape
    np.testing.assert_array_equal(a, b)
