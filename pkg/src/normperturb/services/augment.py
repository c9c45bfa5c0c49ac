"""Photometric augmentation: color jitter, grayscale, gaussian blur and solarize."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from matplotlib.colors import hsv_to_rgb, rgb_to_hsv
from scipy.ndimage import gaussian_filter


APPLY_PROBABILITY = 0.5
JITTER_RANGE = (0.6, 1.4)
HUE_SHIFT = 0.1
BLUR_SIGMA = (0.1, 1.0)
SOLARIZE_THRESHOLD = 0.5
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class AugmentGates:
    """Which transforms fire for one image."""

    color_jitter: bool = False
    grayscale: bool = False
    blur: bool = False
    solarize: bool = False

    @classmethod
    def draw(cls, rng: np.random.Generator, p: float = APPLY_PROBABILITY) -> AugmentGates:
        on = rng.random(4) < p
        return cls(*(bool(flag) for flag in on))


def luma(image: np.ndarray) -> np.ndarray:
    """H×W luminance of a 3×H×W image."""
    return np.tensordot(LUMA, image, axes=([0], [0]))


def grayscale(image: np.ndarray) -> np.ndarray:
    return np.repeat(luma(image)[None], 3, axis=0)


def color_jitter(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Brightness, contrast and saturation factors plus a hue rotation, in that order."""
    low, high = JITTER_RANGE
    brightness, contrast, saturation = rng.uniform(low, high, size=3)
    hue = rng.uniform(-HUE_SHIFT, HUE_SHIFT)

    out = np.clip(image * brightness, 0.0, 1.0)
    out = np.clip((out - luma(out).mean()) * contrast + luma(out).mean(), 0.0, 1.0)
    gray = grayscale(out)
    out = np.clip(gray + (out - gray) * saturation, 0.0, 1.0)

    hsv = rgb_to_hsv(out.transpose(1, 2, 0))
    hsv[..., 0] = (hsv[..., 0] + hue) % 1.0
    return hsv_to_rgb(hsv).transpose(2, 0, 1)


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """3×3 gaussian blur applied per channel."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    # truncate·sigma = 1 keeps the kernel radius at one pixel
    return gaussian_filter(image, sigma=(0.0, sigma, sigma), truncate=1.0 / sigma, mode="reflect")


def solarize(image: np.ndarray, threshold: float = SOLARIZE_THRESHOLD) -> np.ndarray:
    return np.where(image > threshold, 1.0 - image, image)


def photometric_augment(
    image: np.ndarray,
    rng: np.random.Generator,
    gates: Optional[AugmentGates] = None,
) -> np.ndarray:
    """Apply each transform independently with probability 0.5.

    Args:
        image: 3×H×W pixels in [0, 1].
        rng: Source of gates and transform parameters.
        gates: Fixed gates; drawn from ``rng`` when omitted.

    Returns:
        Augmented image clipped to [0, 1], same dtype as the input.
    """
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected a 3×H×W image, got {image.shape}")
    if gates is None:
        gates = AugmentGates.draw(rng)
    out = np.asarray(image, dtype=np.float64)
    if gates.color_jitter:
        out = color_jitter(out, rng)
    if gates.grayscale:
        out = grayscale(out)
    if gates.blur:
        out = gaussian_blur(out, rng.uniform(*BLUR_SIGMA))
    if gates.solarize:
        out = solarize(out)
    return np.clip(out, 0.0, 1.0).astype(image.dtype, copy=False)


def augment_batch(images: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Augment every image of an N×3×H×W batch with independent gates."""
    if not len(images):
        return images
    return np.stack([photometric_augment(image, rng) for image in images])
