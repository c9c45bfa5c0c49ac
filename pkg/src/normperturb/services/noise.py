"""Sampling of perturbation factors."""

import numpy as np

from src.normperturb.models.noise import NoiseSpec
from src.normperturb.models.stats import NoiseDraw


def draw_factors(spec: NoiseSpec, shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. perturbation factors of any shape from ``spec``."""
    first, second = spec.params
    if spec.family == "gaussian":
        values = rng.normal(first, second, size=shape)
    elif spec.family == "uniform":
        values = rng.uniform(first, second, size=shape)
    else:
        values = 2.0 * rng.beta(first, second, size=shape)
    if spec.clamp_negative:
        values = np.maximum(values, 0.0)
    return values


def sample_noise(spec: NoiseSpec, batch: int, channels: int, rng: np.random.Generator) -> NoiseDraw:
    """Sample independent α and β, each B×C, from ``spec``.

    Raises:
        ValueError: If ``batch`` or ``channels`` is below 1.
    """
    if batch < 1 or channels < 1:
        raise ValueError(f"noise needs B, C >= 1, got B={batch}, C={channels}")
    alpha = draw_factors(spec, (batch, channels), rng)
    beta = draw_factors(spec, (batch, channels), rng)
    return NoiseDraw(alpha=alpha, beta=beta)
