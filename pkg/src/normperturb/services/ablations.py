"""Activation- and spatial-level perturbation comparators for ablation sweeps.

Both reuse the y = α·x + (β − α)·μ_c form with noise broadened to B×C×H×W
(activation) or B×1×H×W (spatial). They are sweep baselines, not library API.
"""

from typing import Literal, Optional

import numpy as np

from src.normperturb.models.noise import NoiseSpec
from src.normperturb.services.noise import draw_factors
from src.normperturb.tensor.tensor import Tensor


Granularity = Literal["channel", "activation", "spatial"]


def broadened_shape(shape: tuple[int, ...], granularity: Granularity) -> tuple[int, ...]:
    batch, channels, height, width = shape
    if granularity == "activation":
        return (batch, channels, height, width)
    if granularity == "spatial":
        return (batch, 1, height, width)
    return (batch, channels, 1, 1)


def perturb_broadened(
    x: Tensor,
    noise: NoiseSpec,
    granularity: Granularity,
    rng: np.random.Generator,
    keep: Optional[np.ndarray] = None,
) -> Tensor:
    """Perturb ``x`` with noise at the given granularity; ``keep`` rows stay unchanged."""
    shape = broadened_shape(x.shape, granularity)
    alpha = draw_factors(noise, shape, rng)
    beta = draw_factors(noise, shape, rng)
    if keep is not None:
        alpha[keep] = 1.0
        beta[keep] = 1.0
    mu = x.mean(axis=(2, 3), keepdims=True)
    return x * Tensor(alpha, dtype=x.dtype) + mu * Tensor(beta - alpha, dtype=x.dtype)
