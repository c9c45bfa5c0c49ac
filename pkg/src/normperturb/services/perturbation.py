"""Normalization Perturbation: noise sampling, NP / NP+ forward and site gating."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from src.normperturb.models.noise import NpSiteConfig
from src.normperturb.models.stats import NoiseDraw, StatVariance
from src.normperturb.services.ablations import perturb_broadened
from src.normperturb.services.noise import sample_noise
from src.normperturb.tensor.tensor import ShapeError, Tensor


logger = logging.getLogger(__name__)


def _check_draw(x: Tensor | np.ndarray, draw: NoiseDraw) -> None:
    if x.ndim != 4:
        raise ShapeError(f"perturbation needs a B×C×H×W input, got {x.shape}")
    if draw.shape != tuple(x.shape[:2]):
        raise ShapeError(f"noise shape {draw.shape} does not match features {tuple(x.shape[:2])}")


def _factor(values: np.ndarray, like: Tensor) -> Tensor:
    return Tensor(values[:, :, None, None], dtype=like.dtype)


def np_forward(x: Tensor, draw: NoiseDraw) -> Tensor:
    """Perturb channel statistics: y = α·x + (β − α)·μ_c.

    Gradients flow through ``x`` and through μ_c; α and β are constants.

    Raises:
        ShapeError: If the draw is not B×C for ``x``.
    """
    _check_draw(x, draw)
    mu = x.mean(axis=(2, 3), keepdims=True)
    alpha = _factor(draw.alpha, x)
    shift = _factor(draw.beta - draw.alpha, x)
    return x * alpha + mu * shift


def np_reference(x: Tensor | np.ndarray, draw: NoiseDraw, eps: float = 1e-12) -> np.ndarray:
    """Normalize-then-restyle form: (α·σ_c)·(x − μ_c)/(σ_c + eps) + β·μ_c.

    Equivalent to :func:`np_forward` as eps → 0; kept as its test oracle.

    Raises:
        ShapeError: If the draw is not B×C for ``x``.
        ValueError: If ``eps`` is not positive.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    _check_draw(data, draw)
    mu = data.mean(axis=(2, 3), keepdims=True)
    sigma = data.std(axis=(2, 3), keepdims=True)
    alpha = draw.alpha[:, :, None, None]
    beta = draw.beta[:, :, None, None]
    return (alpha * sigma) * (data - mu) / (sigma + eps) + beta * mu


def np_plus_forward(x: Tensor, draw: NoiseDraw, delta: StatVariance) -> Tensor:
    """Sensitivity-weighted perturbation: y = α·x + δ·(β − α)·μ_c.

    ``delta`` comes from the current mini-batch and is not differentiated.

    Raises:
        ValueError: With fewer than two samples (δ is undefined).
        ShapeError: If the draw or δ does not fit ``x``.
    """
    if x.ndim == 4 and x.shape[0] < 2:
        raise ValueError(f"np_plus needs a batch of at least 2, got {x.shape[0]}")
    _check_draw(x, draw)
    if delta.num_channels != x.shape[1]:
        raise ShapeError(f"delta has {delta.num_channels} channels, features have {x.shape[1]}")
    mu = x.mean(axis=(2, 3), keepdims=True)
    alpha = _factor(draw.alpha, x)
    shift = _factor(delta.delta[None, :] * (draw.beta - draw.alpha), x)
    return x * alpha + mu * shift


def apply_site(
    x: Tensor,
    cfg: NpSiteConfig,
    rng: np.random.Generator,
    training: bool,
    batch_delta: Optional[StatVariance] = None,
    gate_rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """Apply one gated perturbation site.

    Outside training the site is the identity. In training a Bernoulli(p) gate is
    drawn from ``gate_rng`` (``rng`` if omitted), once per mini-batch or once per
    sample depending on ``cfg.gating``; gated-on inputs get fresh noise from ``rng``.

    Raises:
        ValueError: If ``cfg.mode`` is np_plus and no ``batch_delta`` is given.
    """
    if not training:
        return x
    if cfg.mode == "np_plus" and batch_delta is None:
        raise ValueError("np_plus site needs the mini-batch statistic variance")
    gates = gate_rng if gate_rng is not None else rng
    batch = x.shape[0]

    if cfg.gating == "batch":
        if not gates.random() < cfg.probability:
            return x
        keep: Optional[np.ndarray] = None
    else:
        on = gates.random(batch) < cfg.probability
        if not on.any():
            return x
        keep = ~on

    if cfg.granularity != "channel":
        return perturb_broadened(x, cfg.noise, cfg.granularity, rng, keep=keep)

    draw = sample_noise(cfg.noise, batch, x.shape[1], rng)
    if keep is not None:
        alpha = draw.alpha.copy()
        beta = draw.beta.copy()
        alpha[keep] = 1.0
        beta[keep] = 1.0
        draw = NoiseDraw(alpha=alpha, beta=beta)
    if cfg.mode == "np_plus":
        assert batch_delta is not None
        return np_plus_forward(x, draw, batch_delta)
    return np_forward(x, draw)


__all__ = ["apply_site", "np_forward", "np_plus_forward", "np_reference", "sample_noise"]
