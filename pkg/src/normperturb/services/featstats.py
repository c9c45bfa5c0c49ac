"""Channel statistics, statistic variance, MMD and AdaIN."""

from __future__ import annotations

import logging

import numpy as np
from scipy.spatial.distance import cdist, pdist

from src.normperturb.models.reports import KernelSpec
from src.normperturb.models.stats import ChannelStats, StatVariance, StyleStats
from src.normperturb.tensor.tensor import ShapeError, Tensor


logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-5


def _array(x: Tensor | np.ndarray) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def channel_mean_std(x: Tensor | np.ndarray) -> ChannelStats:
    """Instance statistics of a B×C×H×W feature map.

    The std is the population (biased) estimate over the H×W positions.

    Raises:
        ShapeError: If the input is not 4-D or has an empty spatial extent.
    """
    data = _array(x)
    if data.ndim != 4:
        raise ShapeError(f"channel statistics need a B×C×H×W input, got {data.shape}")
    if data.shape[2] * data.shape[3] < 1:
        raise ShapeError(f"channel statistics need a non-empty spatial extent, got {data.shape}")
    mean = data.mean(axis=(2, 3))
    std = data.std(axis=(2, 3))
    return ChannelStats(mean=mean, std=std)


def batch_stat_variance(means: np.ndarray) -> StatVariance:
    """Variance of channel means across the batch, plus its max-normalized form.

    Raises:
        ValueError: If fewer than two samples are given.
    """
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 2:
        raise ShapeError(f"means must be B×C, got {means.shape}")
    if means.shape[0] < 2:
        raise ValueError(f"statistic variance needs at least 2 samples, got {means.shape[0]}")
    mean_of_means = means.mean(axis=0)
    delta_raw = ((means - mean_of_means) ** 2).mean(axis=0)
    peak = float(delta_raw.max())
    delta = delta_raw / peak if peak > 0 else np.zeros_like(delta_raw)
    return StatVariance(delta_raw=delta_raw, mean_of_means=mean_of_means, delta=delta)


def adain_transfer(
    x: Tensor | np.ndarray,
    content: ChannelStats,
    style: StyleStats | ChannelStats,
    mask: np.ndarray,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Re-normalize masked channels of ``x`` to the style statistics.

    Masked channels become σ_s·(x − μ_c)/(σ_c + eps) + μ_s; the rest pass through.

    Raises:
        ShapeError: If statistics or mask do not match the B×C layout of ``x``.
        ValueError: If ``eps`` is not positive.
    """
    data = _array(x)
    mask = np.asarray(mask, dtype=bool)
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if data.ndim != 4:
        raise ShapeError(f"adain_transfer needs a B×C×H×W input, got {data.shape}")
    expected = data.shape[:2]
    if content.mean.shape != expected or style.mean.shape != expected:
        raise ShapeError(
            f"statistics {content.mean.shape}/{style.mean.shape} do not match features {expected}"
        )
    if mask.shape != (data.shape[1],):
        raise ShapeError(f"mask must have {data.shape[1]} entries, got {mask.shape}")
    if not mask.any():
        return data.copy()
    mu_c = content.mean[:, :, None, None]
    sigma_c = content.std[:, :, None, None]
    mu_s = style.mean[:, :, None, None]
    sigma_s = style.std[:, :, None, None]
    transferred = sigma_s * (data - mu_c) / (sigma_c + eps) + mu_s
    return np.where(mask[None, :, None, None], transferred, data)


def stats_to_vectors(stats: ChannelStats) -> np.ndarray:
    """Embed each sample as the 2C vector [mean, std]."""
    return np.hstack([stats.mean, stats.std])


def standardize_pair(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Z-score both samples with the mean and std of their union."""
    pooled = np.vstack([x, y])
    center = pooled.mean(axis=0)
    scale = pooled.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (x - center) / scale, (y - center) / scale


def rbf_median_bandwidth(x: np.ndarray, y: np.ndarray) -> float:
    """Median pairwise Euclidean distance over X∪Y, or 1.0 if it is zero."""
    pooled = np.vstack([x, y])
    if len(pooled) < 2:
        return 1.0
    median = float(np.median(pdist(pooled)))
    return median if median > 0 else 1.0


def _kernel_matrix(a: np.ndarray, b: np.ndarray, family: str, bandwidth: float) -> np.ndarray:
    if family == "linear":
        return a @ b.T
    return np.exp(-cdist(a, b, "sqeuclidean") / (2.0 * bandwidth**2))


def mmd(x: np.ndarray, y: np.ndarray, kernel: KernelSpec | None = None) -> float:
    """Biased empirical MMD²: mean k(X,X) + mean k(Y,Y) − 2·mean k(X,Y).

    Raises:
        ShapeError: If the samples have different dimensions.
        ValueError: If either sample is empty.
    """
    kernel = kernel or KernelSpec()
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if len(x) < 1 or len(y) < 1:
        raise ValueError("mmd needs at least one vector in each sample")
    if x.shape[1] != y.shape[1]:
        raise ShapeError(f"vector dimensions differ: {x.shape[1]} vs {y.shape[1]}")
    bandwidth = 1.0
    if kernel.family == "rbf":
        bandwidth = kernel.bandwidth or rbf_median_bandwidth(x, y)
    k_xx = _kernel_matrix(x, x, kernel.family, bandwidth).mean()
    k_yy = _kernel_matrix(y, y, kernel.family, bandwidth).mean()
    k_xy = _kernel_matrix(x, y, kernel.family, bandwidth).mean()
    return float(k_xx + k_yy - 2.0 * k_xy)
