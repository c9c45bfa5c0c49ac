"""Feature-statistic diagnostics: per-stage domain gap, channel sensitivity, subset AdaIN."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel
from scipy.stats import rankdata

from src.normperturb.models.dataset import ImageSet
from src.normperturb.models.reports import (
    GapReport,
    KernelSpec,
    SensitivityReport,
    StageGap,
    StageSummary,
    TransferReport,
)
from src.normperturb.models.stats import ChannelStats, StyleStats
from src.normperturb.services.featstats import (
    adain_transfer,
    batch_stat_variance,
    channel_mean_std,
    mmd,
    rbf_median_bandwidth,
    standardize_pair,
    stats_to_vectors,
)
from src.normperturb.services.network import ConvNet
from src.normperturb.tensor.serialization import save_tsr
from src.normperturb.tensor.tensor import Tensor


logger = logging.getLogger(__name__)

STYLE_SIGNAL_THRESHOLD = 2.0
# upper bound on the ratio, reached when the within-style spread vanishes
MAX_STYLE_SIGNAL_RATIO = 1e6
Direction = Literal["most-sensitive", "least-sensitive"]


def _require_images(dataset: ImageSet) -> None:
    if len(dataset) == 0:
        raise ValueError(f"dataset '{dataset.domain}' is empty")


def _resolve_stages(net: ConvNet, stages: Optional[Sequence[int]]) -> list[int]:
    count = len(net.config.stages)
    chosen = list(range(1, count + 1)) if stages is None else sorted(set(stages))
    for stage in chosen:
        if not 1 <= stage <= count:
            raise ValueError(f"stage {stage} does not exist in a {count}-stage network")
    return chosen


def stage_features(
    net: ConvNet, dataset: ImageSet, stage: int, batch_size: int = 128
) -> np.ndarray:
    """Clean eval-mode features of one stage for every image, in float64."""
    _require_images(dataset)
    _resolve_stages(net, [stage])
    chunks = []
    for start in range(0, len(dataset), batch_size):
        images = Tensor(dataset.images[start : start + batch_size], dtype=net.dtype)
        features = net.forward(images, training=False).stage_features[stage - 1]
        chunks.append(features.data.astype(np.float64))
    return np.concatenate(chunks)


def extract_stage_stats(
    net: ConvNet,
    dataset: ImageSet,
    stages: Optional[Sequence[int]] = None,
    batch_size: int = 128,
) -> dict[int, ChannelStats]:
    """Per-image channel statistics of the clean features at each requested stage.

    Raises:
        ValueError: If the dataset is empty or a stage does not exist.
    """
    _require_images(dataset)
    chosen = _resolve_stages(net, stages)
    means: dict[int, list[np.ndarray]] = {s: [] for s in chosen}
    stds: dict[int, list[np.ndarray]] = {s: [] for s in chosen}
    for start in range(0, len(dataset), batch_size):
        images = Tensor(dataset.images[start : start + batch_size], dtype=net.dtype)
        features = net.forward(images, training=False).stage_features
        for stage in chosen:
            stats = channel_mean_std(features[stage - 1].data.astype(np.float64))
            means[stage].append(stats.mean)
            stds[stage].append(stats.std)
    return {
        s: ChannelStats(mean=np.concatenate(means[s]), std=np.concatenate(stds[s]))
        for s in chosen
    }


def stage_gap(
    net: ConvNet,
    dataset_a: ImageSet,
    dataset_b: ImageSet,
    kernel: Optional[KernelSpec] = None,
    standardize: bool = False,
    model_id: str = "model",
    stages: Optional[Sequence[int]] = None,
) -> GapReport:
    """MMD between the channel statistics of two datasets at every stage.

    Each stage reports its own MMD and the running sum over stages 1..s.

    Raises:
        ValueError: If either dataset is empty.
    """
    kernel = kernel or KernelSpec()
    stats_a = extract_stage_stats(net, dataset_a, stages)
    stats_b = extract_stage_stats(net, dataset_b, stages)
    gaps: list[StageGap] = []
    summaries: list[StageSummary] = []
    accumulated = 0.0
    for stage in stats_a:
        vec_a = stats_to_vectors(stats_a[stage])
        vec_b = stats_to_vectors(stats_b[stage])
        if standardize:
            vec_a, vec_b = standardize_pair(vec_a, vec_b)
        value = max(mmd(vec_a, vec_b, kernel), 0.0)
        accumulated += value
        gaps.append(StageGap(stage=stage, mmd=value, accumulated=accumulated))
        summaries.append(
            StageSummary(
                stage=stage,
                mean_a=stats_a[stage].mean.mean(axis=0).tolist(),
                std_a=stats_a[stage].std.mean(axis=0).tolist(),
                mean_b=stats_b[stage].mean.mean(axis=0).tolist(),
                std_b=stats_b[stage].std.mean(axis=0).tolist(),
            )
        )
    report = GapReport(
        model_id=model_id,
        dataset_pair=(dataset_a.domain, dataset_b.domain),
        per_stage=gaps,
        summaries=summaries,
        kernel=kernel,
        standardized=standardize,
    )
    logger.info(
        f"Domain gap {dataset_a.domain} vs {dataset_b.domain}",
        extra={"mmd": [g.mmd for g in gaps], "model_id": model_id},
    )
    return report


def _style_signal_ratio(means_a: np.ndarray, means_b: np.ndarray) -> float:
    between = (((means_a - means_b) / 2.0) ** 2).mean(axis=0)
    within = (
        batch_stat_variance(means_a).delta_raw + batch_stat_variance(means_b).delta_raw
    ) / 2.0
    top_between = float(between.max())
    top_within = float(within.max())
    if top_within == 0.0:
        return MAX_STYLE_SIGNAL_RATIO if top_between > 0.0 else 0.0
    return min(top_between / top_within, MAX_STYLE_SIGNAL_RATIO)


def rank_channels(delta: np.ndarray, top_k: Optional[int] = None) -> list[int]:
    """Channel indices sorted by δ descending (ties by index), truncated to ``top_k``."""
    if top_k is not None and top_k < 0:
        raise ValueError(f"top_k must be >= 0, got {top_k}")
    order = np.argsort(-np.asarray(delta), kind="stable")
    return [int(c) for c in (order if top_k is None else order[:top_k])]


def sensitivity_ranking(
    net: ConvNet,
    paired_sets: tuple[ImageSet, ImageSet],
    stage: int,
    top_k: Optional[int] = None,
) -> SensitivityReport:
    """Rank channels of ``stage`` by how much their means move across two styles.

    δ is the statistic variance over the union of both styles' per-image channel
    means. The style-signal ratio compares the largest between-style variance
    ((m_a − m_b)/2)² with the largest within-style variance.

    Raises:
        ValueError: If the sets are not content-aligned or are empty.
    """
    set_a, set_b = paired_sets
    _require_images(set_a)
    if not set_a.is_paired_with(set_b):
        raise ValueError(
            f"sensitivity ranking needs paired content; '{set_a.domain}' and "
            f"'{set_b.domain}' are not aligned"
        )
    means_a = extract_stage_stats(net, set_a, [stage])[stage].mean
    means_b = extract_stage_stats(net, set_b, [stage])[stage].mean
    delta = batch_stat_variance(np.vstack([means_a, means_b]))
    ratio = _style_signal_ratio(means_a, means_b) if len(set_a) >= 2 else 0.0
    return SensitivityReport(
        stage=stage,
        delta=delta,
        top_k_channels=rank_channels(delta.delta, top_k),
        style_signal_ratio=ratio,
        has_style_signal=ratio >= STYLE_SIGNAL_THRESHOLD,
    )


def select_channels(
    delta: np.ndarray, fraction: float, direction: Direction
) -> list[int]:
    """Top (most-sensitive) or bottom (least-sensitive) ``fraction`` of channels by δ."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    order = rank_channels(delta)
    count = int(round(fraction * len(order)))
    if count == 0:
        return []
    chosen = order[:count] if direction == "most-sensitive" else order[-count:]
    return sorted(chosen)


def spatial_rank_correlation(before: np.ndarray, after: np.ndarray) -> float:
    """Mean Spearman correlation of within-channel spatial orderings.

    A channel that is constant both before and after counts as perfectly retained;
    constant on one side only counts as zero.
    """
    if before.shape != after.shape or before.ndim != 4:
        raise ValueError(f"expected matching B×C×H×W arrays, got {before.shape}, {after.shape}")
    rows_before = before.reshape(before.shape[0] * before.shape[1], -1)
    rows_after = after.reshape(rows_before.shape)
    ranks_before = rankdata(rows_before, axis=1)
    ranks_after = rankdata(rows_after, axis=1)
    ranks_before -= ranks_before.mean(axis=1, keepdims=True)
    ranks_after -= ranks_after.mean(axis=1, keepdims=True)
    spread_before = np.sqrt((ranks_before**2).sum(axis=1))
    spread_after = np.sqrt((ranks_after**2).sum(axis=1))
    both_varied = (spread_before > 0) & (spread_after > 0)
    both_constant = (spread_before == 0) & (spread_after == 0)
    corr = np.zeros(len(rows_before))
    corr[both_constant] = 1.0
    corr[both_varied] = (ranks_before[both_varied] * ranks_after[both_varied]).sum(axis=1) / (
        spread_before[both_varied] * spread_after[both_varied]
    )
    return float(corr.mean())


def channel_subset_transfer(
    net: ConvNet,
    content: ImageSet,
    style: ImageSet,
    stage: int,
    fraction: float,
    direction: Direction = "most-sensitive",
    kernel: Optional[KernelSpec] = None,
) -> TransferReport:
    """AdaIN restricted to the most or least style-sensitive channels.

    Image i of ``content`` is re-normalized to the statistics of image i of
    ``style``. Channels are ranked by δ over the union of both sets' channel
    means. Both MMD scores share one kernel (the RBF bandwidth is fixed from
    the untransferred pair), so scores for different subsets are comparable.

    Returns:
        Style-match MMD (transferred vs style statistics), the untransferred MMD
        for reference and the spatial rank correlation before/after transfer.

    Raises:
        ValueError: If ``fraction`` is outside [0, 1], the sets differ in size or
            are empty.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    _require_images(content)
    if len(content) != len(style):
        raise ValueError(
            f"content and style sets must have equal size, got {len(content)} and {len(style)}"
        )
    content_features = stage_features(net, content, stage)
    style_features = stage_features(net, style, stage)
    content_stats = channel_mean_std(content_features)
    style_stats = channel_mean_std(style_features)
    delta = batch_stat_variance(np.vstack([content_stats.mean, style_stats.mean]))
    channels = select_channels(delta.delta, fraction, direction)
    mask = np.zeros(content_stats.num_channels, dtype=bool)
    mask[channels] = True

    transferred = adain_transfer(
        content_features,
        content_stats,
        StyleStats(mean=style_stats.mean, std=style_stats.std),
        mask,
    )
    content_vecs = stats_to_vectors(content_stats)
    style_vecs = stats_to_vectors(style_stats)
    kernel = kernel or KernelSpec()
    if kernel.family == "rbf" and kernel.bandwidth is None:
        kernel = KernelSpec(family="rbf", bandwidth=rbf_median_bandwidth(content_vecs, style_vecs))
    transferred_vecs = stats_to_vectors(channel_mean_std(transferred))
    return TransferReport(
        stage=stage,
        fraction=fraction,
        direction=direction,
        channels=channels,
        style_match_mmd=max(mmd(transferred_vecs, style_vecs, kernel), 0.0),
        untransferred_mmd=max(mmd(content_vecs, style_vecs, kernel), 0.0),
        content_retention=spatial_rank_correlation(content_features, transferred),
    )


def dump_stage_stats(
    stats_by_domain: dict[str, dict[int, ChannelStats]], directory: str | Path
) -> list[Path]:
    """Write ``stage{s}_{domain}_{mean|std}.tsr`` for external plotting."""
    root = Path(directory)
    written: list[Path] = []
    for domain, per_stage in stats_by_domain.items():
        for stage, stats in per_stage.items():
            written.append(save_tsr(root / f"stage{stage}_{domain}_mean.tsr", stats.mean))
            written.append(save_tsr(root / f"stage{stage}_{domain}_std.tsr", stats.std))
    return written


def write_report(report: BaseModel, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    return target
