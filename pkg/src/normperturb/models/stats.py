"""Channel-statistic models."""

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from src.normperturb.models.arrays import FloatArray


class ChannelStats(BaseModel):
    """Per-sample, per-channel spatial mean and standard deviation.

    Attributes:
        mean: B×C channel means (μ_c).
        std: B×C non-negative channel standard deviations (σ_c).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: FloatArray
    std: FloatArray

    @model_validator(mode="after")
    def check_shapes(self) -> "ChannelStats":
        """Ensure mean and std are matching B×C arrays with std ≥ 0."""
        if self.mean.ndim != 2 or self.mean.shape != self.std.shape:
            raise ValueError(
                f"mean and std must share a B×C shape, got {self.mean.shape} and {self.std.shape}"
            )
        if np.any(self.std < 0):
            raise ValueError("std must be non-negative")
        return self

    @property
    def batch_size(self) -> int:
        return int(self.mean.shape[0])

    @property
    def num_channels(self) -> int:
        return int(self.mean.shape[1])


class StyleStats(ChannelStats):
    """Target affine statistics (μ_s, σ_s) for style transfer."""


class StatVariance(BaseModel):
    """Cross-batch variance of channel means and its max-normalized form.

    Attributes:
        delta_raw: Per-channel variance Δ of the means across the batch.
        mean_of_means: Per-channel batch average μ̄_c.
        delta: Δ / max(Δ), all zeros when max(Δ) is zero.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    delta_raw: FloatArray
    mean_of_means: FloatArray
    delta: FloatArray

    @model_validator(mode="after")
    def check_delta(self) -> "StatVariance":
        if not (self.delta_raw.shape == self.mean_of_means.shape == self.delta.shape):
            raise ValueError("delta_raw, mean_of_means and delta must share one shape")
        if self.delta_raw.ndim != 1:
            raise ValueError(f"statistic variance must be per-channel, got {self.delta_raw.shape}")
        if np.any(self.delta_raw < 0):
            raise ValueError("delta_raw must be non-negative")
        if np.any(self.delta < 0) or np.any(self.delta > 1):
            raise ValueError("delta must lie in [0, 1]")
        return self

    @property
    def num_channels(self) -> int:
        return int(self.delta.shape[0])


class NoiseDraw(BaseModel):
    """Sampled (α, β) pair, each B×C.

    The implied perturbed statistics are σ_s* = α·σ_c and μ_s* = β·μ_c.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: FloatArray
    beta: FloatArray

    @model_validator(mode="after")
    def check_shapes(self) -> "NoiseDraw":
        if self.alpha.ndim != 2 or self.alpha.shape != self.beta.shape:
            raise ValueError(
                f"alpha and beta must share a B×C shape, got {self.alpha.shape}, {self.beta.shape}"
            )
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.alpha.shape[0]), int(self.alpha.shape[1]))
