"""Network and training configuration models."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.normperturb.models.noise import NpSiteConfig


class StageSpec(BaseModel):
    """A group of conv + ReLU blocks at one resolution."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    channels: int = Field(gt=0)
    blocks: int = Field(default=1, ge=1)


def _default_stages() -> list[StageSpec]:
    return [StageSpec(channels=c) for c in (16, 32, 64, 128)]


class NetworkConfig(BaseModel):
    """Staged convolutional classifier layout.

    Attributes:
        in_channels: Image channels.
        num_classes: Number of output classes K.
        input_size: Square input extent; divisible by 2^(stages-1).
        kernel_size: Convolution kernel extent (1 or 3, same padding).
        stages: Stage widths and depths, 2× max-pool between stages.
        np_sites: Perturbation sites, at most one per stage.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    in_channels: int = Field(default=3, gt=0)
    num_classes: int = Field(default=4, ge=2)
    input_size: int = Field(default=32, ge=1)
    kernel_size: Literal[1, 3] = 3
    stages: list[StageSpec] = Field(default_factory=_default_stages, min_length=1)
    np_sites: list[NpSiteConfig] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_layout(self) -> "NetworkConfig":
        """Validate site references and spatial divisibility.

        Raises:
            ValueError: If a site names a missing stage, two sites share a stage, or
                the input extent cannot be halved between every pair of stages.
        """
        site_ids = [site.site_id for site in self.np_sites]
        if len(site_ids) != len(set(site_ids)):
            raise ValueError(f"np_sites must reference distinct stages, got {site_ids}")
        for site_id in site_ids:
            if site_id > len(self.stages):
                raise ValueError(
                    f"np site after stage {site_id} but only {len(self.stages)} stages"
                )
        downsampling = 2 ** (len(self.stages) - 1)
        if self.input_size % downsampling:
            raise ValueError(
                f"input_size {self.input_size} is not divisible by "
                f"total downsampling {downsampling}"
            )
        return self

    def site_for(self, stage: int) -> Optional[NpSiteConfig]:
        for site in self.np_sites:
            if site.site_id == stage:
                return site
        return None

    @property
    def uses_np_plus(self) -> bool:
        return any(site.mode == "np_plus" for site in self.np_sites)


class TrainConfig(BaseModel):
    """SGD training settings.

    Attributes:
        epochs: Passes over the training set.
        batch_size: Mini-batch size B (≥ 2 so batch statistics exist).
        learning_rate: SGD step size.
        momentum: Heavy-ball momentum.
        weight_decay: L2 coefficient added to gradients.
        seed: Seed for init, shuffling, noise, gates and augmentation streams.
        precision: Training dtype; gradient checks use float64.
        frozen_stages: Leading stages excluded from optimisation.
        augment: Apply photometric augmentation to training images.
        detect_anomalies: Abort on NaN/Inf.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=32, ge=2)
    learning_rate: float = Field(default=0.05, ge=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=5e-4, ge=0.0)
    seed: int = Field(default=0, ge=0)
    precision: Literal["float32", "float64"] = "float32"
    frozen_stages: int = Field(default=0, ge=0)
    augment: bool = False
    detect_anomalies: bool = True


class EpochMetrics(BaseModel):
    """Loss and accuracy for one split after one epoch."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    epoch: int = Field(ge=1)
    split: Literal["train", "val"]
    loss: float
    accuracy: float = Field(ge=0.0, le=1.0)
