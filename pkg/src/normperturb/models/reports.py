"""Diagnostic report models."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.normperturb.models.stats import StatVariance


MMD_FLOOR = -1e-12


class KernelSpec(BaseModel):
    """MMD kernel: linear, or RBF with an explicit or median-heuristic bandwidth."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Literal["linear", "rbf"] = "rbf"
    bandwidth: Optional[float] = Field(default=None, gt=0.0)


class StageMmd(BaseModel):
    model_config = ConfigDict(frozen=True)

    stage: int = Field(ge=1)
    mmd: float = Field(ge=MMD_FLOOR)


class MmdReport(BaseModel):
    """MMD value per stage under one kernel."""

    model_config = ConfigDict(frozen=True)

    per_stage: list[StageMmd]
    kernel: KernelSpec


class StageGap(BaseModel):
    """Per-stage MMD and its running sum over stages 1..s."""

    model_config = ConfigDict(frozen=True)

    stage: int = Field(ge=1)
    mmd: float = Field(ge=MMD_FLOOR)
    accumulated: float = Field(ge=MMD_FLOOR)


class StageSummary(BaseModel):
    """Channel statistics of both datasets at one stage, averaged over images."""

    model_config = ConfigDict(frozen=True)

    stage: int = Field(ge=1)
    mean_a: list[float]
    std_a: list[float]
    mean_b: list[float]
    std_b: list[float]


class GapReport(BaseModel):
    """Feature-statistic domain gap between two datasets, stage by stage."""

    model_config = ConfigDict(frozen=True)

    model_id: str
    dataset_pair: tuple[str, str]
    per_stage: list[StageGap]
    summaries: list[StageSummary]
    kernel: KernelSpec
    standardized: bool = False

    @field_validator("per_stage")
    @classmethod
    def stages_ordered(cls, v: list[StageGap]) -> list[StageGap]:
        stages = [gap.stage for gap in v]
        if stages != sorted(stages):
            raise ValueError(f"stages must be ordered, got {stages}")
        return v

    def to_mmd_report(self) -> MmdReport:
        return MmdReport(
            per_stage=[StageMmd(stage=g.stage, mmd=g.mmd) for g in self.per_stage],
            kernel=self.kernel,
        )


class SensitivityReport(BaseModel):
    """Style-sensitivity ranking of channels at one stage.

    Attributes:
        stage: Stage whose features were measured.
        delta: Statistic variance over both styles of the paired content.
        top_k_channels: Channel indices sorted by δ descending.
        style_signal_ratio: max between-style variance over max within-style variance,
            capped at 1e6 (the value reported when within-style variance is zero).
        has_style_signal: Ratio reaches the detection threshold.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    stage: int = Field(ge=1)
    delta: StatVariance
    top_k_channels: list[int]
    style_signal_ratio: float = Field(ge=0.0, allow_inf_nan=False)
    has_style_signal: bool


class TransferReport(BaseModel):
    """Quality of AdaIN restricted to a channel subset."""

    model_config = ConfigDict(frozen=True)

    stage: int = Field(ge=1)
    fraction: float = Field(ge=0.0, le=1.0)
    direction: Literal["most-sensitive", "least-sensitive"]
    channels: list[int]
    style_match_mmd: float = Field(ge=MMD_FLOOR)
    untransferred_mmd: float = Field(ge=MMD_FLOOR)
    content_retention: float


class SweepRow(BaseModel):
    """Result of one sweep cell trained under one seed."""

    model_config = ConfigDict(frozen=True)

    label: str
    seed: int
    source_accuracy: float
    target_accuracy: dict[str, float]
    final_stage_mmd: float

    @property
    def mean_target_accuracy(self) -> float:
        values = list(self.target_accuracy.values())
        return sum(values) / len(values) if values else 0.0
