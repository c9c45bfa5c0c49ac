"""Noise and perturbation-site configuration models."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


NoiseFamily = Literal["gaussian", "uniform", "beta"]

_FAMILY_PREFIX = {"gaussian": "G", "uniform": "U", "beta": "B"}


class NoiseSpec(BaseModel):
    """Distribution of the α and β perturbation factors.

    Attributes:
        family: gaussian (mean, std), uniform (low, high) or beta (a, b). Beta draws
            are scaled ×2 onto [0, 2] so their mean is 2a/(a+b).
        params: The two family parameters.
        clamp_negative: Clamp draws to [0, ∞).
        mean_bounds: Accepted range of the distribution mean; None disables the check.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    family: NoiseFamily = "gaussian"
    params: tuple[float, float] = (1.0, 0.75)
    clamp_negative: bool = False
    mean_bounds: Optional[tuple[float, float]] = (0.9, 1.1)

    @model_validator(mode="after")
    def check_params(self) -> "NoiseSpec":
        """Validate family parameters and that the noise is centred around one.

        Raises:
            ValueError: On invalid parameters or a mean outside ``mean_bounds``.
        """
        first, second = self.params
        if self.family == "gaussian" and second < 0:
            raise ValueError(f"gaussian std must be >= 0, got {second}")
        if self.family == "uniform" and first > second:
            raise ValueError(f"uniform needs low <= high, got ({first}, {second})")
        if self.family == "beta" and (first <= 0 or second <= 0):
            raise ValueError(f"beta parameters must be > 0, got ({first}, {second})")
        if self.mean_bounds is not None:
            low, high = self.mean_bounds
            mean = self.expected_mean()
            if not low <= mean <= high:
                raise ValueError(f"noise mean {mean:g} is outside [{low:g}, {high:g}]")
        return self

    @classmethod
    def gaussian(cls, mean: float = 1.0, std: float = 0.75) -> "NoiseSpec":
        return cls(family="gaussian", params=(mean, std))

    @classmethod
    def uniform(cls, low: float = 0.0, high: float = 2.0) -> "NoiseSpec":
        return cls(family="uniform", params=(low, high))

    @classmethod
    def beta(cls, a: float = 0.75, b: float = 0.75) -> "NoiseSpec":
        return cls(family="beta", params=(a, b))

    def expected_mean(self) -> float:
        first, second = self.params
        if self.family == "gaussian":
            return first
        if self.family == "uniform":
            return (first + second) / 2.0
        return 2.0 * first / (first + second)

    @property
    def label(self) -> str:
        """Short name such as ``G(1, 0.75)``."""
        first, second = self.params
        return f"{_FAMILY_PREFIX[self.family]}({first:g}, {second:g})"


class NpSiteConfig(BaseModel):
    """One perturbation site following a network stage.

    Attributes:
        site_id: Stage (1-based) after which the site applies.
        probability: Bernoulli gate probability p.
        mode: ``np`` or ``np_plus`` (sensitivity-weighted shift).
        noise: Distribution of α and β.
        gating: One gate per mini-batch or one per sample.
        granularity: ``channel`` is the method; ``activation`` and ``spatial`` exist
            only as ablation comparators.
        enabled_in_training_only: Sites are the identity at evaluation.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    site_id: int = Field(ge=1)
    probability: float = Field(default=0.5, ge=0.0, le=1.0)
    mode: Literal["np", "np_plus"] = "np"
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    gating: Literal["batch", "sample"] = "batch"
    granularity: Literal["channel", "activation", "spatial"] = "channel"
    enabled_in_training_only: Literal[True] = True

    @model_validator(mode="after")
    def check_np_plus_granularity(self) -> "NpSiteConfig":
        if self.mode == "np_plus" and self.granularity != "channel":
            raise ValueError("np_plus weights channels and needs channel granularity")
        return self
