"""Photometric domain style models."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


_MIN_POSITIVE = 1e-3


class StyleParams(BaseModel):
    """Parametric photometric style.

    Attributes:
        channel_gain: Per-channel RGB multipliers (> 0).
        channel_bias: Per-channel RGB offsets.
        contrast: Contrast factor about mid-gray 0.5 (> 0).
        fog_strength: Blend weight toward white in [0, 1].
        noise_std: Std of additive gaussian texture noise.
        gamma: Gamma exponent (> 0).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    channel_gain: tuple[float, float, float] = (1.0, 1.0, 1.0)
    channel_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    contrast: float = Field(default=1.0, gt=0.0)
    fog_strength: float = Field(default=0.0, ge=0.0, le=1.0)
    noise_std: float = Field(default=0.0, ge=0.0)
    gamma: float = Field(default=1.0, gt=0.0)

    @field_validator("channel_gain")
    @classmethod
    def gains_positive(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        """Ensure every channel gain is positive.

        Raises:
            ValueError: If a gain is not > 0.
        """
        if any(g <= 0 for g in v):
            raise ValueError(f"channel gains must be > 0, got {v}")
        return v

    @classmethod
    def identity(cls) -> "StyleParams":
        return cls()

    @property
    def is_identity(self) -> bool:
        return self == StyleParams()


class StyleJitter(BaseModel):
    """Half-widths of per-image uniform jitter around a style."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    channel_gain: float = Field(default=0.0, ge=0.0)
    channel_bias: float = Field(default=0.0, ge=0.0)
    contrast: float = Field(default=0.0, ge=0.0)
    fog_strength: float = Field(default=0.0, ge=0.0)
    noise_std: float = Field(default=0.0, ge=0.0)
    gamma: float = Field(default=0.0, ge=0.0)

    @property
    def is_zero(self) -> bool:
        return self == StyleJitter()


class DomainSpec(BaseModel):
    """A named synthetic domain: a base style plus per-image jitter."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(min_length=1)
    style: StyleParams = Field(default_factory=StyleParams)
    style_jitter: StyleJitter = Field(default_factory=StyleJitter)

    @model_validator(mode="after")
    def check_name(self) -> "DomainSpec":
        if not self.name.replace("-", "").replace("_", "").isalnum():
            raise ValueError(f"domain name must be alphanumeric with - or _, got {self.name!r}")
        return self

    def sample_style(self, rng: np.random.Generator) -> StyleParams:
        """Draw a jittered style, clamped back into the valid parameter ranges."""
        if self.style_jitter.is_zero:
            return self.style
        j = self.style_jitter
        s = self.style

        def around(value: float, half_width: float) -> float:
            return float(value + rng.uniform(-half_width, half_width)) if half_width else value

        gains = tuple(max(around(g, j.channel_gain), _MIN_POSITIVE) for g in s.channel_gain)
        biases = tuple(around(b, j.channel_bias) for b in s.channel_bias)
        return StyleParams(
            channel_gain=gains,  # type: ignore[arg-type]
            channel_bias=biases,  # type: ignore[arg-type]
            contrast=max(around(s.contrast, j.contrast), _MIN_POSITIVE),
            fog_strength=min(max(around(s.fog_strength, j.fog_strength), 0.0), 1.0),
            noise_std=max(around(s.noise_std, j.noise_std), 0.0),
            gamma=max(around(s.gamma, j.gamma), _MIN_POSITIVE),
        )
