"""Staged convolutional classifier with perturbation sites after chosen stages."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from src.normperturb.models.network import NetworkConfig
from src.normperturb.services.featstats import batch_stat_variance
from src.normperturb.services.perturbation import apply_site
from src.normperturb.tensor.functional import conv2d, global_avg_pool, linear, maxpool2, relu
from src.normperturb.tensor.tensor import ShapeError, Tensor


logger = logging.getLogger(__name__)


@dataclass
class ForwardResult:
    """Logits plus the clean (pre-perturbation) output of every stage."""

    logits: Tensor
    stage_features: list[Tensor]


def _kaiming_uniform(
    shape: tuple[int, ...], fan_in: int, gain: float, rng: np.random.Generator
) -> np.ndarray:
    bound = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class ConvNet:
    """conv-ReLU stages, 2× max-pool between stages, global average pool and linear head."""

    def __init__(self, config: NetworkConfig, params: dict[str, Tensor]) -> None:
        """Wrap existing parameters.

        Args:
            config: Network layout, including perturbation sites.
            params: Named parameter tensors matching ``config``.

        Raises:
            ValueError: If parameter names or shapes do not match the layout.
        """
        expected = self.parameter_shapes(config)
        if set(params) != set(expected):
            missing = sorted(set(expected) - set(params))
            extra = sorted(set(params) - set(expected))
            raise ValueError(f"parameter mismatch: missing={missing}, unexpected={extra}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ValueError(
                    f"parameter {name} has shape {params[name].shape}, expected {shape}"
                )
        self.config = config
        self.params = params

    @staticmethod
    def parameter_shapes(config: NetworkConfig) -> dict[str, tuple[int, ...]]:
        """Parameter shapes in forward order; conv weights are K×C×k×k."""
        shapes: dict[str, tuple[int, ...]] = {}
        k = config.kernel_size
        in_channels = config.in_channels
        for s, stage in enumerate(config.stages, start=1):
            for b in range(1, stage.blocks + 1):
                shapes[f"stage{s}.conv{b}.weight"] = (stage.channels, in_channels, k, k)
                shapes[f"stage{s}.conv{b}.bias"] = (stage.channels,)
                in_channels = stage.channels
        shapes["head.weight"] = (config.num_classes, in_channels)
        shapes["head.bias"] = (config.num_classes,)
        return shapes

    @classmethod
    def parameter_names(cls, config: NetworkConfig) -> list[str]:
        return list(cls.parameter_shapes(config))

    @classmethod
    def initialize(
        cls,
        config: NetworkConfig,
        rng: np.random.Generator,
        dtype: Any = np.float64,
    ) -> ConvNet:
        """Create a network with fan-in scaled uniform weights and zero biases."""
        params: dict[str, Tensor] = {}
        for name, shape in cls.parameter_shapes(config).items():
            if name.endswith(".bias"):
                values = np.zeros(shape)
            else:
                # ReLU follows every conv; the head is linear
                gain = 1.0 if name.startswith("head.") else np.sqrt(2.0)
                values = _kaiming_uniform(shape, int(np.prod(shape[1:])), gain, rng)
            params[name] = Tensor(values, requires_grad=True, dtype=dtype)
        return cls(config, params)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.params["head.weight"].dtype

    def parameters(self) -> list[tuple[str, Tensor]]:
        return [(name, self.params[name]) for name in self.parameter_names(self.config)]

    def trainable_parameters(self, frozen_stages: int = 0) -> list[tuple[str, Tensor]]:
        """Parameters outside the first ``frozen_stages`` stages."""
        if frozen_stages > len(self.config.stages):
            raise ValueError(
                f"cannot freeze {frozen_stages} stages of a {len(self.config.stages)}-stage network"
            )
        frozen = tuple(f"stage{s}." for s in range(1, frozen_stages + 1))
        return [(n, p) for n, p in self.parameters() if not frozen or not n.startswith(frozen)]

    def zero_grad(self) -> None:
        for _, param in self.parameters():
            param.zero_grad()

    def astype(self, dtype: Any) -> ConvNet:
        return ConvNet(self.config, {n: p.astype(dtype) for n, p in self.params.items()})

    def copy(self) -> ConvNet:
        return ConvNet(
            self.config,
            {
                n: Tensor(p.data.copy(), requires_grad=p.requires_grad)
                for n, p in self.params.items()
            },
        )

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: param.data for name, param in self.parameters()}

    def _check_input(self, images: Tensor) -> None:
        if images.ndim != 4 or images.shape[1] != self.config.in_channels:
            raise ShapeError(
                f"expected B×{self.config.in_channels}×H×W images, got {images.shape}"
            )
        downsampling = 2 ** (len(self.config.stages) - 1)
        if images.shape[2] % downsampling or images.shape[3] % downsampling:
            raise ShapeError(
                f"spatial extent {images.shape[2:]} is not divisible by {downsampling}"
            )

    def forward(
        self,
        images: Tensor,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
        gate_rng: Optional[np.random.Generator] = None,
    ) -> ForwardResult:
        """Run all stages; perturbation sites act only when ``training``.

        Raises:
            ShapeError: On a wrong channel count or indivisible spatial extent.
            ValueError: If training with perturbation sites but no ``rng``.
        """
        self._check_input(images)
        if training and self.config.np_sites and rng is None:
            raise ValueError("training forward with perturbation sites needs an rng")
        pad = self.config.kernel_size // 2
        h = images
        features: list[Tensor] = []
        for s, stage in enumerate(self.config.stages, start=1):
            if s > 1:
                h = maxpool2(h)
            for b in range(1, stage.blocks + 1):
                weight = self.params[f"stage{s}.conv{b}.weight"]
                bias = self.params[f"stage{s}.conv{b}.bias"]
                h = relu(conv2d(h, weight, bias, stride=1, pad=pad))
            features.append(h)
            site = self.config.site_for(s)
            if site is not None and training:
                assert rng is not None
                delta = None
                if site.mode == "np_plus":
                    delta = batch_stat_variance(h.data.mean(axis=(2, 3)))
                h = apply_site(h, site, rng, training=True, batch_delta=delta, gate_rng=gate_rng)
        logits = linear(global_avg_pool(h), self.params["head.weight"], self.params["head.bias"])
        return ForwardResult(logits=logits, stage_features=features)

    def predict(self, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Evaluation-mode class predictions."""
        predictions: list[np.ndarray] = []
        for start in range(0, len(images), batch_size):
            batch = Tensor(images[start : start + batch_size], dtype=self.dtype)
            logits = self.forward(batch, training=False).logits
            predictions.append(logits.data.argmax(axis=1))
        return np.concatenate(predictions) if predictions else np.zeros(0, dtype=np.int64)
