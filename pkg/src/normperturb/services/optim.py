"""Stochastic gradient descent with heavy-ball momentum and L2 weight decay."""

from __future__ import annotations

import numpy as np

from src.normperturb.tensor.tensor import Tensor


class SGD:
    """In-place SGD over named parameters.

    Update per parameter: g = ∇ + λ·w; v = μ·v + g; w = w − η·v.
    Parameters without a gradient are skipped and keep their velocity.
    """

    def __init__(
        self,
        params: list[tuple[str, Tensor]],
        lr: float,
        momentum: float = 0.0,
        weight_decay: float = 0.0,
    ) -> None:
        if lr < 0 or momentum < 0 or weight_decay < 0:
            raise ValueError(
                f"lr, momentum and weight_decay must be >= 0, got {lr}, {momentum}, {weight_decay}"
            )
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity: dict[str, np.ndarray] = {}

    def zero_grad(self) -> None:
        for _, param in self.params:
            param.zero_grad()

    def step(self) -> None:
        for name, param in self.params:
            if param.grad is None:
                continue
            grad = param.grad
            if self.weight_decay:
                grad = grad + self.weight_decay * param.data
            if self.momentum:
                previous = self.velocity.get(name)
                grad = grad if previous is None else self.momentum * previous + grad
                self.velocity[name] = grad
            param.data = (param.data - self.lr * grad).astype(param.dtype, copy=False)
