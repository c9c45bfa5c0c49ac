"""Minimal dense tensor engine with reverse-mode differentiation."""

from src.normperturb.tensor.functional import (
    conv2d,
    global_avg_pool,
    linear,
    maxpool2,
    relu,
    softmax_cross_entropy,
)
from src.normperturb.tensor.gradcheck import check_gradient, finite_difference_grad
from src.normperturb.tensor.tensor import (
    Graph,
    NonFiniteError,
    ShapeError,
    Tensor,
    anomaly_detection,
)

__all__ = [
    "Graph",
    "NonFiniteError",
    "ShapeError",
    "Tensor",
    "anomaly_detection",
    "check_gradient",
    "conv2d",
    "finite_difference_grad",
    "global_avg_pool",
    "linear",
    "maxpool2",
    "relu",
    "softmax_cross_entropy",
]
