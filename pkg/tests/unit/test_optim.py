"""Unit tests for the SGD optimizer."""

import numpy as np
import pytest

from src.normperturb.services.optim import SGD
from src.normperturb.tensor.tensor import Tensor


def _param(value: float, grad: float | None) -> Tensor:
    param = Tensor([value], requires_grad=True)
    param.grad = None if grad is None else np.array([grad])
    return param


def test_plain_step() -> None:
    """Test w ← w − η·∇."""
    w = _param(1.0, 0.5)
    SGD([("w", w)], lr=0.1).step()
    np.testing.assert_allclose(w.data, [0.95])


def test_momentum_accumulates() -> None:
    """Test the second step moves by η·(1 + μ)·∇ for a constant gradient."""
    w = _param(1.0, 1.0)
    optimizer = SGD([("w", w)], lr=0.1, momentum=0.9)
    optimizer.step()
    np.testing.assert_allclose(w.data, [0.9])
    w.grad = np.array([1.0])
    optimizer.step()
    np.testing.assert_allclose(w.data, [0.9 - 0.1 * 1.9])


def test_weight_decay() -> None:
    """Test λ·w is added to the gradient."""
    w = _param(2.0, 0.0)
    SGD([("w", w)], lr=0.5, weight_decay=0.1).step()
    np.testing.assert_allclose(w.data, [2.0 - 0.5 * 0.2])


def test_zero_learning_rate_is_noop() -> None:
    """Test lr = 0 leaves weights untouched."""
    w = _param(3.0, 10.0)
    SGD([("w", w)], lr=0.0, momentum=0.9, weight_decay=0.1).step()
    np.testing.assert_array_equal(w.data, [3.0])


def test_missing_gradient_skipped() -> None:
    """Test parameters without a gradient are not updated."""
    w = _param(1.0, None)
    SGD([("w", w)], lr=1.0).step()
    np.testing.assert_array_equal(w.data, [1.0])


def test_keeps_precision() -> None:
    """Test float32 parameters stay float32."""
    w = Tensor(np.ones(2, dtype=np.float32), requires_grad=True)
    w.grad = np.ones(2, dtype=np.float32)
    SGD([("w", w)], lr=0.1, weight_decay=0.01).step()
    assert w.dtype == np.float32


def test_zero_grad() -> None:
    """Test zero_grad clears every managed gradient."""
    w = _param(1.0, 1.0)
    optimizer = SGD([("w", w)], lr=0.1)
    optimizer.zero_grad()
    assert w.grad is None


def test_negative_hyperparameters() -> None:
    """Test negative settings are rejected."""
    with pytest.raises(ValueError):
        SGD([], lr=-0.1)
    with pytest.raises(ValueError):
        SGD([], lr=0.1, momentum=-0.5)
