"""Central finite differences as a verification oracle for backward()."""

from __future__ import annotations

import logging
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel

from src.normperturb.tensor.tensor import Tensor


logger = logging.getLogger(__name__)

ScalarFn = Callable[[Tensor], Tensor | float]


def _scalar(value: Tensor | float) -> float:
    return value.item() if isinstance(value, Tensor) else float(value)


def finite_difference_grad(f: ScalarFn, x: Tensor, h: float = 1e-6) -> Tensor:
    """Estimate df/dx elementwise with (f(x+h·e_i) − f(x−h·e_i)) / 2h.

    ``f`` must be deterministic: any noise it draws has to come from an RNG
    re-seeded inside ``f`` so both evaluations see the same draw.
    """
    base = np.array(x.data, copy=True)
    grad = np.zeros_like(base)
    flat = base.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        f_plus = _scalar(f(Tensor(base.copy())))
        flat[i] = original - h
        f_minus = _scalar(f(Tensor(base.copy())))
        flat[i] = original
        grad_flat[i] = (f_plus - f_minus) / (2.0 * h)
    return Tensor(grad)


class GradCheckResult(BaseModel):
    """Outcome of comparing backward() against finite differences.

    Attributes:
        max_relative_error: Worst relative error over elements with |analytic| ≥ threshold.
        max_absolute_error: Worst absolute error over elements below the threshold.
        passed: Both errors within tolerance.
    """

    max_relative_error: float
    max_absolute_error: float
    passed: bool


def compare_gradients(
    analytic: np.ndarray,
    numeric: np.ndarray,
    rtol: float = 1e-4,
    atol: float = 1e-7,
    threshold: float = 1e-8,
) -> GradCheckResult:
    """Relative comparison where |analytic| ≥ threshold, absolute comparison below it."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    diff = np.abs(analytic - numeric)
    large = np.abs(analytic) >= threshold
    rel = diff[large] / np.maximum(np.abs(analytic[large]), np.abs(numeric[large]))
    max_rel = float(rel.max()) if rel.size else 0.0
    max_abs = float(diff[~large].max()) if (~large).any() else 0.0
    return GradCheckResult(
        max_relative_error=max_rel,
        max_absolute_error=max_abs,
        passed=max_rel < rtol and max_abs < atol,
    )


def check_gradient(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    h: float = 1e-6,
    rtol: float = 1e-4,
    atol: float = 1e-7,
) -> GradCheckResult:
    """Run backward through ``f`` at ``x`` and compare with finite differences."""
    leaf = Tensor(x.data.copy(), requires_grad=True)
    f(leaf).backward()
    assert leaf.grad is not None
    numeric = finite_difference_grad(f, x, h=h)
    result = compare_gradients(leaf.grad, numeric.data, rtol=rtol, atol=atol)
    if not result.passed:
        logger.warning(
            "Gradient check failed",
            extra={
                "max_relative_error": result.max_relative_error,
                "max_absolute_error": result.max_absolute_error,
            },
        )
    return result
