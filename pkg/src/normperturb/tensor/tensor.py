"""Dense tensor with reverse-mode differentiation."""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, ClassVar, Union

import numpy as np


logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]

_ANOMALY_DETECTION = True


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class NonFiniteError(FloatingPointError):
    """Raised when an operation produces NaN or Inf values."""


@contextmanager
def anomaly_detection(enabled: bool = True) -> Iterator[None]:
    """Temporarily enable or disable NaN/Inf checks after every operation."""
    global _ANOMALY_DETECTION
    previous = _ANOMALY_DETECTION
    _ANOMALY_DETECTION = enabled
    try:
        yield
    finally:
        _ANOMALY_DETECTION = previous


def set_anomaly_detection(enabled: bool) -> None:
    """Set the process-wide NaN/Inf check flag."""
    global _ANOMALY_DETECTION
    _ANOMALY_DETECTION = enabled


def _check_finite(array: np.ndarray, where: str) -> None:
    if _ANOMALY_DETECTION and not np.all(np.isfinite(array)):
        bad = int(np.size(array) - np.count_nonzero(np.isfinite(array)))
        raise NonFiniteError(f"{where} produced {bad} non-finite value(s)")


def _as_float_array(data: ArrayLike, dtype: np.dtype[Any] | type | None) -> np.ndarray:
    array = np.asarray(data)
    if dtype is not None:
        return array.astype(dtype, copy=False)
    if array.dtype in (np.float32, np.float64):
        return array
    return array.astype(np.float64)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out dimensions that were broadcast to reach ``grad.shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function:
    """A differentiable operation recorded on the graph.

    Subclasses implement ``forward`` on raw arrays and ``backward`` returning one
    adjoint per input (``None`` where an input needs no gradient).
    """

    def __init__(self, *inputs: Tensor) -> None:
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        fn = cls(*inputs)
        out = fn.forward(*(t.data for t in inputs), **kwargs)
        _check_finite(out, cls.__name__)
        requires_grad = any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, creator=fn if requires_grad else None)


class Tensor:
    """N-dimensional array of reals with optional gradient tracking.

    Attributes:
        data: Underlying float32/float64 array.
        requires_grad: Whether adjoints are accumulated for this tensor.
        grad: Accumulated adjoint (leaves only), same shape as ``data``.
    """

    __array_priority__: ClassVar[float] = 100.0

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: np.dtype[Any] | type | None = None,
        creator: Function | None = None,
    ) -> None:
        self.data = _as_float_array(data, dtype)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.creator = creator

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self.creator is None

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor(self.data, requires_grad=False)

    def astype(self, dtype: np.dtype[Any] | type) -> Tensor:
        """Return a leaf copy in another precision, keeping ``requires_grad``."""
        return Tensor(self.data.astype(dtype), requires_grad=self.requires_grad)

    def zero_grad(self) -> None:
        self.grad = None

    def _lift(self, other: Tensor | ArrayLike) -> Tensor:
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    def __add__(self, other: Tensor | ArrayLike) -> Tensor:
        return Add.apply(self, self._lift(other))

    def __radd__(self, other: ArrayLike) -> Tensor:
        return Add.apply(self._lift(other), self)

    def __sub__(self, other: Tensor | ArrayLike) -> Tensor:
        return Add.apply(self, Neg.apply(self._lift(other)))

    def __rsub__(self, other: ArrayLike) -> Tensor:
        return Add.apply(self._lift(other), Neg.apply(self))

    def __mul__(self, other: Tensor | ArrayLike) -> Tensor:
        return Mul.apply(self, self._lift(other))

    def __rmul__(self, other: ArrayLike) -> Tensor:
        return Mul.apply(self._lift(other), self)

    def __truediv__(self, other: Tensor | ArrayLike) -> Tensor:
        return Div.apply(self, self._lift(other))

    def __rtruediv__(self, other: ArrayLike) -> Tensor:
        return Div.apply(self._lift(other), self)

    def __neg__(self) -> Tensor:
        return Neg.apply(self)

    def __pow__(self, exponent: float) -> Tensor:
        return Pow.apply(self, exponent=float(exponent))

    def __matmul__(self, other: Tensor) -> Tensor:
        return MatMul.apply(self, other)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return Mean.apply(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> Tensor:
        return Reshape.apply(self, shape=shape)

    def backward(self, grad: ArrayLike | None = None) -> None:
        """Populate ``grad`` of every leaf reachable from this tensor.

        Raises:
            ShapeError: If called on a non-scalar tensor without an explicit seed.
            NonFiniteError: If an adjoint becomes NaN/Inf.
        """
        if grad is None:
            if self.size != 1:
                raise ShapeError(f"backward() needs a scalar loss, got shape {self.shape}")
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=self.dtype)
            if seed.shape != self.shape:
                raise ShapeError(f"seed gradient shape {seed.shape} != tensor shape {self.shape}")
        Graph.trace(self).backward(seed)


def _normalize_axes(axis: int | tuple[int, ...] | None, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(a % ndim for a in axes)


class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a + b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        return unbroadcast(grad, a.shape), unbroadcast(grad, b.shape)


class Neg(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return -a

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (-grad,)


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a * b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        return unbroadcast(grad * b.data, a.shape), unbroadcast(grad * a.data, b.shape)


class Div(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a / b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        ga = grad / b.data
        gb = -grad * a.data / (b.data * b.data)
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)


class Pow(Function):
    def forward(self, a: np.ndarray, exponent: float) -> np.ndarray:
        self.exponent = exponent
        return np.power(a, exponent)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        (a,) = self.inputs
        return (grad * self.exponent * np.power(a.data, self.exponent - 1.0),)


class Sum(Function):
    def forward(
        self, a: np.ndarray, axis: int | tuple[int, ...] | None, keepdims: bool
    ) -> np.ndarray:
        self.axes = _normalize_axes(axis, a.ndim)
        self.keepdims = keepdims
        return np.asarray(a.sum(axis=self.axes, keepdims=keepdims))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        (a,) = self.inputs
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        return (np.broadcast_to(grad, a.shape).copy(),)


class Mean(Function):
    def forward(
        self, a: np.ndarray, axis: int | tuple[int, ...] | None, keepdims: bool
    ) -> np.ndarray:
        self.axes = _normalize_axes(axis, a.ndim)
        self.keepdims = keepdims
        self.count = int(np.prod([a.shape[i] for i in self.axes]))
        return np.asarray(a.mean(axis=self.axes, keepdims=keepdims))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        (a,) = self.inputs
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        return (np.broadcast_to(grad / self.count, a.shape).copy(),)


class Reshape(Function):
    def forward(self, a: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
        return a.reshape(shape)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        (a,) = self.inputs
        return (grad.reshape(a.shape),)


class MatMul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul needs (m,k)@(k,n), got {a.shape} @ {b.shape}")
        return a @ b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        return grad @ b.data.T, a.data.T @ grad


@dataclass
class Graph:
    """Executed operations reachable from a root, in topological order.

    ``nodes`` lists every tensor once with inputs before outputs, so replaying it
    in reverse visits each node exactly once.
    """

    root: Tensor
    nodes: list[Tensor] = field(default_factory=list)

    @classmethod
    def trace(cls, root: Tensor) -> Graph:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node.creator is not None:
                for parent in node.creator.inputs:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return cls(root=root, nodes=order)

    def backward(self, seed: np.ndarray) -> None:
        if not self.root.requires_grad:
            raise ValueError("loss is not connected to any tensor that requires grad")
        adjoints: dict[int, np.ndarray] = {id(self.root): seed}
        for node in reversed(self.nodes):
            grad = adjoints.pop(id(node), None)
            if grad is None:
                continue
            if node.creator is None:
                _check_finite(grad, "backward")
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            input_grads = node.creator.backward(grad)
            for parent, parent_grad in zip(node.creator.inputs, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                _check_finite(parent_grad, f"{type(node.creator).__name__}.backward")
                key = id(parent)
                adjoints[key] = adjoints[key] + parent_grad if key in adjoints else parent_grad
