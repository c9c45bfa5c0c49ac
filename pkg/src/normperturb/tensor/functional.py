"""Layer primitives for the staged convolutional network."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.normperturb.tensor.tensor import Function, ShapeError, Tensor


class Conv2d(Function):
    """Cross-correlation over patch windows; weights laid out K×C×kh×kw."""

    def forward(  # type: ignore[override]
        self, x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int
    ) -> np.ndarray:
        self.stride = stride
        self.pad = pad
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
        kh, kw = w.shape[2:]
        windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        self.windows = windows
        self.padded_shape = xp.shape
        out = np.tensordot(windows, w, axes=([1, 4, 5], [1, 2, 3]))
        return np.ascontiguousarray(out.transpose(0, 3, 1, 2)) + b.reshape(1, -1, 1, 1)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        x, w, b = self.inputs
        kh, kw = w.shape[2:]
        s = self.stride
        out_h, out_w = grad.shape[2:]
        grad_w = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = grad.sum(axis=(0, 2, 3))
        grad_xp = np.zeros(self.padded_shape, dtype=grad.dtype)
        for i in range(kh):
            for j in range(kw):
                contrib = np.tensordot(grad, w.data[:, :, i, j], axes=([1], [0]))
                grad_xp[:, :, i : i + s * out_h : s, j : j + s * out_w : s] += contrib.transpose(
                    0, 3, 1, 2
                )
        p = self.pad
        grad_x = grad_xp[:, :, p : p + x.shape[2], p : p + x.shape[3]] if p else grad_xp
        return grad_x, grad_w, grad_b


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """2-D cross-correlation producing B×K×H'×W'.

    Raises:
        ShapeError: On rank, channel or kernel-extent mismatch.
        ValueError: If ``stride < 1`` or ``pad < 0``.
    """
    if stride < 1 or pad < 0:
        raise ValueError(f"stride must be >= 1 and pad >= 0, got stride={stride}, pad={pad}")
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d needs 4-D input and weight, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"input has {x.shape[1]} channels but weight expects {w.shape[1]}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"bias shape {b.shape} does not match {w.shape[0]} output channels")
    kh, kw = w.shape[2:]
    if kh > x.shape[2] + 2 * pad or kw > x.shape[3] + 2 * pad:
        raise ShapeError(f"kernel {kh}x{kw} exceeds padded input {x.shape[2:]} with pad={pad}")
    return Conv2d.apply(x, w, b, stride=stride, pad=pad)


class ReLU(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:  # type: ignore[override]
        self.mask = x > 0
        return np.where(self.mask, x, 0.0).astype(x.dtype, copy=False)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.mask,)


def relu(x: Tensor) -> Tensor:
    return ReLU.apply(x)


class MaxPool2(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:  # type: ignore[override]
        b, c, h, w = x.shape
        blocks = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
        blocks = blocks.reshape(b, c, h // 2, w // 2, 4)
        # first maximum wins on ties
        self.argmax = blocks.argmax(axis=-1)
        return np.take_along_axis(blocks, self.argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        (x,) = self.inputs
        b, c, h, w = x.shape
        onehot = np.zeros((b, c, h // 2, w // 2, 4), dtype=grad.dtype)
        np.put_along_axis(onehot, self.argmax[..., None], grad[..., None], axis=-1)
        grad_x = onehot.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        return (grad_x.reshape(b, c, h, w),)


def maxpool2(x: Tensor) -> Tensor:
    """2×2 max pooling with stride 2.

    Raises:
        ShapeError: If the input is not 4-D or a spatial extent is odd.
    """
    if x.ndim != 4:
        raise ShapeError(f"maxpool2 needs a 4-D input, got {x.shape}")
    if x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError(f"maxpool2 needs even spatial extents, got {x.shape[2:]}")
    return MaxPool2.apply(x)


def global_avg_pool(x: Tensor) -> Tensor:
    if x.ndim != 4:
        raise ShapeError(f"global_avg_pool needs a 4-D input, got {x.shape}")
    return x.mean(axis=(2, 3))


class Linear(Function):
    def forward(  # type: ignore[override]
        self, x: np.ndarray, w: np.ndarray, b: np.ndarray
    ) -> np.ndarray:
        return x @ w.T + b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        x, w, _ = self.inputs
        return grad @ w.data, grad.T @ x.data, grad.sum(axis=0)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map B×D → B×K with weight K×D."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"linear needs x (B,D) and w (K,D), got {x.shape} and {w.shape}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"bias shape {b.shape} does not match {w.shape[0]} outputs")
    return Linear.apply(x, w, b)


class SoftmaxCrossEntropy(Function):
    def forward(  # type: ignore[override]
        self, logits: np.ndarray, labels: np.ndarray
    ) -> np.ndarray:
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_probs = shifted - log_norm
        self.probs = np.exp(log_probs)
        self.labels = labels.astype(np.int64)
        picked = log_probs[np.arange(len(labels)), self.labels]
        return np.asarray(-picked.mean(), dtype=logits.dtype)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        batch = len(self.labels)
        d_logits = self.probs.copy()
        d_logits[np.arange(batch), self.labels] -= 1.0
        return d_logits * (grad / batch), None


def softmax_cross_entropy(logits: Tensor, labels: Sequence[int] | np.ndarray) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under softmax(``logits``).

    Raises:
        ShapeError: If logits are not B×K or the label count differs from B.
        ValueError: If any label is outside [0, K).
    """
    label_array = np.asarray(labels)
    if logits.ndim != 2:
        raise ShapeError(f"logits must be (B,K), got {logits.shape}")
    if label_array.shape != (logits.shape[0],):
        raise ShapeError(f"expected {logits.shape[0]} labels, got shape {label_array.shape}")
    num_classes = logits.shape[1]
    if label_array.size and (label_array.min() < 0 or label_array.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes}), got {label_array.tolist()}")
    return SoftmaxCrossEntropy.apply(logits, Tensor(label_array.astype(np.float64)))
