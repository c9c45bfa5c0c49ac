"""``.tsr`` files: a JSON header line followed by a little-endian payload."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from src.normperturb.tensor.tensor import Tensor


TSR_SUFFIX = ".tsr"

_DTYPES: dict[str, str] = {
    "float32": "<f4",
    "float64": "<f8",
    "int64": "<i8",
}


def encode_tsr(array: np.ndarray) -> bytes:
    """Encode an array as header line + raw little-endian bytes."""
    dtype_name = np.dtype(array.dtype).name
    if dtype_name not in _DTYPES:
        raise ValueError(f"unsupported dtype for .tsr: {dtype_name}")
    header = json.dumps({"dtype": dtype_name, "shape": list(array.shape)}, sort_keys=True)
    payload = np.ascontiguousarray(array, dtype=_DTYPES[dtype_name]).tobytes()
    return header.encode("utf-8") + b"\n" + payload


def decode_tsr(blob: bytes) -> np.ndarray:
    """Decode bytes produced by :func:`encode_tsr`.

    Raises:
        ValueError: On a malformed header or a payload of the wrong length.
    """
    newline = blob.find(b"\n")
    if newline < 0:
        raise ValueError(".tsr blob has no header line")
    try:
        header: dict[str, Any] = json.loads(blob[:newline].decode("utf-8"))
        dtype_name = str(header["dtype"])
        shape = tuple(int(extent) for extent in header["shape"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed .tsr header: {exc}") from exc
    if dtype_name not in _DTYPES:
        raise ValueError(f"unsupported dtype in .tsr header: {dtype_name}")
    dtype = np.dtype(_DTYPES[dtype_name])
    payload = blob[newline + 1 :]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(payload) != expected:
        raise ValueError(f".tsr payload has {len(payload)} bytes, header implies {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).astype(dtype_name)


def save_tsr(path: str | Path, value: Tensor | np.ndarray) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    array = value.data if isinstance(value, Tensor) else np.asarray(value)
    target.write_bytes(encode_tsr(array))
    return target


def load_tsr(path: str | Path) -> np.ndarray:
    return decode_tsr(Path(path).read_bytes())
