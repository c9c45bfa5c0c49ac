"""Array-valued pydantic field types."""

from typing import Annotated, Any

import numpy as np
from pydantic import BeforeValidator, PlainSerializer


def _to_float_array(value: Any) -> np.ndarray:
    array = np.asarray(value)
    if array.dtype not in (np.float32, np.float64):
        array = array.astype(np.float64)
    return array


def _to_int_array(value: Any) -> np.ndarray:
    array = np.asarray(value)
    if array.size and not np.issubdtype(array.dtype, np.integer):
        raise ValueError(f"expected integer values, got dtype {array.dtype}")
    return array.astype(np.int64)


def _to_list(array: np.ndarray) -> list[Any]:
    return list(array.tolist())


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_to_float_array),
    PlainSerializer(_to_list, when_used="json"),
]

IntArray = Annotated[
    np.ndarray,
    BeforeValidator(_to_int_array),
    PlainSerializer(_to_list, when_used="json"),
]
