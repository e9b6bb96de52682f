"""Conversions between 0/1 text strings and numpy bit arrays."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def bit_array(value) -> np.ndarray:
    """Coerce a bit sequence ("0110", [0,1,1,0], ndarray) to a uint8 array."""
    if isinstance(value, str):
        if value and set(value) - {"0", "1"}:
            raise InvalidInputError(f"not a 0/1 string: {value!r}")
        return np.frombuffer(value.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(value, dtype=np.uint8)
    if arr.ndim != 1:
        raise InvalidInputError("bit sequence must be one-dimensional")
    if arr.size and int(arr.max()) > 1:
        raise InvalidInputError("bit sequence contains values other than 0/1")
    return arr


def bit_string(bits: np.ndarray) -> str:
    """Render a bit array as 0/1 text."""
    return "".join("1" if b else "0" for b in np.asarray(bits).tolist())
