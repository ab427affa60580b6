"""Small input-validation helpers used by the public API."""

import math
import numbers

import numpy as np

from .errors import InvalidInputError


def check_finite_scalar(value, name):
    """Return ``value`` as a float, rejecting non-numbers and non-finite values."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InvalidInputError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value!r}")
    return value


def check_positive_scalar(value, name):
    value = check_finite_scalar(value, name)
    if value <= 0.0:
        raise InvalidInputError(f"{name} must be > 0, got {value!r}")
    return value


def check_in_range(value, name, low, high, low_open=False, high_open=False):
    """Validate low <(=) value <(=) high and return it as a float."""
    value = check_finite_scalar(value, name)
    if (value < low or (low_open and value == low)
            or value > high or (high_open and value == high)):
        lo = "(" if low_open else "["
        hi = ")" if high_open else "]"
        raise InvalidInputError(f"{name} must lie in {lo}{low}, {high}{hi}, got {value!r}")
    return value


def check_index(value, name, size=None):
    """Validate a non-negative integer index, optionally bounded by ``size``."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidInputError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0 or (size is not None and value >= size):
        raise InvalidInputError(f"{name} out of range: {value!r}")
    return value


def as_finite_vector(values, name, length=None):
    """Return a 1-D float64 copy of ``values``, all entries finite."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise InvalidInputError(
            f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must contain only finite values")
    return arr.copy()


def check_choice(value, name, choices):
    if value not in choices:
        raise InvalidInputError(
            f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value
