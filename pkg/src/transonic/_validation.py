"""Small input-validation helpers shared by the numerical modules."""

import numbers

import numpy as np

from .exceptions import DomainError


def as_float_array(x):
    """Return ``x`` as a float ndarray plus a flag telling whether it was scalar."""
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def restore_shape(values, scalar):
    if scalar:
        return float(values)
    return values


def check_finite(arr, name):
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")


def check_interval(arr, name, lo=-np.inf, hi=np.inf, lo_open=False, hi_open=False):
    """Raise :class:`DomainError` unless every entry of ``arr`` lies in the interval."""
    arr = np.asarray(arr, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} contains NaN")
    below = arr <= lo if lo_open else arr < lo
    above = arr >= hi if hi_open else arr > hi
    if np.any(below) or np.any(above):
        left = "(" if lo_open else "["
        right = ")" if hi_open else "]"
        bad = arr[below | above].ravel()[0]
        raise DomainError(f"{name}={bad!r} outside {left}{lo}, {hi}{right}")


def check_scalar(value, name, lo=-np.inf, hi=np.inf, lo_open=False, hi_open=False):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    check_interval(np.asarray(float(value)), name, lo, hi, lo_open, hi_open)
    return float(value)
