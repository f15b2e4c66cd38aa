"""Input validation helpers shared across the estimators and numeric ops."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


class InputShapeError(ValueError):
    """Raised when an array argument has the wrong shape or dimension."""


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InputShapeError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0:
        raise InputShapeError(f"{name} must have at least one row")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def as_label_vector(y, n: int | None = None, name: str = "y",
                    allow_unknown: bool = False) -> np.ndarray:
    """Coerce to a 1-D int64 label vector; -1 marks unknown when allowed."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise InputShapeError(f"{name} must be 1-D, got shape {y.shape}")
    if y.dtype.kind == "f":
        if not np.all(y == np.floor(y)):
            raise ValueError(f"{name} must hold integer class indices")
        y = y.astype(np.int64)
    elif y.dtype.kind in "iu":
        y = y.astype(np.int64)
    else:
        raise ValueError(f"{name} must be an integer vector")
    floor = -1 if allow_unknown else 0
    if y.size and y.min() < floor:
        raise ValueError(f"{name} has entries below {floor}")
    if n is not None and y.shape[0] != n:
        raise InputShapeError(f"{name} has length {y.shape[0]}, expected {n}")
    return y


def as_weight_vector(w, n: int, name: str = "weights",
                     unit_interval: bool = False) -> np.ndarray:
    """Coerce to a nonnegative 1-D float64 weight vector of length ``n``."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != n:
        raise InputShapeError(f"{name} must be a length-{n} vector, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(w < 0):
        raise ValueError(f"{name} contains negative entries")
    if unit_interval and np.any(w > 1):
        raise ValueError(f"{name} has entries above 1")
    return w


def check_in_unit_interval(x: float, name: str, open_ends: bool = False) -> float:
    x = float(x)
    if open_ends and not (0.0 < x < 1.0):
        raise ValueError(f"{name} must lie strictly in (0, 1), got {x}")
    if not open_ends and not (0.0 <= x <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x


def require_fitted(obj, attribute: str) -> None:
    if getattr(obj, attribute, None) is None:
        raise NotFittedError(
            f"{type(obj).__name__} is not fitted yet; call fit() before using it.")
