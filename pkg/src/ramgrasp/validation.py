"""Small input-validation helpers used at public API boundaries."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def require_positive(name: str, value: float) -> float:
    value = require_finite(name, value)
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return value


def require_positive_int(name: str, value: int) -> int:
    if int(value) != value or int(value) < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
    return int(value)


def as_box_array(X, name: str = "X") -> np.ndarray:
    """Coerce to a float64 (n, 5) array of (x, y, w, h, theta) rows.

    Validates finiteness and positive w/h; used by the estimator API so
    plain lists, tuples, and ndarrays all work.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1 and arr.shape == (5,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 5:
        raise ValueError(f"{name} must have shape (n, 5), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(arr[:, 2] <= 0) or np.any(arr[:, 3] <= 0):
        raise ValueError(f"{name} contains non-positive box dimensions")
    return arr


def as_feature_matrix(X, n_features: int, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != n_features:
        raise ValueError(
            f"{name} must have shape (n, {n_features}), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def require_pair(name: str, value: Sequence[float]) -> tuple[float, float]:
    try:
        a, b = value
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a (a, b) pair, got {value!r}") from None
    return float(a), float(b)
