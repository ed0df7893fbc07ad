"""Input validation helpers for the estimator layer.

Small check_array/check_X_y equivalents so the estimators compose with
sklearn-style pipelines without importing scikit-learn.
"""

from __future__ import annotations

import numpy as np

__all__ = ["check_array", "check_X_y", "NotFittedError", "check_is_fitted"]


class NotFittedError(RuntimeError):
    """Estimator used before fit."""


def check_array(X, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinity")
    return np.ascontiguousarray(arr)


def check_X_y(X, y) -> tuple[np.ndarray, np.ndarray, bool]:
    """Validate a samples-as-rows (X, y) pair; returns (X, Y, y_was_1d)."""
    X = check_array(X, "X")
    y = np.asarray(y, dtype=np.float64)
    y_1d = y.ndim == 1
    Y = check_array(y, "y")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X and y disagree on sample count: {X.shape[0]} vs {Y.shape[0]}")
    return X, Y, y_1d


def check_is_fitted(estimator, attr: str = "weights_") -> None:
    if not hasattr(estimator, attr):
        raise NotFittedError(f"{type(estimator).__name__} is not fitted yet; call fit first")
