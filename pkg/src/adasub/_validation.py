"""Input checks shared by the estimator wrappers."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array, check_X_y

from .exceptions import DimensionMismatch, InvalidInput


def check_budget(budget, n_elements: int) -> int:
    if not isinstance(budget, numbers.Integral) or isinstance(budget, bool):
        raise InvalidInput(f"budget must be an integer, got {budget!r}")
    if not 0 <= budget <= n_elements:
        raise InvalidInput(f"budget {budget} outside [0, {n_elements}]")
    return int(budget)


def check_design(X, y) -> tuple:
    """Validate a (samples x features) design and its response."""
    X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True, ensure_min_samples=1)
    return X, y


def check_true_design(X_true, X) -> np.ndarray:
    if X_true is None:
        return X
    X_true = check_array(X_true, dtype=np.float64)
    if X_true.shape != X.shape:
        raise DimensionMismatch(f"X_true has shape {X_true.shape}, expected {X.shape}")
    return X_true


def check_noise(noise) -> float:
    noise = float(noise)
    if not np.isfinite(noise) or noise < 0:
        raise InvalidInput("noise half-width must be finite and non-negative")
    return noise
