"""Input checks shared by the estimators and the functional API."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_features(X, name="X"):
    """2-D finite float64 array with at least one row and one column."""
    X = check_array(
        X,
        dtype=np.float64,
        ensure_all_finite=True,
        ensure_2d=True,
        ensure_min_samples=1,
        ensure_min_features=1,
        input_name=name,
    )
    return X


def check_labels(y, n_samples):
    y = np.asarray(y)
    if y.ndim != 1:
        y = y.ravel()
    if y.shape[0] != n_samples:
        raise ValueError(f"got {y.shape[0]} labels for {n_samples} samples")
    return y


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
