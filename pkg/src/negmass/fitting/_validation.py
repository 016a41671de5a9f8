"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np


def check_frequencies(X) -> np.ndarray:
    """Frequencies in Hz as a finite 1-D float array.

    Accepts shape ``(n,)`` or ``(n, 1)`` like a single-feature design matrix.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    if X.ndim != 1:
        raise ValueError(f"expected frequencies of shape (n,) or (n, 1), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("frequencies contain NaN or Inf")
    return X


def check_targets(y, n, complex_valued) -> np.ndarray:
    y = np.asarray(y, dtype=complex if complex_valued else float).ravel()
    if y.size != n:
        raise ValueError(f"got {y.size} targets for {n} frequencies")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets contain NaN or Inf")
    return y


def sort_by_frequency(X, y):
    """Sort both arrays by frequency; duplicate frequencies are rejected."""
    order = np.argsort(X, kind="stable")
    Xs, ys = X[order], y[order]
    if Xs.size > 1 and np.any(np.diff(Xs) == 0):
        raise ValueError("duplicate frequencies")
    return Xs, ys


def check_is_fitted(est, attr="result_"):
    if not hasattr(est, attr):
        raise AttributeError(f"{type(est).__name__} is not fitted yet; call fit() first")
