"""Stateless numeric primitives used by the layers and the training loops."""

from __future__ import annotations

import numpy as np

from ..errors import DataError, NumericError

__all__ = ["softmax", "cross_entropy", "sigmoid", "relu", "PROB_FLOOR"]

PROB_FLOOR = 1e-12


def softmax(v: np.ndarray) -> np.ndarray:
    """Probability vector over `v`, computed with max-subtraction."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise DataError("softmax of an empty vector")
    if not np.all(np.isfinite(v)):
        raise NumericError("softmax input must be finite")
    shifted = v - np.max(v)
    e = np.exp(shifted)
    return e / np.sum(e)


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """Negative log-likelihood of `label` under `probs`, clamped at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.size:
        raise DataError(f"label {label} out of range for {probs.size} classes")
    p = min(max(float(probs[label]), PROB_FLOOR), 1.0)
    return -np.log(p)


def sigmoid(x) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    pos = x >= 0
    out = np.empty_like(x)
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)
