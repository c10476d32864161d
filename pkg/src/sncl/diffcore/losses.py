"""Classification losses and metrics on tape nodes."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .tensor import Tensor, const


def log_softmax(logits: Tensor) -> Tensor:
    shift = const(logits.data.max(axis=1, keepdims=True))  # detached max for stability
    z = logits - shift
    return z - z.exp().sum(axis=1, keepdims=True).log()


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood; labels are int indices into axis 1."""
    labels = np.asarray(labels)
    n, k = logits.data.shape
    if labels.shape != (n,):
        raise DataError(f"labels shape {labels.shape} does not match batch {n}")
    if labels.min() < 0 or labels.max() >= k:
        raise DataError(f"labels out of range for {k} classes")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    return -(log_softmax(logits) * const(onehot)).sum() * (1.0 / n)


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    return float((logits.argmax(axis=1) == np.asarray(labels)).mean())
