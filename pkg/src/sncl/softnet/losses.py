"""Prototype-anchored metric loss."""

from __future__ import annotations

import numpy as np

from ..diffcore.losses import cross_entropy
from ..diffcore.tensor import Tensor, const
from ..errors import DataError

_NORM_GUARD = 1e-24  # eps^2 inside the sqrt keeps zero vectors differentiable


def cosine_logits(embeddings: Tensor, prototypes: np.ndarray) -> Tensor:
    """Negative cosine distance of each embedding to each prototype row.

    logits[n, k] = cos(e_n, p_k) - 1, so a perfect match scores 0 and
    everything else is negative; prototypes are constants on the tape.
    """
    p = np.asarray(prototypes, dtype=np.float64)
    p_norm = np.sqrt((p * p).sum(axis=1) + _NORM_GUARD)
    p_hat = p / p_norm[:, None]
    e_norm = ((embeddings * embeddings).sum(axis=1, keepdims=True) + _NORM_GUARD).sqrt()
    cos = (embeddings @ const(p_hat.T)) / e_norm
    return cos - const(1.0)


def metric_loss(embeddings: Tensor, labels: np.ndarray, prototypes: np.ndarray,
                proto_ids: list[int]) -> Tensor:
    """Cross-entropy over negative cosine distances to all known prototypes.

    labels hold global class ids; each must have a row in `prototypes`
    (ordered per proto_ids).
    """
    labels = np.asarray(labels)
    index = {cid: k for k, cid in enumerate(proto_ids)}
    missing = [int(c) for c in np.unique(labels) if int(c) not in index]
    if missing:
        raise DataError(f"labels {missing} have no prototype")
    targets = np.array([index[int(c)] for c in labels], dtype=np.int64)
    return cross_entropy(cosine_logits(embeddings, prototypes), targets)
