"""Class prototypes and nearest-class-mean inference."""

from __future__ import annotations

import numpy as np

from ..errors import DataError, ShapeError


class PrototypeStore:
    """Mean embedding per class id, kept in ascending id order."""

    def __init__(self, dim: int):
        self.dim = dim
        self._protos: dict[int, np.ndarray] = {}

    def set(self, class_id: int, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise ShapeError(f"prototype for class {class_id}: shape {vector.shape} != ({self.dim},)")
        self._protos[int(class_id)] = vector.copy()

    def get(self, class_id: int) -> np.ndarray:
        return self._protos[int(class_id)]

    def __contains__(self, class_id: int) -> bool:
        return int(class_id) in self._protos

    def __len__(self) -> int:
        return len(self._protos)

    @property
    def class_ids(self) -> list[int]:
        return sorted(self._protos)

    def matrix(self) -> tuple[np.ndarray, list[int]]:
        ids = self.class_ids
        if not ids:
            raise DataError("prototype store is empty")
        return np.stack([self._protos[i] for i in ids]), ids


def update_prototypes(store: PrototypeStore, embeddings: np.ndarray, labels: np.ndarray) -> None:
    """Set each present class's prototype to its mean embedding."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if embeddings.ndim != 2 or embeddings.shape[0] != labels.shape[0]:
        raise ShapeError(f"embeddings {embeddings.shape} vs labels {labels.shape}")
    for cid in np.unique(labels):
        store.set(int(cid), embeddings[labels == cid].mean(axis=0))


def ncm_infer(store: PrototypeStore, embeddings: np.ndarray) -> np.ndarray:
    """Nearest prototype by Euclidean distance; ties go to the lowest class id."""
    protos, ids = store.matrix()
    embeddings = np.asarray(embeddings, dtype=np.float64)
    d2 = ((embeddings[:, None, :] - protos[None, :, :]) ** 2).sum(axis=-1)
    # argmin returns the first minimum and ids are ascending, so ties resolve low
    return np.asarray(ids, dtype=np.int64)[d2.argmin(axis=1)]
