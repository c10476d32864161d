"""Binary masks over weight tensors and top-c% selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, ShapeError


@dataclass
class BinaryMask:
    """0/1 occupancy over a weight tensor, stored as uint8 with the tensor's shape."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if not np.isin(bits, (0, 1)).all():
            raise ParameterError("mask entries must be 0 or 1")
        self.bits = bits.astype(np.uint8)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.bits.shape

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def astype_f64(self) -> np.ndarray:
        return self.bits.astype(np.float64)

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMask) and np.array_equal(self.bits, other.bits)


def topc_count(c: float, n: int) -> int:
    """Number of kept entries for capacity c over n weights: round(c*n), half up."""
    return int(np.floor(c * n + 0.5))


def select_topc_mask(scores: np.ndarray, c: float) -> BinaryMask:
    """Keep the top-c% of `scores`. Ties break toward the lowest flat index.

    Exactly round(c*n) entries are set. Selection is deterministic for any
    score tensor, including constant ones.
    """
    if not 0.0 < c <= 1.0:
        raise ParameterError(f"capacity must be in (0, 1], got {c}")
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    k = topc_count(c, n)
    if k == 0:
        return BinaryMask(np.zeros(scores.shape, dtype=np.uint8))
    if k == n:
        return BinaryMask(np.ones(scores.shape, dtype=np.uint8))
    flat = scores.reshape(-1)
    # O(n) selection: everything above the k-th largest value is in; among
    # entries equal to it, the lowest flat indices fill the remaining slots.
    # Matches a stable descending argsort bit for bit.
    kth = np.partition(flat, n - k)[n - k]
    bits = (flat > kth).astype(np.uint8)
    short = k - int(bits.sum())
    if short:
        bits[np.flatnonzero(flat == kth)[:short]] = 1
    return BinaryMask(bits.reshape(scores.shape))


def accumulate(prev: BinaryMask | None, new: BinaryMask) -> BinaryMask:
    """Elementwise OR of session masks; prev=None means no prior sessions."""
    if prev is None:
        return BinaryMask(new.bits.copy())
    if prev.shape != new.shape:
        raise ShapeError(f"mask shapes differ: {prev.shape} vs {new.shape}")
    return BinaryMask(prev.bits | new.bits)
