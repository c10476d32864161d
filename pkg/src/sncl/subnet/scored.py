"""Weight tensors paired with selection scores and their per-session masks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SequencingError, ShapeError
from .masks import BinaryMask, accumulate


@dataclass
class ScoredParameter:
    """A weight tensor θ, its score tensor ρ, and the masks carved from it.

    θ and ρ always share a shape. `session_masks` maps a session id to the
    mask frozen at the end of that session; `accumulated` is their running OR.
    `fan_in` drives the init scale.
    """

    name: str
    shape: tuple[int, ...]
    fan_in: int
    theta: np.ndarray = field(init=False)
    rho: np.ndarray = field(init=False)
    session_masks: dict[int, BinaryMask] = field(default_factory=dict)
    accumulated: BinaryMask | None = None

    def __post_init__(self):
        self.shape = tuple(self.shape)
        self.theta = np.zeros(self.shape, dtype=np.float64)
        self.rho = np.zeros(self.shape, dtype=np.float64)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1

    def freeze_session(self, session_id: int, mask: BinaryMask) -> None:
        """Record the final mask of a session and fold it into the accumulator."""
        if mask.shape != self.shape:
            raise ShapeError(f"{self.name}: mask shape {mask.shape} != {self.shape}")
        if session_id in self.session_masks:
            raise SequencingError(f"{self.name}: session {session_id} already frozen")
        self.session_masks[session_id] = mask
        self.accumulated = accumulate(self.accumulated, mask)

    def prior_gate(self) -> np.ndarray:
        """(1 - accumulated) as float64: 1 where θ may still move."""
        if self.accumulated is None:
            return np.ones(self.shape, dtype=np.float64)
        return 1.0 - self.accumulated.astype_f64()
