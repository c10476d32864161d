"""Soft masks: a binary major set plus uniform-valued minor entries.

The major set is the top-c% of scores and multiplies weights by exactly 1.
Every other entry gets a value drawn once from U(0,1) under a recorded seed,
so the full mask can always be rebuilt bit-exactly from (scores, c, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..subnet.masks import BinaryMask, select_topc_mask
from ..subnet.scored import ScoredParameter


def draw_minor_values(shape: tuple[int, ...], noise_seed: int) -> np.ndarray:
    """One-time U(0,1) draw for the minor entries; strictly inside (0,1)."""
    u = np.random.default_rng(noise_seed).random(shape)
    u[u == 0.0] = np.nextafter(0.0, 1.0)
    return u


@dataclass
class SoftMask:
    param_name: str
    major: BinaryMask
    minor_values: np.ndarray
    noise_seed: int

    def values(self) -> np.ndarray:
        """Full multiplier: 1 on the major set, u on the minor set."""
        return np.where(self.major.bits == 1, 1.0, self.minor_values)

    def minor_only(self) -> np.ndarray:
        """Multiplier that moves only minor entries: 0 on major, u elsewhere."""
        return np.where(self.major.bits == 1, 0.0, self.minor_values)

    def with_major(self, major: BinaryMask) -> "SoftMask":
        """Same noise, new major partition (used while scores still train)."""
        return SoftMask(self.param_name, major, self.minor_values, self.noise_seed)


def build_soft_mask(param: ScoredParameter, c: float, noise_seed: int) -> SoftMask:
    """Top-c% major set from the current scores plus seeded minor noise.

    c = 1.0 is rejected: a soft mask with an empty minor set cannot adapt to
    later sessions, which defeats its purpose.
    """
    if not 0.0 < c < 1.0:
        raise ParameterError(f"soft mask capacity must be in (0, 1), got {c}")
    major = select_topc_mask(param.rho, c)
    return SoftMask(param.name, major, draw_minor_values(param.shape, noise_seed), noise_seed)
