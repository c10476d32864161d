"""Sinusoidal positional codes over (session, frame) index pairs."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError

BASE = 1.25
PAIRS_PER_INDEX = 40  # 40 sin/cos pairs -> 80 values per index, 160 total
EMBED_DIM = 4 * PAIRS_PER_INDEX


def _encode_scalar(v: float) -> np.ndarray:
    phases = (BASE ** np.arange(PAIRS_PER_INDEX)) * np.pi * v
    out = np.empty(2 * PAIRS_PER_INDEX)
    out[0::2] = np.sin(phases)
    out[1::2] = np.cos(phases)
    return out


def positional_encode(s: float, t: float) -> np.ndarray:
    """Embed normalized session and frame positions into R^160.

    Both inputs must already be in [0, 1]; use session_time_embedding to get
    there from raw indices.
    """
    for name, v in (("s", s), ("t", t)):
        if not 0.0 <= v <= 1.0:
            raise ParameterError(f"{name}={v} outside [0, 1]")
    return np.concatenate([_encode_scalar(s), _encode_scalar(t)])


def session_time_embedding(session_id: int, frame: int, sessions: int, frames: int) -> np.ndarray:
    """Normalize 1-based session id and 0-based frame index by their max."""
    if not 1 <= session_id <= sessions:
        raise ParameterError(f"session {session_id} outside 1..{sessions}")
    if not 0 <= frame < frames:
        raise ParameterError(f"frame {frame} outside 0..{frames - 1}")
    t = frame / (frames - 1) if frames > 1 else 0.0
    return positional_encode(session_id / sessions, t)
