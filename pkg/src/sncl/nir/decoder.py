"""Video decoder: positional code in, frame out.

A dense stem expands the 160-dim code to a 16x4x4 feature map; three
conv+sub-pixel blocks upsample it to 32x32; a per-session 1x1 head plus
sigmoid emits RGB. A spectral stage can be spliced in after the second or
third block ("fnerv2"/"fnerv3" placements), operating on the 16x16 or 32x32
feature map respectively.
"""

from __future__ import annotations

import numpy as np

from ..diffcore.graph import ModelGraph
from ..diffcore.layers import Activation, Conv2d, Dense, PixelShuffle, Reshape
from ..diffcore.tensor import Tensor
from ..errors import ParameterError
from ..fso.block import FsoStage2d
from .encoding import EMBED_DIM

STEM_WIDTH = 256
FEATURE_CHANNELS = 16
STEM_GRID = 4
BLOCKS = 3  # each doubles the grid: 4 -> 8 -> 16 -> 32

PLACEMENTS = ("none", "fnerv2", "fnerv3")


def frame_size() -> int:
    return STEM_GRID * 2**BLOCKS


def build_decoder(sessions: int, fso_placement: str = "none",
                  fso_modes: tuple[int, int] | None = None) -> ModelGraph:
    if fso_placement not in PLACEMENTS:
        raise ParameterError(f"fso placement must be one of {PLACEMENTS}, got {fso_placement!r}")
    layers = [
        Dense("stem0", EMBED_DIM, STEM_WIDTH),
        Activation("stem0.act", "gelu"),
        Dense("stem1", STEM_WIDTH, STEM_WIDTH),
        Activation("stem1.act", "gelu"),
        Reshape("to_map", (FEATURE_CHANNELS, STEM_GRID, STEM_GRID)),
    ]
    grid = STEM_GRID
    for b in range(1, BLOCKS + 1):
        layers.append(Conv2d(f"block{b}.conv", FEATURE_CHANNELS, FEATURE_CHANNELS * 4, 3, padding=1))
        layers.append(PixelShuffle(f"block{b}.up", 2))
        layers.append(Activation(f"block{b}.act", "gelu"))
        grid *= 2
        if (fso_placement == "fnerv2" and b == 2) or (fso_placement == "fnerv3" and b == 3):
            layers.append(FsoStage2d(f"block{b}.fso", FEATURE_CHANNELS, grid, grid, fso_modes))
    heads = {
        sid: Conv2d(f"head{sid}", FEATURE_CHANNELS, 3, 1)
        for sid in range(1, sessions + 1)
    }
    return ModelGraph(layers, heads)


def decode_frame(model: ModelGraph, embedding: np.ndarray, head: int, masks=None) -> tuple[Tensor, dict]:
    """Run the decoder for one positional code; returns an (H,W,3) frame in [0,1]."""
    emb = np.asarray(embedding, dtype=np.float64).reshape(1, -1)
    out, handles = model.forward(emb, head=head, masks=masks)
    h, w = out.data.shape[2], out.data.shape[3]
    frame = out.sigmoid().reshape((3, h, w)).transpose((1, 2, 0))
    return frame, handles
