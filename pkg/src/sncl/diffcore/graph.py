"""Model container: a trunk of layers plus per-session heads."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from ..errors import UnknownHeadError
from ..subnet.scored import ScoredParameter
from .tensor import Tensor, as_tensor


class ModelGraph:
    """Layers applied in order, then exactly one of the registered heads.

    ``forward`` returns the output node plus handles to every parameter's
    (raw, effective) node pair so trainers can read both thegated weight
    gradient and the straight-through score gradient after backward().
    """

    def __init__(self, layers: list, heads: dict[int, object] | None = None):
        self.layers = list(layers)
        self.heads: dict[int, object] = dict(heads or {})

    def add_head(self, session_id: int, head) -> None:
        self.heads[session_id] = head

    def parameters(self) -> Iterable[ScoredParameter]:
        for layer in self.layers:
            yield from layer.scored_params()
        for sid in sorted(self.heads):
            yield from self.heads[sid].scored_params()

    def param(self, name: str) -> ScoredParameter:
        for p in self.parameters():
            if p.name == name:
                return p
        raise KeyError(name)

    def _effective(self, layer_seq, masks: Mapping[str, np.ndarray] | None):
        eff: dict[str, Tensor] = {}
        handles: dict[str, tuple[Tensor, Tensor]] = {}
        for layer in layer_seq:
            for p in layer.scored_params():
                raw = Tensor(p.theta, needs_grad=True)
                if masks is not None and p.name in masks:
                    node = raw * Tensor(masks[p.name], needs_grad=False)
                    node.needs_grad = True  # retain grad for score updates
                else:
                    node = raw
                eff[p.name] = node
                handles[p.name] = (raw, node)
        return eff, handles

    def forward(
        self,
        x,
        head: int,
        masks: Mapping[str, np.ndarray] | None = None,
    ) -> tuple[Tensor, dict[str, tuple[Tensor, Tensor]]]:
        """Run trunk then head `head`. masks maps parameter name -> multiplier."""
        if head not in self.heads:
            raise UnknownHeadError(f"no head registered for session {head}")
        seq = self.layers + [self.heads[head]]
        eff, handles = self._effective(seq, masks)
        out = as_tensor(x)
        for layer in seq:
            out = layer.apply(out, eff)
        return out, handles

    def forward_trunk(
        self,
        x,
        masks: Mapping[str, np.ndarray] | None = None,
    ) -> tuple[Tensor, dict[str, tuple[Tensor, Tensor]]]:
        """Run trunk only (embeddings for prototype methods)."""
        eff, handles = self._effective(self.layers, masks)
        out = as_tensor(x)
        for layer in self.layers:
            out = layer.apply(out, eff)
        return out, handles
