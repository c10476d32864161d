"""Session-incremental training with winning subnetworks.

Each session selects the top-c% of each trunk tensor by score, trains weights
only where no earlier session claimed them, and freezes its mask at the end.
Heads are per-session and train dense; a head is only ever on the tape during
its own session, so evaluation of past sessions is reproducible bit for bit.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ..diffcore.losses import accuracy, cross_entropy
from ..diffcore.optim import make_optimizer
from ..errors import SequencingError

if TYPE_CHECKING:  # circular at runtime: diffcore.graph depends on subnet.scored
    from ..diffcore.graph import ModelGraph
from .masks import select_topc_mask
from .scored import ScoredParameter
from .steps import gated_weight_step, ste_score_step


def trunk_params(model: ModelGraph) -> list[ScoredParameter]:
    out = []
    for layer in model.layers:
        out.extend(layer.scored_params())
    return out


def current_masks(model: ModelGraph, capacity: float) -> dict[str, np.ndarray]:
    """Top-c% mask per trunk tensor from the live scores."""
    return {p.name: select_topc_mask(p.rho, capacity).astype_f64() for p in trunk_params(model)}


def frozen_masks(model: ModelGraph, session_id: int) -> dict[str, np.ndarray]:
    masks = {}
    for p in trunk_params(model):
        if session_id not in p.session_masks:
            raise SequencingError(f"{p.name}: session {session_id} has no frozen mask")
        masks[p.name] = p.session_masks[session_id].astype_f64()
    return masks


def wsn_update(model: ModelGraph, handles, theta_opt, rho_opt, train_heads: bool = True) -> None:
    """Apply the gated weight step and the straight-through score step."""
    trunk = {p.name: p for p in trunk_params(model)}
    for name, (raw, eff) in handles.items():
        p = trunk.get(name)
        if p is None:  # head parameter: plain dense update
            if train_heads and raw.grad is not None:
                theta_opt.step(name, _head_param(model, name).theta, raw.grad)
            continue
        if raw.grad is None or eff.grad is None:
            continue
        gated_weight_step(theta_opt, p, raw.grad)
        ste_score_step(rho_opt, p, eff.grad)


def _head_param(model: ModelGraph, name: str) -> ScoredParameter:
    for sid in model.heads:
        for p in model.heads[sid].scored_params():
            if p.name == name:
                return p
    raise KeyError(name)


class WsnLearner:
    """Drives train/eval over a sequence of classification sessions.

    masking=False turns the method into the plain finetuning baseline:
    dense forward, ungated updates, nothing frozen.
    """

    def __init__(self, model: ModelGraph, capacity: float, lr: float = 1e-3,
                 optimizer: str = "adam", seed: int = 0, masking: bool = True):
        self.model = model
        self.capacity = capacity
        self.lr = lr
        self.optimizer = optimizer
        self.seed = seed
        self.masking = masking
        self.trained: list[int] = []
        self.epoch_losses: list[tuple[int, int, float]] = []  # (session, epoch, mean loss)

    def train_session(self, ds, epochs: int, batch_size: int) -> None:
        sid = ds.session_id
        if self.trained and sid <= self.trained[-1]:
            raise SequencingError(f"session {sid} after {self.trained[-1]}")
        theta_opt = make_optimizer(self.optimizer, self.lr)
        rho_opt = make_optimizer(self.optimizer, self.lr)
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, sid]))
        n = ds.train_x.shape[0]
        labels = ds.local_train_y  # heads are session-local, so labels must be too
        for epoch in range(epochs):
            order = rng.permutation(n)
            losses = []
            for lo in range(0, n, batch_size):
                idx = order[lo : lo + batch_size]
                masks = current_masks(self.model, self.capacity) if self.masking else None
                logits, handles = self.model.forward(ds.train_x[idx], head=sid, masks=masks)
                loss = cross_entropy(logits, labels[idx])
                loss.backward()
                if self.masking:
                    wsn_update(self.model, handles, theta_opt, rho_opt)
                else:
                    for name, (raw, _) in handles.items():
                        theta_opt.step(name, self.model.param(name).theta, raw.grad)
                losses.append(loss.item())
            self.epoch_losses.append((sid, epoch, float(np.mean(losses))))
        if self.masking:
            for p in trunk_params(self.model):
                p.freeze_session(sid, select_topc_mask(p.rho, self.capacity))
        self.trained.append(sid)

    def evaluate(self, ds, mask_sid: int | None = None, head_sid: int | None = None) -> float:
        """Accuracy on the session's eval split under a frozen mask."""
        if head_sid is None:
            head_sid = ds.session_id
        masks = None
        if self.masking:
            masks = frozen_masks(self.model, mask_sid if mask_sid is not None else ds.session_id)
        logits, _ = self.model.forward(ds.eval_x, head=head_sid, masks=masks)
        return accuracy(logits.data, ds.local_eval_y)


def reuse_statistics(params: list[ScoredParameter]) -> dict[int, dict[str, float]]:
    """Per-session reuse fraction and cumulative occupancy, pooled over tensors.

    reuse(s): fraction of session-s mask bits already claimed by sessions < s.
    occupancy(s): fraction of all weights claimed by sessions <= s.
    """
    sids = sorted({s for p in params for s in p.session_masks})
    total = sum(p.size for p in params)
    stats: dict[int, dict[str, float]] = {}
    prev = {p.name: np.zeros(p.shape, dtype=np.uint8) for p in params}
    claimed = 0
    for s in sids:
        inter = 0
        cur = 0
        for p in params:
            if s not in p.session_masks:
                continue
            bits = p.session_masks[s].bits
            inter += int((bits & prev[p.name]).sum())
            cur += int(bits.sum())
            newly = bits & ~prev[p.name]
            claimed += int(newly.sum())
            prev[p.name] |= bits
        stats[s] = {
            "reuse_fraction": inter / cur if cur else 0.0,
            "occupancy": claimed / total,
        }
    return stats
