"""Per-session video fitting with subnetwork masks.

Each video session trains its own subnetwork (and head) to regress frames
from positional codes, one frame per step, Adam under linear warmup followed
by cosine annealing. Masks freeze at session end, so replaying any earlier
session's frames is deterministic forever after.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from ..diffcore.optim import make_optimizer
from ..errors import SequencingError
from ..subnet.masks import select_topc_mask
from ..subnet.training import current_masks, frozen_masks, trunk_params, wsn_update
from .decoder import decode_frame
from .metrics import psnr, vil_loss

if TYPE_CHECKING:
    from ..diffcore.graph import ModelGraph


def warmup_cosine_lr(base_lr: float, epoch: int, total_epochs: int, warmup_epochs: int) -> float:
    """Linear ramp to base_lr over the warmup, then cosine decay to zero."""
    if warmup_epochs > 0 and epoch < warmup_epochs:
        return base_lr * (epoch + 1) / warmup_epochs
    span = max(total_epochs - warmup_epochs, 1)
    progress = (epoch - warmup_epochs) / span
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


class NirLearner:
    def __init__(self, model: "ModelGraph", capacity: float, lr: float = 5e-4,
                 optimizer: str = "adam", seed: int = 0, masking: bool = True,
                 alpha: float = 0.7):
        self.model = model
        self.capacity = capacity
        self.lr = lr
        self.optimizer = optimizer
        self.seed = seed
        self.masking = masking
        self.alpha = alpha
        self.trained: list[int] = []
        self.epoch_losses: list[tuple[int, int, float]] = []

    def train_session(self, video, epochs: int, warmup_epochs: int = 0) -> None:
        sid = video.session_id
        if self.trained and sid <= self.trained[-1]:
            raise SequencingError(f"session {sid} after {self.trained[-1]}")
        theta_opt = make_optimizer(self.optimizer, self.lr)
        rho_opt = make_optimizer(self.optimizer, self.lr)
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, sid]))
        n = video.frames.shape[0]
        for epoch in range(epochs):
            lr_now = warmup_cosine_lr(self.lr, epoch, epochs, warmup_epochs)
            theta_opt.lr = lr_now
            rho_opt.lr = lr_now
            losses = []
            for t in rng.permutation(n):
                masks = current_masks(self.model, self.capacity) if self.masking else None
                pred, handles = decode_frame(self.model, video.embeddings[t], head=sid, masks=masks)
                loss = vil_loss(video.frames[t], pred, alpha=self.alpha)
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

    def session_psnr(self, video, mask_sid: int | None = None, head_sid: int | None = None) -> float:
        """Mean reconstruction PSNR over a session's frames under a frozen mask."""
        if head_sid is None:
            head_sid = video.session_id
        masks = None
        if self.masking:
            masks = frozen_masks(self.model, mask_sid if mask_sid is not None else video.session_id)
        vals = []
        for t in range(video.frames.shape[0]):
            pred, _ = decode_frame(self.model, video.embeddings[t], head=head_sid, masks=masks)
            vals.append(psnr(video.frames[t], pred.data))
        return float(np.mean(vals))
