"""Few-shot class-incremental training over a soft subnetwork.

Base session: joint cross-entropy through a classification head, weights
updated with a single soft-mask factor on the upstream gradient (so minor
updates scale linearly with their mask value), scores updated straight
through. The mask freezes when the base session ends.

Incremental sessions: the major set never moves again; only minor-set weights
adapt, driven by a prototype metric loss over the new shots plus one stored
exemplar per previously added class. Inference is nearest class mean.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ..diffcore.losses import accuracy, cross_entropy
from ..diffcore.optim import Sgd, make_optimizer
from ..errors import ParameterError, SequencingError
from ..subnet.masks import select_topc_mask
from ..subnet.steps import ste_score_step
from ..subnet.training import trunk_params
from .losses import metric_loss
from .prototypes import PrototypeStore, ncm_infer, update_prototypes
from .soft_mask import SoftMask, build_soft_mask

if TYPE_CHECKING:
    from ..diffcore.graph import ModelGraph


class SoftNetLearner:
    BASE_SESSION = 1

    def __init__(self, model: "ModelGraph", capacity: float, embed_dim: int,
                 lr: float = 1e-3, optimizer: str = "adam", seed: int = 0,
                 exemplars_per_class: int = 1):
        if not 0.0 < capacity < 1.0:
            raise ParameterError(f"capacity must be in (0, 1) for soft masks, got {capacity}")
        self.model = model
        self.capacity = capacity
        self.lr = lr
        self.optimizer = optimizer
        self.seed = seed
        self.exemplars_per_class = exemplars_per_class
        self.session = 0
        self.soft: dict[str, SoftMask] = {}
        self.store = PrototypeStore(embed_dim)
        self.exemplars: dict[int, np.ndarray] = {}  # class id -> (k, dim) raw inputs
        self.epoch_losses: list[tuple[int, int, float]] = []
        # one integer noise seed per trunk tensor, derived once from the run seed
        params = trunk_params(model)
        states = np.random.SeedSequence([seed, 0x50F7]).generate_state(len(params))
        self._noise_seeds = {p.name: int(s) for p, s in zip(params, states)}

    # -- masks ---------------------------------------------------------------

    def _live_mask_values(self) -> dict[str, np.ndarray]:
        """Soft multipliers from the current scores (base training only)."""
        out = {}
        for p in trunk_params(self.model):
            sm = self.soft.get(p.name)
            if sm is None:
                sm = build_soft_mask(p, self.capacity, self._noise_seeds[p.name])
                self.soft[p.name] = sm
            else:
                sm = sm.with_major(select_topc_mask(p.rho, self.capacity))
                self.soft[p.name] = sm
            out[p.name] = sm.values()
        return out

    def frozen_mask_values(self) -> dict[str, np.ndarray]:
        if self.session < self.BASE_SESSION:
            raise SequencingError("soft mask is only frozen after the base session")
        return {name: sm.values() for name, sm in self.soft.items()}

    # -- base session ----------------------------------------------------------

    def base_train(self, ds, epochs: int, batch_size: int) -> None:
        if self.session != 0:
            raise SequencingError("base session already trained")
        theta_opt = make_optimizer(self.optimizer, self.lr)
        rho_opt = make_optimizer(self.optimizer, self.lr)
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, self.BASE_SESSION]))
        n = ds.train_x.shape[0]
        labels = ds.local_train_y
        trunk = {p.name: p for p in trunk_params(self.model)}
        for epoch in range(epochs):
            order = rng.permutation(n)
            losses = []
            for lo in range(0, n, batch_size):
                idx = order[lo : lo + batch_size]
                masks = self._live_mask_values()
                logits, handles = self.model.forward(ds.train_x[idx], head=self.BASE_SESSION, masks=masks)
                loss = cross_entropy(logits, labels[idx])
                loss.backward()
                for name, (raw, eff) in handles.items():
                    p = trunk.get(name)
                    if p is None:
                        theta_opt.step(name, self.model.param(name).theta, raw.grad)
                        continue
                    # single soft factor on the upstream gradient: update size
                    # scales linearly with the minor value
                    theta_opt.step(name, p.theta, eff.grad, delta_gate=masks[name])
                    ste_score_step(rho_opt, p, eff.grad)
                losses.append(loss.item())
            self.epoch_losses.append((self.BASE_SESSION, epoch, float(np.mean(losses))))
        for p in trunk_params(self.model):
            final = select_topc_mask(p.rho, self.capacity)
            self.soft[p.name] = self.soft[p.name].with_major(final)
            p.freeze_session(self.BASE_SESSION, final)
        self.session = self.BASE_SESSION
        update_prototypes(self.store, self.embeddings(ds.train_x), ds.train_y)

    # -- incremental sessions --------------------------------------------------

    def incremental_train(self, ds, epochs: int = 6, lr: float = 0.02) -> None:
        if self.session < self.BASE_SESSION:
            raise SequencingError("incremental session before base training")
        if ds.session_id != self.session + 1:
            raise SequencingError(f"expected session {self.session + 1}, got {ds.session_id}")
        new_ids = sorted(int(c) for c in ds.classes)
        for cid in new_ids:
            if cid in self.store:
                raise SequencingError(f"class {cid} already has a prototype")
        xs = [ds.train_x]
        ys = [np.asarray(ds.train_y)]
        for cid in sorted(self.exemplars):
            xs.append(self.exemplars[cid])
            ys.append(np.full(len(self.exemplars[cid]), cid, dtype=np.int64))
        x_all = np.concatenate(xs)
        y_all = np.concatenate(ys)
        masks = self.frozen_mask_values()
        minor = {name: sm.minor_only() for name, sm in self.soft.items()}
        opt = Sgd(lr)
        trunk = {p.name: p for p in trunk_params(self.model)}
        proto_old, ids_old = self.store.matrix()
        for epoch in range(epochs):
            emb, handles = self.model.forward_trunk(x_all, masks=masks)
            anchors, anchor_ids = self._with_new_prototypes(proto_old, ids_old, emb.data, y_all, new_ids)
            loss = metric_loss(emb, y_all, anchors, anchor_ids)
            loss.backward()
            for name, (_, eff) in handles.items():
                # minor-only gate: the major set stays bit-frozen
                opt.step(name, trunk[name].theta, eff.grad, delta_gate=minor[name])
            self.epoch_losses.append((ds.session_id, epoch, loss.item()))
        final_emb = self.embeddings(x_all)
        for cid in new_ids:
            pick = y_all == cid
            self.store.set(cid, final_emb[pick].mean(axis=0))
        for cid in new_ids:
            shots = ds.train_x[np.asarray(ds.train_y) == cid]
            self.exemplars[cid] = shots[: self.exemplars_per_class].copy()
        self.session = ds.session_id

    @staticmethod
    def _with_new_prototypes(protos, ids, emb, labels, new_ids):
        rows = [protos]
        add_ids = []
        for cid in new_ids:
            rows.append(emb[labels == cid].mean(axis=0)[None])
            add_ids.append(cid)
        merged = np.concatenate(rows)
        merged_ids = list(ids) + add_ids
        order = np.argsort(merged_ids)
        return merged[order], [merged_ids[i] for i in order]

    # -- inference ---------------------------------------------------------------

    def embeddings(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.model.forward_trunk(x, masks=self.frozen_mask_values())
        return out.data

    def ncm_eval(self, x: np.ndarray, y: np.ndarray) -> float:
        pred = ncm_infer(self.store, self.embeddings(x))
        return float((pred == np.asarray(y)).mean())

    def head_accuracy(self, ds) -> float:
        logits, _ = self.model.forward(ds.eval_x, head=self.BASE_SESSION,
                                       masks=self.frozen_mask_values())
        return accuracy(logits.data, ds.local_eval_y)
