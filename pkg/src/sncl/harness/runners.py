"""Scenario orchestration: build models, train session streams, persist artifacts.

A run directory ends up holding:

  run_log.json     ledger (metric matrix, losses, extras, summary)
  metrics.csv      matrix cells + reuse series, fixed column order
  transfer.csv     full transfer matrix (mask-based methods only)
  config.json      canonical config payload and its sha256
  checkpoint.sncl  weights, session masks, prototypes
  timing.log       wall-clock sidecar; the only file allowed to vary between reruns
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from ..diffcore.graph import ModelGraph
from ..diffcore.init import seeded_init
from ..diffcore.layers import Activation, Dense
from ..errors import CheckpointError, ValidationError
from ..fso.block import FsoStage1d
from ..nir.decoder import build_decoder
from ..nir.training import NirLearner
from ..softnet.soft_mask import SoftMask, draw_minor_values
from ..softnet.training import SoftNetLearner
from ..subnet.masks import BinaryMask
from ..subnet.training import WsnLearner, reuse_statistics, trunk_params
from .checkpoint import Checkpoint
from .config import ExperimentConfig, config_hash, config_to_dict
from .datasets import synth_fscil, synth_til, synth_vil
from .ledger import RunLedger
from .reports import write_run_reports

_PROTO_PREFIX = "proto/"
CHECKPOINT_NAME = "checkpoint.sncl"


def _classifier_layers(cfg: ExperimentConfig) -> list:
    d, h = cfg.dataset.dim, cfg.hidden
    layers = [Dense("feat0", d, h), Activation("feat0.act", "relu")]
    if cfg.fso.placement == "hidden":
        m = cfg.fso.modes[0] if cfg.fso.modes else None
        layers.append(FsoStage1d("mix", h, modes=m, activation="relu"))
    else:
        layers.append(Dense("feat1", h, h))
        layers.append(Activation("feat1.act", "relu"))
    return layers


def build_til_model(cfg: ExperimentConfig) -> ModelGraph:
    heads = {sid: Dense(f"head{sid}", cfg.hidden, 2)
             for sid in range(1, cfg.dataset.sessions + 1)}
    return ModelGraph(_classifier_layers(cfg), heads)


def build_fscil_model(cfg: ExperimentConfig) -> ModelGraph:
    heads = {1: Dense("head1", cfg.hidden, cfg.dataset.base_classes)}
    return ModelGraph(_classifier_layers(cfg), heads)


def build_vil_model(cfg: ExperimentConfig) -> ModelGraph:
    return build_decoder(cfg.dataset.sessions, cfg.fso.placement, cfg.fso.modes)


def transfer_matrix(eval_fn, sessions: int) -> np.ndarray:
    """Full S x S grid; entry (j, i) scores session-i data under mask min(i, j).

    Lower triangle (i <= j) is each session under its own frozen subnetwork;
    upper triangle previews future sessions through the current mask.
    """
    a = np.empty((sessions, sessions))
    for j in range(1, sessions + 1):
        for i in range(1, sessions + 1):
            a[j - 1, i - 1] = eval_fn(min(i, j), i)
    return a


def _store_model(ck: Checkpoint, model: ModelGraph) -> None:
    for p in model.parameters():
        masks = {sid: bm.bits for sid, bm in p.session_masks.items()}
        ck.add(p.name, p.theta, masks)


def _load_model(ck: Checkpoint, model: ModelGraph) -> None:
    for p in model.parameters():
        rec = ck.record(p.name)
        if tuple(rec.shape) != p.shape:
            raise CheckpointError(f"{p.name}: checkpoint shape {rec.shape} does not "
                                  f"match model shape {p.shape}")
        p.theta[...] = rec.values().astype(np.float64)
        for sid, bits in sorted(rec.masks.items()):
            p.session_masks[sid] = BinaryMask(bits)


def _record_losses(ledger: RunLedger, epoch_losses) -> None:
    per_session: dict[int, list[float]] = {}
    for sid, _, loss in epoch_losses:
        per_session.setdefault(sid, []).append(loss)
    for sid, losses in per_session.items():
        ledger.record_losses(sid, losses)


def _run_til(cfg: ExperimentConfig):
    data = synth_til(cfg.dataset, cfg.seed)
    model = build_til_model(cfg)
    seeded_init(model, cfg.seed)
    learner = WsnLearner(model, cfg.capacity, cfg.lr, cfg.optimizer, cfg.seed,
                         masking=cfg.method == "wsn")
    sessions = cfg.dataset.sessions
    ledger = RunLedger("accuracy", sessions)
    timing = []
    for ds in data:
        t0 = time.perf_counter()
        learner.train_session(ds, cfg.epochs, cfg.batch_size)
        timing.append((f"train session {ds.session_id}", time.perf_counter() - t0))
        for i in range(1, ds.session_id + 1):
            ledger.record(ds.session_id, i, learner.evaluate(data[i - 1]))
    _record_losses(ledger, learner.epoch_losses)
    if learner.masking:
        stats = reuse_statistics(trunk_params(model))
        ledger.extras["reuse"] = {str(s): v for s, v in stats.items()}
        tm = transfer_matrix(
            lambda m, i: learner.evaluate(data[i - 1], mask_sid=m, head_sid=i), sessions)
        ledger.extras["transfer"] = tm.tolist()
    ck = Checkpoint(config_hash(cfg))
    _store_model(ck, model)
    return ledger, ck, timing


def _run_vil(cfg: ExperimentConfig):
    data = synth_vil(cfg.dataset, cfg.seed)
    model = build_vil_model(cfg)
    seeded_init(model, cfg.seed)
    learner = NirLearner(model, cfg.capacity, cfg.lr, cfg.optimizer, cfg.seed,
                         masking=cfg.method == "wsn", alpha=cfg.alpha)
    sessions = cfg.dataset.sessions
    ledger = RunLedger("psnr", sessions)
    timing = []
    for video in data:
        t0 = time.perf_counter()
        learner.train_session(video, cfg.epochs, cfg.warmup_epochs)
        timing.append((f"train session {video.session_id}", time.perf_counter() - t0))
        for i in range(1, video.session_id + 1):
            ledger.record(video.session_id, i, learner.session_psnr(data[i - 1]))
    _record_losses(ledger, learner.epoch_losses)
    if learner.masking:
        stats = reuse_statistics(trunk_params(model))
        ledger.extras["reuse"] = {str(s): v for s, v in stats.items()}
        tm = transfer_matrix(
            lambda m, i: learner.session_psnr(data[i - 1], mask_sid=m, head_sid=i), sessions)
        ledger.extras["transfer"] = tm.tolist()
    ck = Checkpoint(config_hash(cfg))
    _store_model(ck, model)
    return ledger, ck, timing


def _run_fscil(cfg: ExperimentConfig):
    data = synth_fscil(cfg.dataset, cfg.seed)
    model = build_fscil_model(cfg)
    seeded_init(model, cfg.seed)
    learner = SoftNetLearner(model, cfg.capacity, embed_dim=cfg.hidden, lr=cfg.lr,
                             optimizer=cfg.optimizer, seed=cfg.seed,
                             exemplars_per_class=cfg.incremental.exemplars_per_class)
    sessions = len(data)
    ledger = RunLedger("accuracy", sessions)
    timing = []
    t0 = time.perf_counter()
    learner.base_train(data[0], cfg.epochs, cfg.batch_size)
    timing.append(("train session 1", time.perf_counter() - t0))
    ledger.record(1, 1, learner.ncm_eval(data[0].eval_x, data[0].eval_y))
    for ds in data[1:]:
        t0 = time.perf_counter()
        learner.incremental_train(ds, cfg.incremental.epochs, cfg.incremental.lr)
        timing.append((f"train session {ds.session_id}", time.perf_counter() - t0))
        for i in range(1, ds.session_id + 1):
            ledger.record(ds.session_id, i,
                          learner.ncm_eval(data[i - 1].eval_x, data[i - 1].eval_y))
    _record_losses(ledger, learner.epoch_losses)
    all_x = np.concatenate([ds.eval_x for ds in data])
    all_y = np.concatenate([ds.eval_y for ds in data])
    ledger.extras["final_all_class_ncm"] = learner.ncm_eval(all_x, all_y)
    ledger.extras["base_head_accuracy"] = learner.head_accuracy(data[0])
    ck = Checkpoint(config_hash(cfg))
    _store_model(ck, model)
    for cid in learner.store.class_ids:
        ck.add(f"{_PROTO_PREFIX}{cid:04d}", learner.store.get(cid))
    return ledger, ck, timing


_RUNNERS = {"til": _run_til, "vil": _run_vil, "fscil": _run_fscil}


def run_scenario(cfg: ExperimentConfig, out_dir: str | Path | None = None):
    """Train the configured stream, write all artifacts, return (ledger, checkpoint)."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    ledger, ck, timing = _RUNNERS[cfg.scenario](cfg)
    ledger.write_json(out / "run_log.json")
    write_run_reports(out, cfg.scenario, ledger)
    payload = config_to_dict(cfg)
    payload.pop("out_dir")
    (out / "config.json").write_text(json.dumps(
        {"config": payload, "sha256": config_hash(cfg).hex()},
        indent=2, sort_keys=True) + "\n")
    ck.write(out / CHECKPOINT_NAME)
    lines = [f"{label}: {dt:.3f}s" for label, dt in timing]
    lines.append(f"total: {time.perf_counter() - started:.3f}s")
    (out / "timing.log").write_text("\n".join(lines) + "\n")
    return ledger, ck


def _check_digest(cfg: ExperimentConfig, ck: Checkpoint) -> None:
    if ck.config_digest != config_hash(cfg):
        raise ValidationError("checkpoint", "config hash mismatch: this checkpoint "
                                            "was written by a different experiment")


def _eval_til(cfg: ExperimentConfig, ck: Checkpoint) -> dict:
    data = synth_til(cfg.dataset, cfg.seed)
    model = build_til_model(cfg)
    _load_model(ck, model)
    learner = WsnLearner(model, cfg.capacity, seed=cfg.seed, masking=cfg.method == "wsn")
    row = {ds.session_id: learner.evaluate(ds) for ds in data}
    return {"metric": "accuracy", "final_row": row,
            "acc": float(np.mean(list(row.values())))}


def _eval_vil(cfg: ExperimentConfig, ck: Checkpoint) -> dict:
    data = synth_vil(cfg.dataset, cfg.seed)
    model = build_vil_model(cfg)
    _load_model(ck, model)
    learner = NirLearner(model, cfg.capacity, seed=cfg.seed,
                         masking=cfg.method == "wsn", alpha=cfg.alpha)
    row = {v.session_id: learner.session_psnr(v) for v in data}
    return {"metric": "psnr", "final_row": row,
            "acc": float(np.mean(list(row.values())))}


def _eval_fscil(cfg: ExperimentConfig, ck: Checkpoint) -> dict:
    data = synth_fscil(cfg.dataset, cfg.seed)
    model = build_fscil_model(cfg)
    _load_model(ck, model)
    learner = SoftNetLearner(model, cfg.capacity, embed_dim=cfg.hidden, seed=cfg.seed)
    for p in trunk_params(model):
        rec = ck.record(p.name)
        if 1 not in rec.masks:
            raise CheckpointError(f"{p.name}: no base-session mask stored")
        noise_seed = learner._noise_seeds[p.name]
        learner.soft[p.name] = SoftMask(p.name, BinaryMask(rec.masks[1]),
                                        draw_minor_values(p.shape, noise_seed), noise_seed)
    learner.session = len(data)
    for name, rec in ck.records.items():
        if name.startswith(_PROTO_PREFIX):
            learner.store.set(int(name[len(_PROTO_PREFIX):]), rec.values().astype(np.float64))
    if len(learner.store) == 0:
        raise CheckpointError("checkpoint stores no prototypes")
    row = {ds.session_id: learner.ncm_eval(ds.eval_x, ds.eval_y) for ds in data}
    all_x = np.concatenate([ds.eval_x for ds in data])
    all_y = np.concatenate([ds.eval_y for ds in data])
    return {"metric": "accuracy", "final_row": row,
            "acc": float(np.mean(list(row.values()))),
            "all_class_ncm": learner.ncm_eval(all_x, all_y)}


_EVALUATORS = {"til": _eval_til, "vil": _eval_vil, "fscil": _eval_fscil}


def eval_checkpoint(cfg: ExperimentConfig, ckpt_path: str | Path) -> dict:
    """Recompute final-row metrics for a stored run; rejects foreign checkpoints."""
    ck = Checkpoint.read(ckpt_path)
    _check_digest(cfg, ck)
    return _EVALUATORS[cfg.scenario](cfg, ck)
