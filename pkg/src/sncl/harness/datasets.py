"""Synthetic session streams for the three scenarios.

All generators are pure functions of (config, seed): identical inputs give
bit-identical arrays, which the reproducibility checks rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from ..nir.encoding import session_time_embedding
from .config import FscilData, TilData, VilData

# stream tags keep per-scenario rngs disjoint even under equal seeds
_TIL_TAG = 101
_VIL_TAG = 202
_FSCIL_TAG = 303


@dataclass
class SessionDataset:
    """One session's labelled split. Labels are global class ids."""

    session_id: int
    classes: list[int]
    train_x: np.ndarray
    train_y: np.ndarray
    eval_x: np.ndarray
    eval_y: np.ndarray

    def __post_init__(self):
        if sorted(self.classes) != list(self.classes):
            raise DataError(f"session {self.session_id}: classes must be sorted")
        for tag, y in (("train", self.train_y), ("eval", self.eval_y)):
            extra = set(np.unique(y).tolist()) - set(self.classes)
            if extra:
                raise DataError(f"session {self.session_id}: {tag} labels {extra} "
                                f"outside {self.classes}")

    def _local(self, y: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.classes), y)

    @property
    def local_train_y(self) -> np.ndarray:
        return self._local(self.train_y)

    @property
    def local_eval_y(self) -> np.ndarray:
        return self._local(self.eval_y)


@dataclass
class VideoSession:
    session_id: int
    frames: np.ndarray      # (T, H, W, 3) in [0, 1]
    embeddings: np.ndarray  # (T, 160)

    def __post_init__(self):
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise DataError(f"frames must be (T, H, W, 3), got {self.frames.shape}")
        if self.embeddings.shape[0] != self.frames.shape[0]:
            raise DataError("one embedding per frame required")


def _gaussian_cloud(rng, center: np.ndarray, n: int, sigma: float) -> np.ndarray:
    return center[None, :] + sigma * rng.standard_normal((n, center.size))


def synth_til(cfg: TilData, seed: int) -> list[SessionDataset]:
    """Binary sessions along rotating axes, symmetric class pair per session.

    Class centers sit at +/- separation/2 along a session-specific unit
    direction in the first two coords; remaining dims carry unit noise only.
    """
    out = []
    for sid in range(1, cfg.sessions + 1):
        rng = np.random.default_rng(np.random.SeedSequence([seed, _TIL_TAG, sid]))
        angle = np.pi * (sid - 1) / cfg.sessions
        axis = np.zeros(cfg.dim)
        axis[0], axis[1] = np.cos(angle), np.sin(angle)
        offset = 0.5 * cfg.separation * axis
        classes = [2 * sid - 2, 2 * sid - 1]

        def split(per_class):
            xs, ys = [], []
            for local, sign in enumerate((-1.0, 1.0)):
                xs.append(_gaussian_cloud(rng, sign * offset, per_class, 1.0))
                ys.append(np.full(per_class, classes[local], dtype=np.int64))
            x, y = np.concatenate(xs), np.concatenate(ys)
            order = rng.permutation(len(y))
            return x[order], y[order]

        train_x, train_y = split(cfg.train_per_class)
        eval_x, eval_y = split(cfg.eval_per_class)
        out.append(SessionDataset(sid, classes, train_x, train_y, eval_x, eval_y))
    return out


def fscil_class_centers(cfg: FscilData) -> np.ndarray:
    """All class means, evenly spaced on a circle in the first two dims."""
    total = cfg.base_classes + cfg.ways * cfg.incremental_sessions
    centers = np.zeros((total, cfg.dim))
    angles = 2.0 * np.pi * np.arange(total) / total
    centers[:, 0] = cfg.radius * np.cos(angles)
    centers[:, 1] = cfg.radius * np.sin(angles)
    return centers


def synth_fscil(cfg: FscilData, seed: int) -> list[SessionDataset]:
    """Base session with many samples, then few-shot sessions of novel classes."""
    centers = fscil_class_centers(cfg)
    out = []
    for sid in range(1, cfg.incremental_sessions + 2):
        rng = np.random.default_rng(np.random.SeedSequence([seed, _FSCIL_TAG, sid]))
        if sid == 1:
            classes = list(range(cfg.base_classes))
            per_train = cfg.base_train_per_class
        else:
            start = cfg.base_classes + cfg.ways * (sid - 2)
            classes = list(range(start, start + cfg.ways))
            per_train = cfg.shots

        def split(per_class, shuffle):
            xs, ys = [], []
            for cid in classes:
                xs.append(_gaussian_cloud(rng, centers[cid], per_class, cfg.sigma))
                ys.append(np.full(per_class, cid, dtype=np.int64))
            x, y = np.concatenate(xs), np.concatenate(ys)
            if shuffle:
                order = rng.permutation(len(y))
                x, y = x[order], y[order]
            return x, y

        train_x, train_y = split(per_train, shuffle=True)
        eval_x, eval_y = split(cfg.eval_per_class, shuffle=False)
        out.append(SessionDataset(sid, classes, train_x, train_y, eval_x, eval_y))
    return out


def _grid(h: int, w: int):
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return yy / max(h - 1, 1), xx / max(w - 1, 1)


def _make_gradient(rng, h, w):
    yy, xx = _grid(h, w)
    theta0 = rng.uniform(0, 2 * np.pi)
    cy, cx = rng.uniform(0.25, 0.75, size=2)

    def render(t_frac):
        frame = np.empty((h, w, 3))
        theta = theta0 + 0.8 * np.pi * t_frac
        ramp = 0.5 + 0.5 * (np.cos(theta) * (xx - 0.5) + np.sin(theta) * (yy - 0.5)) / 0.7071
        by = cy + 0.2 * np.sin(2 * np.pi * t_frac)
        bx = cx + 0.2 * np.cos(2 * np.pi * t_frac)
        blob = np.exp(-((yy - by) ** 2 + (xx - bx) ** 2) / 0.02)
        for c in range(3):
            frame[:, :, c] = 0.15 + 0.6 * ramp + 0.25 * blob * (0.5 + 0.5 * np.cos(2.1 * c))
        return np.clip(frame, 0.0, 1.0)

    return render


def _make_checker(rng, h, w):
    yy, xx = _grid(h, w)
    fy, fx = rng.integers(1, 3, size=2)
    phase0 = rng.uniform(0, 2 * np.pi)

    def render(t_frac):
        frame = np.empty((h, w, 3))
        phase = phase0 + 2 * np.pi * t_frac
        for c in range(3):
            s = (np.sin(2 * np.pi * fx * xx + phase + 0.9 * c)
                 * np.sin(2 * np.pi * fy * yy + 0.5 * phase))
            frame[:, :, c] = 0.5 + 0.45 * np.tanh(s)
        return np.clip(frame, 0.0, 1.0)

    return render


def _make_texture(rng, h, w):
    yy, xx = _grid(h, w)
    waves = [(rng.integers(1, 3), rng.integers(1, 3), rng.uniform(0, 2 * np.pi),
              rng.uniform(0.5, 1.5)) for _ in range(2)]

    def render(t_frac):
        frame = np.zeros((h, w, 3))
        for c in range(3):
            acc = np.zeros((h, w))
            for i, (fxi, fyi, p0, omega) in enumerate(waves):
                acc += np.sin(2 * np.pi * (fxi * xx + fyi * yy) + p0
                              + omega * 2 * np.pi * t_frac + 0.7 * c) / (i + 1)
            frame[:, :, c] = acc
        lo, hi = frame.min(), frame.max()
        span = hi - lo if hi > lo else 1.0
        return 0.1 + 0.8 * (frame - lo) / span

    return render


_VIL_FAMILIES = (_make_gradient, _make_checker, _make_texture)


def synth_vil(cfg: VilData, seed: int, frame_hw: tuple[int, int] = (32, 32)) -> list[VideoSession]:
    """Short videos, one visual family per session, cycling through families."""
    h, w = frame_hw
    out = []
    for sid in range(1, cfg.sessions + 1):
        rng = np.random.default_rng(np.random.SeedSequence([seed, _VIL_TAG, sid]))
        render = _VIL_FAMILIES[(sid - 1) % len(_VIL_FAMILIES)](rng, h, w)
        frames = np.stack([render(t / max(cfg.frames - 1, 1)) for t in range(cfg.frames)])
        emb = np.stack([
            session_time_embedding(sid, t, cfg.sessions, cfg.frames)
            for t in range(cfg.frames)
        ])
        out.append(VideoSession(sid, frames, emb))
    return out
