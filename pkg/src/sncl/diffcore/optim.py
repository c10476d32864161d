"""SGD and Adam with optional gradient/update gating.

Two gates cover every training mode here:

  - ``grad_gate`` multiplies the gradient before it reaches optimizer state,
    so frozen positions never pollute Adam moments.
  - ``delta_gate`` multiplies the final update. Positions where it is exactly
    zero are skipped outright (masked in-place write), which keeps frozen
    weights bit-identical rather than merely close.

Plain training passes neither.
"""

from __future__ import annotations

import numpy as np


def _apply(value: np.ndarray, delta: np.ndarray, delta_gate: np.ndarray | None) -> None:
    if delta_gate is None:
        np.subtract(value, delta, out=value)
    else:
        np.subtract(value, delta * delta_gate, out=value, where=delta_gate != 0.0)


class Sgd:
    def __init__(self, lr: float):
        self.lr = float(lr)

    def step(self, key: str, value: np.ndarray, grad: np.ndarray,
             grad_gate: np.ndarray | None = None,
             delta_gate: np.ndarray | None = None) -> None:
        g = grad if grad_gate is None else grad * grad_gate
        _apply(value, self.lr * g, delta_gate)


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t: dict[str, int] = {}

    def step(self, key: str, value: np.ndarray, grad: np.ndarray,
             grad_gate: np.ndarray | None = None,
             delta_gate: np.ndarray | None = None) -> None:
        g = grad if grad_gate is None else grad * grad_gate
        m = self._m.setdefault(key, np.zeros_like(value))
        v = self._v.setdefault(key, np.zeros_like(value))
        t = self._t.get(key, 0) + 1
        self._t[key] = t
        m += (1.0 - self.beta1) * (g - m)
        v += (1.0 - self.beta2) * (g * g - v)
        mhat = m / (1.0 - self.beta1**t)
        vhat = v / (1.0 - self.beta2**t)
        _apply(value, self.lr * mhat / (np.sqrt(vhat) + self.eps), delta_gate)


def make_optimizer(kind: str, lr: float):
    if kind == "adam":
        return Adam(lr)
    if kind == "sgd":
        return Sgd(lr)
    raise ValueError(f"unknown optimizer {kind!r}")
