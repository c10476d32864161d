"""Streaming metric ledger and the continual-learning summary statistics."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError


def acc_bwt(matrix: np.ndarray) -> tuple[float, float]:
    """Summary pair over a lower-triangular session metric matrix.

    ``matrix[j - 1, i - 1]`` is the metric on session i measured right after
    training session j (only i <= j is meaningful). Returns

      ACC: mean of the last row (final performance over all sessions),
      BWT: mean over i < T of matrix[T-1, i] - matrix[i, i], i.e. how much
           each session's metric moved between "just trained" and "end of
           the whole stream". Zero for a single session.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DataError(f"expected a square non-empty matrix, got shape {a.shape}")
    t = a.shape[0]
    lower = a[np.tril_indices(t)]
    if np.isnan(lower).any():
        raise DataError("metric matrix has unfilled (train, eval) cells")
    final = float(np.mean(a[t - 1, :]))
    if t == 1:
        return final, 0.0
    drift = a[t - 1, : t - 1] - np.diagonal(a)[: t - 1]
    return final, float(np.mean(drift))


class RunLedger:
    """Collects (train session, eval session) metric cells plus free extras."""

    def __init__(self, metric: str, sessions: int):
        if sessions < 1:
            raise DataError(f"sessions must be >= 1, got {sessions}")
        self.metric = metric
        self.sessions = sessions
        self._cells = np.full((sessions, sessions), np.nan)
        self.extras: dict = {}
        self.losses: dict[int, list[float]] = {}

    def record(self, train_sid: int, eval_sid: int, value: float) -> None:
        if not (1 <= train_sid <= self.sessions and 1 <= eval_sid <= self.sessions):
            raise DataError(f"session pair ({train_sid}, {eval_sid}) out of range "
                            f"1..{self.sessions}")
        if eval_sid > train_sid:
            raise DataError(f"cannot eval session {eval_sid} before training it "
                            f"(trained up to {train_sid})")
        self._cells[train_sid - 1, eval_sid - 1] = float(value)

    def record_losses(self, train_sid: int, losses) -> None:
        self.losses[train_sid] = [float(v) for v in losses]

    def matrix(self) -> np.ndarray:
        return self._cells.copy()

    def value(self, train_sid: int, eval_sid: int) -> float:
        v = self._cells[train_sid - 1, eval_sid - 1]
        if np.isnan(v):
            raise DataError(f"cell ({train_sid}, {eval_sid}) was never recorded")
        return float(v)

    def summary(self) -> dict:
        final, drift = acc_bwt(self._cells)
        return {"metric": self.metric, "sessions": self.sessions,
                "acc": final, "bwt": drift}

    def to_dict(self) -> dict:
        cells = [[None if np.isnan(v) else v for v in row] for row in self._cells]
        return {"metric": self.metric, "sessions": self.sessions, "cells": cells,
                "losses": {str(k): v for k, v in self.losses.items()},
                "extras": self.extras, "summary": self.summary()}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "RunLedger":
        led = cls(data["metric"], data["sessions"])
        for j, row in enumerate(data["cells"]):
            for i, v in enumerate(row):
                if v is not None:
                    led._cells[j, i] = v
        led.losses = {int(k): list(v) for k, v in data.get("losses", {}).items()}
        led.extras = dict(data.get("extras", {}))
        return led

    @classmethod
    def read_json(cls, path: str | Path) -> "RunLedger":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"cannot read run log {path}: {e}") from e
        return cls.from_dict(data)
