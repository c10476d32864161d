"""Deterministic parameter initialization."""

from __future__ import annotations

import numpy as np

from .graph import ModelGraph


def seeded_init(model: ModelGraph, seed: int) -> None:
    """Fill every θ and ρ with U(-a, +a), a = sqrt(1/fan_in).

    Draw order is the graph's parameter order (trunk layers, then heads by
    session id), θ before ρ within each parameter, so the same architecture
    and seed always yield identical values.
    """
    rng = np.random.default_rng(seed)
    for p in model.parameters():
        a = float(np.sqrt(1.0 / p.fan_in))
        p.theta = rng.uniform(-a, a, p.shape).astype(np.float64)
        p.rho = rng.uniform(-a, a, p.shape).astype(np.float64)
