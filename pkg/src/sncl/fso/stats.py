"""Diagnostics over feature maps produced by spectral stages."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


def fso_feature_stats(features: np.ndarray) -> dict:
    """Per-channel variance plus spectral energy binned by radial frequency.

    Accepts (H, W), (C, H, W) or (B, C, H, W); batch and channels pool into
    the radial profile. Energy uses the DFT normalization where the profile
    sums to the total squared signal (Parseval), so bin 0 holds exactly the
    energy of the mean component.
    """
    f = np.asarray(features, dtype=np.float64)
    if f.ndim == 2:
        f = f[None, None]
    elif f.ndim == 3:
        f = f[None]
    if f.ndim != 4:
        raise ShapeError(f"expected 2-4 dims, got shape {features.shape}")
    _, c, h, w = f.shape
    variances = f.reshape(-1, c, h * w).var(axis=-1).mean(axis=0)

    spec = np.fft.fft2(f, axes=(-2, -1))
    power = (spec.real**2 + spec.imag**2) / (h * w)
    fy = np.fft.fftfreq(h, d=1.0 / h)  # signed integer frequencies
    fx = np.fft.fftfreq(w, d=1.0 / w)
    radius = np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2)
    bins = np.floor(radius + 0.5).astype(np.int64)
    profile = np.bincount(bins.reshape(-1), weights=power.sum(axis=(0, 1)).reshape(-1))
    return {
        "channel_variance": variances,
        "radial_energy": profile,
        "total_energy": float(power.sum()),
    }
