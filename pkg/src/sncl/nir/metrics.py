"""Frame quality measures: structural similarity, PSNR, and the training loss.

SSIM follows the standard single-scale recipe: local Gaussian statistics
(11x11 window, sigma 1.5), stability constants K1=0.01, K2=0.03 on a given
dynamic range, mean over the valid map. Frames smaller than the window fall
back to one global window. Everything here runs on tape nodes so the loss is
differentiable; psnr is a plain numpy scalar used for evaluation only.
"""

from __future__ import annotations

import numpy as np

from ..diffcore import tensor as T
from ..diffcore.tensor import Tensor, as_tensor, const
from ..errors import ShapeError

PSNR_CAP_DB = 100.0


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    """Normalized 2-d Gaussian, the SSIM weighting window."""
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def _to_chw(x: Tensor) -> Tensor:
    """(H,W) -> (1,1,H,W); (H,W,C) -> (C,1,H,W): channels ride the batch axis."""
    if x.data.ndim == 2:
        return x.reshape((1, 1) + x.data.shape)
    if x.data.ndim == 3:
        h, w, c = x.data.shape
        return x.transpose((2, 0, 1)).reshape((c, 1, h, w))
    raise ShapeError(f"expected (H,W) or (H,W,C), got {x.data.shape}")


def ssim(x, y, data_range: float = 1.0, k1: float = 0.01, k2: float = 0.03,
         window: int = 11, sigma: float = 1.5) -> Tensor:
    """Mean structural similarity between two frames; differentiable in both."""
    x, y = as_tensor(x), as_tensor(y)
    if x.data.shape != y.data.shape:
        raise ShapeError(f"frame shapes differ: {x.data.shape} vs {y.data.shape}")
    xc, yc = _to_chw(x), _to_chw(y)
    h, w = xc.data.shape[2], xc.data.shape[3]
    if h < window or w < window:
        kern = np.full((1, 1, h, w), 1.0 / (h * w))  # global uniform window
    else:
        kern = gaussian_window(window, sigma)[None, None]
    kt = const(kern)

    def smooth(t: Tensor) -> Tensor:
        return T.conv2d(t, kt)

    mu_x = smooth(xc)
    mu_y = smooth(yc)
    var_x = smooth(xc * xc) - mu_x * mu_x
    var_y = smooth(yc * yc) - mu_y * mu_y
    cov = smooth(xc * yc) - mu_x * mu_y
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    num = (mu_x * mu_y * 2.0 + c1) * (cov * 2.0 + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return (num / den).mean()


def psnr(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB, capped so identical frames are finite."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"frame shapes differ: {a.shape} vs {b.shape}")
    mse = float(((a - b) ** 2).mean())
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(data_range**2 / mse), PSNR_CAP_DB))


def vil_loss(target, pred, alpha: float = 0.7, data_range: float = 1.0) -> Tensor:
    """alpha * L1 + (1 - alpha) * (1 - SSIM), the per-frame regression loss."""
    target, pred = as_tensor(target), as_tensor(pred)
    l1 = (pred - target).abs().mean()
    return l1 * alpha + (const(1.0) - ssim(target, pred, data_range)) * (1.0 - alpha)
