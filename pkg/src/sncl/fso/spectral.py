"""Masked spectral multiplies over real-input Fourier transforms.

Weights live on a truncated set of frequency bins of the half spectrum
(conjugate-symmetric transforms keep outputs real by construction and halve
the parameter count). Real and imaginary parts are independent
ScoredParameters, so subnetwork masks can carve them separately.

Backward passes use closed-form adjoints of rfft/irfft rather than autodiff
through complex arithmetic: for length N, the adjoint of irfft scales interior
bins by 2/N and DC/Nyquist by 1/N with imaginary parts dropped there; the
adjoint of rfft is the reverse map with scales N/2 and N. The 2-d case
composes these with a plain fft/ifft along the leading spatial axis (factor
1/H resp. H).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..diffcore.tensor import Tensor, as_tensor
from ..errors import ParameterError, ShapeError
from ..subnet.scored import ScoredParameter


def _half_scales(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(adjoint-of-irfft, adjoint-of-rfft) bin scales for length n."""
    nf = n // 2 + 1
    fwd = np.full(nf, 2.0 / n)
    inv = np.full(nf, n / 2.0)
    fwd[0] = 1.0 / n
    inv[0] = float(n)
    if n % 2 == 0:
        fwd[-1] = 1.0 / n
        inv[-1] = float(n)
    return fwd, inv


def _kept_rows(h: int, m: int) -> np.ndarray:
    """Axis-0 bins kept under symmetric truncation: lowest m plus highest m."""
    keep = sorted(set(range(0, min(m, h))) | set(range(max(h - m, 0), h)))
    return np.asarray(keep, dtype=np.intp)


@dataclass
class SpectralWeights:
    """Complex mode weights for a spectral multiply, one matrix per kept bin.

    1-d: spatial=(N,), modes=(m,): keep the first m of N//2+1 bins,
         weight shape (Cin, Cout, m).
    2-d: spatial=(H,W), modes=(m1,m2): keep the lowest/highest m1 rows and the
         first m2 of W//2+1 columns, weight shape (Cin, Cout, K1, m2).
    """

    name: str
    in_channels: int
    out_channels: int
    spatial: tuple[int, ...]
    modes: tuple[int, ...]
    real: ScoredParameter = field(init=False)
    imag: ScoredParameter = field(init=False)

    def __post_init__(self):
        self.spatial = tuple(int(s) for s in self.spatial)
        self.modes = tuple(int(m) for m in self.modes)
        if len(self.spatial) not in (1, 2) or len(self.modes) != len(self.spatial):
            raise ParameterError(f"{self.name}: spatial {self.spatial} / modes {self.modes}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ParameterError(f"{self.name}: channels must be >= 1")
        for s, m in zip(self.spatial, self.modes):
            if not 1 <= m <= s // 2 + 1:
                raise ParameterError(
                    f"{self.name}: modes {m} outside [1, {s // 2 + 1}] for length {s}"
                )
        if len(self.spatial) == 1:
            shape = (self.in_channels, self.out_channels, self.modes[0])
        else:
            k1 = len(_kept_rows(self.spatial[0], self.modes[0]))
            shape = (self.in_channels, self.out_channels, k1, self.modes[1])
        self.real = ScoredParameter(f"{self.name}/real", shape, fan_in=self.in_channels)
        self.imag = ScoredParameter(f"{self.name}/imag", shape, fan_in=self.in_channels)

    @property
    def ndim(self) -> int:
        return len(self.spatial)

    def full_band(self) -> bool:
        """True when the mode window covers every half-spectrum bin."""
        if self.ndim == 1:
            return self.modes[0] == self.spatial[0] // 2 + 1
        h, w = self.spatial
        return len(_kept_rows(h, self.modes[0])) == h and self.modes[1] == w // 2 + 1

    def scored_params(self) -> list[ScoredParameter]:
        return [self.real, self.imag]


def spectral_multiply_1d(x: Tensor, wr: Tensor, wi: Tensor, sw: SpectralWeights) -> Tensor:
    """y[b,o,:] = irfft(sum_i (wr+i*wi)[i,o,:] * rfft(x[b,i,:])) over kept bins."""
    x = as_tensor(x)
    n = sw.spatial[0]
    m = sw.modes[0]
    if x.data.ndim != 3 or x.data.shape[1] != sw.in_channels or x.data.shape[2] != n:
        raise ShapeError(f"{sw.name}: expected (B,{sw.in_channels},{n}), got {x.data.shape}")
    nf = n // 2 + 1
    xk = np.fft.rfft(x.data, axis=-1)[..., :m]
    p, q = wr.data, wi.data
    ar, ai = xk.real, xk.imag
    yr = np.einsum("iok,bik->bok", p, ar) - np.einsum("iok,bik->bok", q, ai)
    yi = np.einsum("iok,bik->bok", p, ai) + np.einsum("iok,bik->bok", q, ar)
    yfull = np.zeros(x.data.shape[:1] + (sw.out_channels, nf), dtype=np.complex128)
    yfull[..., :m] = yr + 1j * yi
    out = Tensor(np.fft.irfft(yfull, n=n, axis=-1), (x, wr, wi))
    fwd_scale, inv_scale = _half_scales(n)

    def bw(g: np.ndarray):
        gf = np.fft.rfft(g, axis=-1)
        gr = gf.real * fwd_scale
        gi = gf.imag * fwd_scale
        gi[..., 0] = 0.0
        if n % 2 == 0:
            gi[..., -1] = 0.0
        grk, gik = gr[..., :m], gi[..., :m]
        wr.accumulate(np.einsum("bok,bik->iok", grk, ar) + np.einsum("bok,bik->iok", gik, ai))
        wi.accumulate(np.einsum("bok,bik->iok", gik, ar) - np.einsum("bok,bik->iok", grk, ai))
        if x.needs_grad:
            dar = np.einsum("iok,bok->bik", p, grk) + np.einsum("iok,bok->bik", q, gik)
            dai = np.einsum("iok,bok->bik", p, gik) - np.einsum("iok,bok->bik", q, grk)
            dxf = np.zeros(x.data.shape[:2] + (nf,), dtype=np.complex128)
            dxf[..., :m] = dar + 1j * dai
            x.accumulate(np.fft.irfft(dxf * inv_scale, n=n, axis=-1))

    out._backward = bw
    return out


def spectral_multiply_2d(x: Tensor, wr: Tensor, wi: Tensor, sw: SpectralWeights) -> Tensor:
    """2-d spectral multiply on (B,C,H,W) maps over the kept mode window."""
    x = as_tensor(x)
    h, w = sw.spatial
    m2 = sw.modes[1]
    rows = _kept_rows(h, sw.modes[0])
    if x.data.ndim != 4 or x.data.shape[1] != sw.in_channels or x.data.shape[2:] != (h, w):
        raise ShapeError(f"{sw.name}: expected (B,{sw.in_channels},{h},{w}), got {x.data.shape}")
    wf = w // 2 + 1
    xf = np.fft.rfft2(x.data, axes=(-2, -1))
    xk = xf[:, :, rows, :m2]
    p, q = wr.data, wi.data
    ar, ai = xk.real, xk.imag
    yr = np.einsum("iohk,bihk->bohk", p, ar) - np.einsum("iohk,bihk->bohk", q, ai)
    yi = np.einsum("iohk,bihk->bohk", p, ai) + np.einsum("iohk,bihk->bohk", q, ar)
    yfull = np.zeros((x.data.shape[0], sw.out_channels, h, wf), dtype=np.complex128)
    yfull[:, :, rows, :m2] = yr + 1j * yi
    out = Tensor(np.fft.irfft2(yfull, s=(h, w), axes=(-2, -1)), (x, wr, wi))
    fwd_scale, inv_scale = _half_scales(w)

    def bw(g: np.ndarray):
        gl = np.fft.rfft(g, axis=-1)
        gr_ = gl.real * fwd_scale
        gi_ = gl.imag * fwd_scale
        gi_[..., 0] = 0.0
        if w % 2 == 0:
            gi_[..., -1] = 0.0
        gfull = np.fft.fft(gr_ + 1j * gi_, axis=-2) / h
        gk = gfull[:, :, rows, :m2]
        grk, gik = np.ascontiguousarray(gk.real), np.ascontiguousarray(gk.imag)
        wr.accumulate(
            np.einsum("bohk,bihk->iohk", grk, ar) + np.einsum("bohk,bihk->iohk", gik, ai)
        )
        wi.accumulate(
            np.einsum("bohk,bihk->iohk", gik, ar) - np.einsum("bohk,bihk->iohk", grk, ai)
        )
        if x.needs_grad:
            dar = np.einsum("iohk,bohk->bihk", p, grk) + np.einsum("iohk,bohk->bihk", q, gik)
            dai = np.einsum("iohk,bohk->bihk", p, gik) - np.einsum("iohk,bohk->bihk", q, grk)
            dxf = np.zeros((x.data.shape[0], sw.in_channels, h, wf), dtype=np.complex128)
            dxf[:, :, rows, :m2] = dar + 1j * dai
            zl = np.fft.ifft(dxf, axis=-2) * h
            x.accumulate(np.fft.irfft(zl * inv_scale, n=w, axis=-1))

    out._backward = bw
    return out


def fso_apply(x, weights: SpectralWeights, masks: dict[str, np.ndarray] | None = None) -> Tensor:
    """Spectral multiply with optionally masked weights.

    masks maps parameter name -> 0/1 (or soft) multiplier; missing entries run
    dense. Accepts unbatched (C, ...) or batched (B, C, ...) input.
    """
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    unbatched = data.ndim == weights.ndim + 1
    if unbatched:
        x = as_tensor(x).reshape((1,) + data.shape)
    x = as_tensor(x)
    nodes = {}
    for p in weights.scored_params():
        raw = Tensor(p.theta, needs_grad=True)
        if masks is not None and p.name in masks:
            node = raw * Tensor(masks[p.name], needs_grad=False)
            node.needs_grad = True
        else:
            node = raw
        nodes[p.name] = node
    op = spectral_multiply_1d if weights.ndim == 1 else spectral_multiply_2d
    out = op(x, nodes[weights.real.name], nodes[weights.imag.name], weights)
    if unbatched:
        out = out.reshape(out.data.shape[1:])
    return out
