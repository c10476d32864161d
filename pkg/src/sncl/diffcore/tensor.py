"""Reverse-mode autodiff on numpy arrays.

A Tensor wraps a float64 ndarray plus a closure that routes gradients to its
parents. backward() walks the tape in reverse topological order. Gradients
follow numpy broadcasting; broadcast dims are summed back out on the way up.

Custom ops (e.g. spectral multiplies) can extend the tape by constructing
``Tensor(out, parents=(...), backward=fn)`` directly, where ``fn`` receives the
output gradient and calls ``parent.accumulate(g)`` for each parent that needs
one.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from ..errors import ShapeError

Array = np.ndarray

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_GELU_C = 0.044715


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if keep:
        grad = grad.sum(axis=keep, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward", "needs_grad")

    def __init__(
        self,
        data,
        parents: Sequence["Tensor"] = (),
        backward: Callable[[Array], None] | None = None,
        needs_grad: bool | None = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Array | None = None
        self._parents = tuple(parents)
        self._backward = backward
        if needs_grad is None:
            needs_grad = any(p.needs_grad for p in self._parents)
        self.needs_grad = needs_grad

    # -- tape plumbing ------------------------------------------------------

    def accumulate(self, g: Array) -> None:
        if not self.needs_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += _unbroadcast(g, self.data.shape)

    def backward(self) -> None:
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar, got shape {self.data.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.needs_grad:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(()))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data + other.data, (self, other))

        def bw(g: Array):
            self.accumulate(g)
            other.accumulate(g)

        out._backward = bw
        return out

    __radd__ = __add__

    def __mul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data * other.data, (self, other))

        def bw(g: Array):
            self.accumulate(g * other.data)
            other.accumulate(g * self.data)

        out._backward = bw
        return out

    __rmul__ = __mul__

    def __neg__(self):
        out = Tensor(-self.data, (self,))
        out._backward = lambda g: self.accumulate(-g)
        return out

    def __sub__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data - other.data, (self, other))

        def bw(g: Array):
            self.accumulate(g)
            other.accumulate(-g)

        out._backward = bw
        return out

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __truediv__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data / other.data, (self, other))

        def bw(g: Array):
            self.accumulate(g / other.data)
            other.accumulate(-g * self.data / (other.data * other.data))

        out._backward = bw
        return out

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, exponent: float):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only scalar exponents are supported")
        out = Tensor(self.data**exponent, (self,))
        out._backward = lambda g: self.accumulate(
            g * exponent * self.data ** (exponent - 1)
        )
        return out

    def __matmul__(self, other):
        other = as_tensor(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ShapeError("matmul expects 2-d operands")
        if self.data.shape[1] != other.data.shape[0]:
            raise ShapeError(
                f"matmul mismatch: {self.data.shape} @ {other.data.shape}"
            )
        out = Tensor(self.data @ other.data, (self, other))

        def bw(g: Array):
            self.accumulate(g @ other.data.T)
            other.accumulate(self.data.T @ g)

        out._backward = bw
        return out

    # -- reductions / reshaping --------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), (self,))

        def bw(g: Array):
            if axis is not None and not keepdims:
                axes = axis if isinstance(axis, tuple) else (axis,)
                g = np.expand_dims(g, axes)
            self.accumulate(np.broadcast_to(g, self.data.shape))

        out._backward = bw
        return out

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else np.prod(
            [self.data.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))]
        )
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    def reshape(self, shape: tuple[int, ...]):
        out = Tensor(self.data.reshape(shape), (self,))
        out._backward = lambda g: self.accumulate(g.reshape(self.data.shape))
        return out

    def transpose(self, axes: tuple[int, ...]):
        inv = np.argsort(axes)
        out = Tensor(self.data.transpose(axes), (self,))
        out._backward = lambda g: self.accumulate(g.transpose(inv))
        return out

    # -- elementwise nonlinearities ------------------------------------------

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), (self,))
        out._backward = lambda g: self.accumulate(g * (self.data > 0.0))
        return out

    def gelu(self):
        # tanh approximation; exact erf form is not needed downstream
        u = _SQRT_2_OVER_PI * (self.data + _GELU_C * self.data**3)
        t = np.tanh(u)
        out = Tensor(0.5 * self.data * (1.0 + t), (self,))

        def bw(g: Array):
            du = _SQRT_2_OVER_PI * (1.0 + 3.0 * _GELU_C * self.data**2)
            self.accumulate(g * (0.5 * (1.0 + t) + 0.5 * self.data * (1.0 - t * t) * du))

        out._backward = bw
        return out

    def sigmoid(self):
        s = 1.0 / (1.0 + np.exp(-self.data))
        out = Tensor(s, (self,))
        out._backward = lambda g: self.accumulate(g * s * (1.0 - s))
        return out

    def tanh(self):
        t = np.tanh(self.data)
        out = Tensor(t, (self,))
        out._backward = lambda g: self.accumulate(g * (1.0 - t * t))
        return out

    def exp(self):
        e = np.exp(self.data)
        out = Tensor(e, (self,))
        out._backward = lambda g: self.accumulate(g * e)
        return out

    def log(self):
        out = Tensor(np.log(self.data), (self,))
        out._backward = lambda g: self.accumulate(g / self.data)
        return out

    def sqrt(self):
        r = np.sqrt(self.data)
        out = Tensor(r, (self,))
        out._backward = lambda g: self.accumulate(g * 0.5 / r)
        return out

    def abs(self):
        out = Tensor(np.abs(self.data), (self,))
        # sign(0) = 0: subgradient at the kink
        out._backward = lambda g: self.accumulate(g * np.sign(self.data))
        return out


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, needs_grad=False)


def const(x) -> Tensor:
    """Wrap data as a non-differentiable tape node."""
    return Tensor(x, needs_grad=False)


# -- structured ops ----------------------------------------------------------


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of NCHW input with OIKK kernels."""
    x = as_tensor(x)
    w = as_tensor(w)
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeError("conv2d expects x:(B,C,H,W) and w:(O,I,kh,kw)")
    bsz, cin, _, _ = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if cin != cin_w:
        raise ShapeError(f"conv2d channel mismatch: x has {cin}, w expects {cin_w}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    hp, wp = xp.shape[2], xp.shape[3]
    if hp < kh or wp < kw:
        raise ShapeError(f"conv2d kernel {kh}x{kw} larger than padded input {hp}x{wp}")
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    if stride > 1:
        win = win[:, :, ::stride, ::stride]
    y = np.einsum("bihwkl,oikl->bohw", win, w.data, optimize=True)
    if b is not None:
        b = as_tensor(b)
        y = y + b.data[None, :, None, None]
    parents = (x, w) if b is None else (x, w, b)
    out = Tensor(y, parents)
    ho, wo = y.shape[2], y.shape[3]

    def bw(g: Array):
        w.accumulate(np.einsum("bihwkl,bohw->oikl", win, g, optimize=True))
        if b is not None:
            b.accumulate(g.sum(axis=(0, 2, 3)))
        if not x.needs_grad:
            return
        if stride == 1:
            # full correlation of the output grad with flipped kernels
            gp = np.pad(g, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
            gwin = np.lib.stride_tricks.sliding_window_view(gp, (kh, kw), axis=(2, 3))
            wf = w.data[:, :, ::-1, ::-1]
            dxp = np.einsum("bohwkl,oikl->bihw", gwin, wf, optimize=True)
        else:
            dxp = np.zeros((bsz, cin, hp, wp))
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += np.einsum(
                        "bohw,oi->bihw", g, w.data[:, :, i, j], optimize=True
                    )
        if padding:
            dxp = dxp[:, :, padding:-padding, padding:-padding]
        x.accumulate(dxp)

    out._backward = bw
    return out


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """(B, C*r^2, H, W) -> (B, C, H*r, W*r), channel-major sub-pixel order."""
    x = as_tensor(x)
    if x.data.ndim != 4:
        raise ShapeError("pixel_shuffle expects (B,C,H,W)")
    bsz, c_in, h, w = x.data.shape
    if c_in % (r * r):
        raise ShapeError(f"pixel_shuffle: {c_in} channels not divisible by r^2={r * r}")
    c = c_in // (r * r)
    y = (
        x.data.reshape(bsz, c, r, r, h, w)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(bsz, c, h * r, w * r)
    )
    out = Tensor(y, (x,))

    def bw(g: Array):
        gx = (
            g.reshape(bsz, c, h, r, w, r)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(bsz, c_in, h, w)
        )
        x.accumulate(gx)

    out._backward = bw
    return out
