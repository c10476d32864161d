"""Layer primitives over ScoredParameters.

A layer exposes:
  - ``name``
  - ``scored_params()``: the ScoredParameters it owns (possibly none)
  - ``apply(x, eff)``: forward pass, where ``eff`` maps parameter name to the
    effective-weight tape node (masked or dense) built by the model graph.

Anything matching that shape plugs into a ModelGraph; spectral stages in the
fso package implement the same protocol.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError, ShapeError
from ..subnet.scored import ScoredParameter
from . import tensor as T
from .tensor import Tensor


class Dense:
    """y = x @ W.T + b for x of shape (B, in_features)."""

    def __init__(self, name: str, in_features: int, out_features: int):
        self.name = name
        self.in_features = in_features
        self.out_features = out_features
        self.weight = ScoredParameter(f"{name}/weight", (out_features, in_features), fan_in=in_features)
        self.bias = ScoredParameter(f"{name}/bias", (out_features,), fan_in=in_features)

    def scored_params(self) -> list[ScoredParameter]:
        return [self.weight, self.bias]

    def apply(self, x: Tensor, eff: dict[str, Tensor]) -> Tensor:
        if x.data.ndim != 2 or x.data.shape[1] != self.in_features:
            raise ShapeError(f"{self.name}: expected (B,{self.in_features}), got {x.data.shape}")
        w = eff[self.weight.name]
        b = eff[self.bias.name]
        return x @ w.transpose((1, 0)) + b.reshape((1, self.out_features))


class Conv2d:
    """NCHW convolution (cross-correlation), square kernel."""

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel: int, stride: int = 1, padding: int = 0):
        self.name = name
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kernel * kernel
        self.weight = ScoredParameter(f"{name}/weight", (out_channels, in_channels, kernel, kernel), fan_in=fan_in)
        self.bias = ScoredParameter(f"{name}/bias", (out_channels,), fan_in=fan_in)

    def scored_params(self) -> list[ScoredParameter]:
        return [self.weight, self.bias]

    def apply(self, x: Tensor, eff: dict[str, Tensor]) -> Tensor:
        return T.conv2d(x, eff[self.weight.name], eff[self.bias.name], stride=self.stride, padding=self.padding)


class PixelShuffle:
    def __init__(self, name: str, upscale: int):
        self.name = name
        self.upscale = upscale

    def scored_params(self) -> list[ScoredParameter]:
        return []

    def apply(self, x: Tensor, eff: dict[str, Tensor]) -> Tensor:
        return T.pixel_shuffle(x, self.upscale)


_ACTIVATIONS = {
    "relu": Tensor.relu,
    "gelu": Tensor.gelu,
    "sigmoid": Tensor.sigmoid,
    "tanh": Tensor.tanh,
    "identity": lambda t: t,
}


class Activation:
    def __init__(self, name: str, kind: str):
        if kind not in _ACTIVATIONS:
            raise ParameterError(f"unknown activation {kind!r}")
        self.name = name
        self.kind = kind

    def scored_params(self) -> list[ScoredParameter]:
        return []

    def apply(self, x: Tensor, eff: dict[str, Tensor]) -> Tensor:
        return _ACTIVATIONS[self.kind](x)


class Reshape:
    """Reshape trailing dims, keeping the leading batch dim."""

    def __init__(self, name: str, target: tuple[int, ...]):
        self.name = name
        self.target = tuple(target)

    def scored_params(self) -> list[ScoredParameter]:
        return []

    def apply(self, x: Tensor, eff: dict[str, Tensor]) -> Tensor:
        batch = x.data.shape[0]
        want = int(np.prod(self.target))
        have = int(np.prod(x.data.shape[1:]))
        if want != have:
            raise ShapeError(f"{self.name}: cannot reshape {x.data.shape} to (B, {self.target})")
        return x.reshape((batch,) + self.target)
