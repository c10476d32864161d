"""Residual stages that add a spectral path to a local one."""

from __future__ import annotations

from ..diffcore.layers import Conv2d, Dense, _ACTIVATIONS
from ..diffcore.tensor import Tensor
from ..errors import ParameterError
from ..subnet.scored import ScoredParameter
from .spectral import SpectralWeights, spectral_multiply_1d, spectral_multiply_2d


def residual_fso_forward(local_path: Tensor, fso_path: Tensor, activation: str = "gelu") -> Tensor:
    """act(local + spectral): both paths see the same input, sum, then activate."""
    if activation not in _ACTIVATIONS:
        raise ParameterError(f"unknown activation {activation!r}")
    return _ACTIVATIONS[activation](local_path + fso_path)


class FsoStage1d:
    """Feature-vector stage: act(dense(x) + fso(x)), shape preserving."""

    def __init__(self, name: str, features: int, modes: int | None = None, activation: str = "relu"):
        self.name = name
        self.features = features
        self.activation = activation
        if modes is None:
            modes = features // 2 + 1
        self.dense = Dense(f"{name}.local", features, features)
        self.spectral = SpectralWeights(f"{name}.spec", 1, 1, (features,), (modes,))

    def scored_params(self) -> list[ScoredParameter]:
        return self.dense.scored_params() + self.spectral.scored_params()

    def apply(self, x: Tensor, eff: dict[str, Tensor]) -> Tensor:
        local = self.dense.apply(x, eff)
        b = x.data.shape[0]
        spec = spectral_multiply_1d(
            x.reshape((b, 1, self.features)),
            eff[self.spectral.real.name],
            eff[self.spectral.imag.name],
            self.spectral,
        ).reshape((b, self.features))
        return residual_fso_forward(local, spec, self.activation)


class FsoStage2d:
    """Feature-map stage: act(conv3x3(x) + fso(x)), shape preserving."""

    def __init__(self, name: str, channels: int, height: int, width: int,
                 modes: tuple[int, int] | None = None, activation: str = "gelu"):
        self.name = name
        self.activation = activation
        if modes is None:
            modes = (height // 2 + 1, width // 2 + 1)
        self.conv = Conv2d(f"{name}.local", channels, channels, 3, padding=1)
        self.spectral = SpectralWeights(f"{name}.spec", channels, channels, (height, width), tuple(modes))

    def scored_params(self) -> list[ScoredParameter]:
        return self.conv.scored_params() + self.spectral.scored_params()

    def apply(self, x: Tensor, eff: dict[str, Tensor]) -> Tensor:
        local = self.conv.apply(x, eff)
        spec = spectral_multiply_2d(
            x, eff[self.spectral.real.name], eff[self.spectral.imag.name], self.spectral
        )
        return residual_fso_forward(local, spec, self.activation)
