from .block import FsoStage1d, FsoStage2d, residual_fso_forward
from .spectral import SpectralWeights, fso_apply, spectral_multiply_1d, spectral_multiply_2d
from .stats import fso_feature_stats

__all__ = [
    "FsoStage1d", "FsoStage2d", "SpectralWeights", "fso_apply",
    "fso_feature_stats", "residual_fso_forward", "spectral_multiply_1d",
    "spectral_multiply_2d",
]
