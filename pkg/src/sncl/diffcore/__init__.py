from .graph import ModelGraph
from .init import seeded_init
from .layers import Activation, Conv2d, Dense, PixelShuffle, Reshape
from .losses import accuracy, cross_entropy
from .optim import Adam, Sgd, make_optimizer
from .tensor import Tensor, as_tensor, const, conv2d, pixel_shuffle

__all__ = [
    "Activation", "Adam", "Conv2d", "Dense", "ModelGraph", "PixelShuffle",
    "Reshape", "Sgd", "Tensor", "accuracy", "as_tensor", "const", "conv2d",
    "cross_entropy", "make_optimizer", "pixel_shuffle", "seeded_init",
]
