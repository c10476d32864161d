from .losses import cosine_logits, metric_loss
from .prototypes import PrototypeStore, ncm_infer, update_prototypes
from .soft_mask import SoftMask, build_soft_mask, draw_minor_values

_LAZY = ("SoftNetLearner",)


def __getattr__(name):
    if name in _LAZY:
        from . import training
        return getattr(training, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "PrototypeStore", "SoftMask", "build_soft_mask", "cosine_logits",
    "draw_minor_values", "metric_loss", "ncm_infer", "update_prototypes", *_LAZY,
]
