from .masks import BinaryMask, accumulate, select_topc_mask, topc_count
from .scored import ScoredParameter
from .steps import gated_weight_step, ste_score_step

_LAZY = (
    "WsnLearner", "current_masks", "frozen_masks", "reuse_statistics",
    "trunk_params", "wsn_update",
)


def __getattr__(name):
    # training depends on diffcore, which depends on this package; defer it
    if name in _LAZY:
        from . import training
        return getattr(training, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "BinaryMask", "ScoredParameter", "accumulate", "gated_weight_step",
    "select_topc_mask", "ste_score_step", "topc_count", *_LAZY,
]
