from .encoding import EMBED_DIM, positional_encode, session_time_embedding
from .metrics import PSNR_CAP_DB, gaussian_window, psnr, ssim, vil_loss

_LAZY = ("NirLearner", "build_decoder", "decode_frame", "frame_size", "warmup_cosine_lr")


def __getattr__(name):
    if name in _LAZY:
        from . import decoder, training
        if hasattr(decoder, name):
            return getattr(decoder, name)
        return getattr(training, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "EMBED_DIM", "PSNR_CAP_DB", "gaussian_window", "positional_encode",
    "psnr", "session_time_embedding", "ssim", "vil_loss", *_LAZY,
]
