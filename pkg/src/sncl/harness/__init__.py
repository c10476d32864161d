"""Experiment harness: configs, synthetic data, runners, checkpoints, reports."""

from .checkpoint import (Checkpoint, TensorRecord, bitpack_mask, bitunpack_mask,
                         dequantize_q8, quantize_q8)
from .config import (ExperimentConfig, FscilData, FsoSettings, IncrementalSettings,
                     TilData, VilData, config_from_dict, config_hash, config_to_dict,
                     load_config)
from .datasets import (SessionDataset, VideoSession, fscil_class_centers,
                       synth_fscil, synth_til, synth_vil)
from .ledger import RunLedger, acc_bwt

_LAZY = ("run_scenario", "eval_checkpoint", "transfer_matrix", "build_til_model",
         "build_vil_model", "build_fscil_model", "main")


def __getattr__(name):
    if name in _LAZY:
        if name == "main":
            from .cli import main
            return main
        from . import runners
        return getattr(runners, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
