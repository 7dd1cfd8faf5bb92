from .blstm import (
    BlstmModel,
    DistributionSequence,
    FrameDistribution,
    ModelConfig,
    ModelError,
    load_checkpoint,
    save_checkpoint,
)
from .ctc import CtcError, ctc_forward_backward, ctc_loss, min_frames_for
from .decode import (
    DecodeError,
    OneDSrt,
    OneDSymbol,
    decode_oned,
    decode_relations,
    decode_symbols,
    recognize_1d,
)
from .losses import LossBreakdown, combined_loss, constraint_loss

__all__ = [
    "BlstmModel",
    "CtcError",
    "DecodeError",
    "DistributionSequence",
    "FrameDistribution",
    "LossBreakdown",
    "ModelConfig",
    "ModelError",
    "OneDSrt",
    "OneDSymbol",
    "combined_loss",
    "constraint_loss",
    "ctc_forward_backward",
    "ctc_loss",
    "decode_oned",
    "decode_relations",
    "decode_symbols",
    "load_checkpoint",
    "min_frames_for",
    "recognize_1d",
    "save_checkpoint",
]
