"""Losses, optimizer and the two training stages."""

from akvsr.training.losses import (
    HybridLossConfig,
    attention_loss,
    ctc_term,
    feature_distillation,
    hybrid_loss,
    posterior_distillation,
)
from akvsr.training.models import (
    AsrModel,
    DistilledVsrModel,
    Example,
    Recognizer,
    VsrModel,
)
from akvsr.training.optim import Adam, TrainState, sgd_adam_step
from akvsr.training.stages import (
    asr_examples,
    distillation_targets,
    evaluate_wer,
    stage_two_memory,
    train_distilled_vsr,
    train_memory_asr,
    train_vsr,
    vocab_for,
    vsr_examples,
)

__all__ = [
    "Adam",
    "AsrModel",
    "DistilledVsrModel",
    "Example",
    "HybridLossConfig",
    "Recognizer",
    "TrainState",
    "VsrModel",
    "asr_examples",
    "attention_loss",
    "ctc_term",
    "distillation_targets",
    "evaluate_wer",
    "feature_distillation",
    "hybrid_loss",
    "posterior_distillation",
    "sgd_adam_step",
    "stage_two_memory",
    "train_distilled_vsr",
    "train_memory_asr",
    "train_vsr",
    "vocab_for",
    "vsr_examples",
]
