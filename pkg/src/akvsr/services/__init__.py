"""Checkpoint storage, stage artifacts, the gradient suite and the pipeline."""

from akvsr.services.artifacts import (
    load_memory,
    load_memory_stage,
    load_quantizer,
    load_vsr,
    save_memory_stage,
    save_quantizer,
    save_vsr,
)
from akvsr.services.checkpoint import (
    FORMAT_VERSION,
    Checkpoint,
    content_digest,
    load_checkpoint,
    save_checkpoint,
)
from akvsr.services.gradcheck import GradCheckCase, GradCheckSuite, default_cases, run_gradcheck
from akvsr.services.pipeline import Pipeline

__all__ = [
    # Checkpoints
    "FORMAT_VERSION",
    "Checkpoint",
    "content_digest",
    "load_checkpoint",
    "save_checkpoint",
    # Artifacts
    "load_memory",
    "load_memory_stage",
    "load_quantizer",
    "load_vsr",
    "save_memory_stage",
    "save_quantizer",
    "save_vsr",
    # Runners
    "GradCheckCase",
    "GradCheckSuite",
    "Pipeline",
    "default_cases",
    "run_gradcheck",
]
