"""Public API for akvsr record and report models."""

from akvsr.models.base.types import AblationAxis, DistillationMode, LogLevel, Split
from akvsr.models.corpus import PhonemeInventory, SyntheticSample, Utterance
from akvsr.models.results import (
    AblationResult,
    AblationRow,
    AblationSummary,
    AbmBenefitReport,
    DisentanglementReport,
    GradCheckEntry,
    GradCheckReport,
    GradCheckSummary,
    PipelineReport,
    RetrievalLayerStats,
    RetrievalReport,
    TrainReport,
    WerReport,
)

__all__ = [
    # Corpus
    "PhonemeInventory",
    "SyntheticSample",
    "Utterance",
    # Reports
    "AblationResult",
    "AblationRow",
    "AblationSummary",
    "AbmBenefitReport",
    "DisentanglementReport",
    "GradCheckEntry",
    "GradCheckReport",
    "GradCheckSummary",
    "PipelineReport",
    "RetrievalLayerStats",
    "RetrievalReport",
    "TrainReport",
    "WerReport",
    # Enums
    "AblationAxis",
    "DistillationMode",
    "LogLevel",
    "Split",
]
