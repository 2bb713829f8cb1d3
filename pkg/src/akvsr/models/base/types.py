"""Common types and enums for akvsr models.

This module defines shared enums used across corpus, training and
evaluation components.
"""

from enum import Enum


class LogLevel(str, Enum):
    """Enumeration of available logging levels."""

    DEBUG = "DEBUG"
    INFO = "INFO"
    NOTICE = "NOTICE"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"
    ALERT = "ALERT"
    EMERGENCY = "EMERGENCY"


class Split(str, Enum):
    """Corpus splits written by the generator."""

    TRAIN = "train"
    TEST = "test"
    QUANTFIT = "quantfit"


class AblationAxis(str, Enum):
    """Sweepable axes of the ablation runner."""

    CLUSTERS = "clusters"
    ABM_DEPTH = "abmDepth"
    MEMORY_DIM = "memoryDim"

    @property
    def reruns_memory_stage(self) -> bool:
        """Whether a change along this axis requires retraining stage 1."""
        return self is not AblationAxis.ABM_DEPTH


class DistillationMode(str, Enum):
    """What a distilled VSR baseline matches against the stage-1 ASR model."""

    LOGIT = "logit"
    FEATURE = "feature"
