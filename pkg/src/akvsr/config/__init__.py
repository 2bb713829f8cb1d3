"""Public API for akvsr configuration classes."""

from akvsr.config.base import AkvsrSettings
from akvsr.config.run import (
    CorpusConfig,
    ModelConfig,
    PathConfig,
    QuantizerConfig,
    RunConfig,
    TrainingConfig,
)

__all__ = [
    "AkvsrSettings",
    "CorpusConfig",
    "ModelConfig",
    "PathConfig",
    "QuantizerConfig",
    "RunConfig",
    "TrainingConfig",
]
