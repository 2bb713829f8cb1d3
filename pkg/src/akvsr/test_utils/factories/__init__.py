"""Test data factories for akvsr.

Usage:
    from akvsr.test_utils.factories import CtcInstanceFactory, RunConfigFactory
"""

from .base import BaseFactory, TraitMixin
from .runs import (
    TINY_SECTIONS,
    RunConfigFactory,
    tiny_asr_model,
    tiny_corpus,
    tiny_vocab,
    tiny_vsr_model,
)
from .tensors import CtcInstanceFactory, TensorFactory, random_labels, random_log_probs

__all__ = [
    # Base classes
    "BaseFactory",
    "TraitMixin",
    # Numerical instances
    "CtcInstanceFactory",
    "TensorFactory",
    "random_labels",
    "random_log_probs",
    # Runs
    "TINY_SECTIONS",
    "RunConfigFactory",
    "tiny_asr_model",
    "tiny_corpus",
    "tiny_vocab",
    "tiny_vsr_model",
]
