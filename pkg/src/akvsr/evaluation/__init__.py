"""Evaluation: token error rate, ablation sweeps, retrieval analysis.

Only the WER helpers are re-exported here; ``akvsr.evaluation.ablation`` and
``akvsr.evaluation.analysis`` depend on the training stages, which in turn
use WER.
"""

from akvsr.evaluation.wer import corpus_wer, edit_table, wer

__all__ = [
    "corpus_wer",
    "edit_table",
    "wer",
]
