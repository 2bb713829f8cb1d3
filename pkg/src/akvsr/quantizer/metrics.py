"""Disentanglement metrics: phoneme purity and speaker leakage of clusters."""

from collections.abc import Sequence

import numpy as np

from akvsr.errors import DataError
from akvsr.models.corpus import SyntheticSample
from akvsr.models.results import DisentanglementReport
from akvsr.quantizer.kmeans import ClusterModel, quantize


def contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Joint count table of two integer labelings."""
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def purity(clusters: np.ndarray, classes: np.ndarray) -> float:
    """Fraction of items whose cluster's majority class matches their class."""
    if clusters.size == 0:
        raise DataError("purity of an empty labeling")
    return float(contingency(clusters, classes).max(axis=1).sum() / clusters.size)


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def normalized_mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """Mutual information normalized by the arithmetic mean of entropies."""
    if a.size == 0:
        raise DataError("NMI of an empty labeling")
    table = contingency(a, b)
    if table.shape[0] == table.shape[1] == 1:
        return 1.0
    joint = table / table.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])).sum())
    if mi <= 0:
        return 0.0
    denom = 0.5 * (_entropy(table.sum(axis=1)) + _entropy(table.sum(axis=0)))
    return float(min(1.0, mi / denom))


def purity_and_leakage(
    model: ClusterModel, samples: Sequence[SyntheticSample]
) -> DisentanglementReport:
    """Phoneme purity and speaker NMI of the quantizer over a split.

    Raises:
        DataError: if the split holds no frames.
    """
    if not samples:
        raise DataError("purity_and_leakage needs a non-empty split")
    labels = np.concatenate([quantize(model, s.audio) for s in samples])
    phonemes = np.concatenate([np.asarray(s.align) for s in samples])
    speakers = np.concatenate([np.full(len(s.align), s.speaker) for s in samples])
    return DisentanglementReport(
        phoneme_purity=purity(labels, phonemes),
        speaker_nmi=normalized_mutual_information(labels, speakers),
        frames=int(labels.size),
    )
