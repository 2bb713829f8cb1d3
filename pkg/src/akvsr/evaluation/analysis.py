"""What the audio bridging stack retrieves from memory."""

from collections.abc import Sequence

import numpy as np

from akvsr.models.corpus import SyntheticSample
from akvsr.models.results import RetrievalLayerStats, RetrievalReport
from akvsr.quantizer import ClusterModel, quantize
from akvsr.tensor import no_grad
from akvsr.training.models import VsrModel


def retrieval_report(
    model: VsrModel, samples: Sequence[SyntheticSample], cluster_model: ClusterModel
) -> RetrievalReport:
    """Per-layer attention entropy, slot usage and audio agreement.

    Agreement is the fraction of visual frames whose most-attended slot
    (scores averaged over heads) is the cluster of the paired audio frame,
    i.e. audio frame ``2t`` for visual frame ``t``.
    """
    depth = model.abm.depth
    slots = model.memory.num_slots
    entropy_sums = np.zeros(depth)
    usage = np.zeros((depth, slots), dtype=np.int64)
    hits = np.zeros(depth, dtype=np.int64)
    frames = 0
    for sample in samples:
        paired = quantize(cluster_model, sample.audio)[::2]
        with no_grad():
            traced = model.abm.trace(model.visual_features(sample.visual), model.memory)
        frames += len(paired)
        for layer, scores in enumerate(traced):
            attention = scores.mean(axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.where(attention > 0, np.log(attention), 0.0)
            entropy_sums[layer] += float(-(attention * logs).sum())
            chosen = np.argmax(attention, axis=1)
            usage[layer] += np.bincount(chosen, minlength=slots)
            hits[layer] += int((chosen == paired).sum())

    layers = [
        RetrievalLayerStats(
            layer=k,
            mean_entropy=float(entropy_sums[k] / frames) if frames else 0.0,
            slot_usage=usage[k].tolist(),
            agreement=float(hits[k] / frames) if frames else 0.0,
        )
        for k in range(depth)
    ]
    return RetrievalReport(frames=frames, layers=layers)
