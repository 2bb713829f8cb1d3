"""Directional experiments on the default corpus.

Only the disentanglement check runs by default; the training experiments
take minutes each and are marked ``slow`` (run with ``-m slow``).
"""

import numpy as np
import pytest

from akvsr.config import RunConfig
from akvsr.corpus import build_corpus
from akvsr.evaluation.ablation import assess_abm_benefit, fit_quantizer
from akvsr.models.base.types import Split
from akvsr.quantizer import fit_kmeans, purity_and_leakage
from akvsr.training import train_memory_asr


def _default_corpus(config: RunConfig):
    c = config.corpus
    return build_corpus(c, c.n_train, c.n_test, c.single_speaker_n)


@pytest.fixture(scope="module")
def default_config() -> RunConfig:
    return RunConfig()


@pytest.mark.integration
class TestDisentanglement:
    def test_clusters_track_phonemes_not_speakers(self, default_config):
        c = default_config.corpus
        corpus = build_corpus(c, 1, c.n_test, c.single_speaker_n)
        frames = np.concatenate([s.audio for s in corpus[Split.QUANTFIT]])
        model = fit_kmeans(frames, 2 * c.num_phonemes, seed=0)
        report = purity_and_leakage(model, corpus[Split.TEST])
        assert report.phoneme_purity >= 0.9
        assert report.speaker_nmi <= 0.1


@pytest.mark.integration
@pytest.mark.slow
class TestTrainingExperiments:
    def test_noiseless_asr_converges(self, default_config):
        p = default_config.corpus.num_phonemes
        config = default_config.with_updates(
            corpus={"sigma_audio": 0.0},
            quantizer={"num_clusters": p},
            training={"memory_steps": 2000},
        )
        corpus = _default_corpus(config)
        _, report = train_memory_asr(corpus, fit_quantizer(corpus, config, 0), config)
        assert report.eval_wer <= 0.02

    def test_more_clusters_lower_asr_wer(self, default_config):
        p = default_config.corpus.num_phonemes
        corpus = _default_corpus(default_config)
        wers = {}
        for n in (p // 2, 2 * p):
            config = default_config.with_updates(
                quantizer={"num_clusters": n}, training={"memory_steps": 2000}
            )
            _, report = train_memory_asr(corpus, fit_quantizer(corpus, config, 0), config)
            wers[n] = report.eval_wer
        assert wers[2 * p] < wers[p // 2]

    def test_abm_benefit_is_reported(self, default_config):
        report = assess_abm_benefit(_default_corpus(default_config), default_config, depth=2)
        assert report.seeds == [0, 1, 2]
        # a negative finding is a valid outcome as long as every number is kept
        assert report.finding in {"supported", "negative"}
        for summary in (report.baseline, report.abm, report.zero_memory):
            assert summary.seeds == 3 and np.isfinite(summary.mean_wer)
