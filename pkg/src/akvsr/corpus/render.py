"""Render utterances into paired audio/visual feature sequences."""

import numpy as np

from akvsr.config.run import CorpusConfig
from akvsr.models.corpus import PhonemeInventory, SyntheticSample, Utterance


def render(
    utterance: Utterance,
    inventory: PhonemeInventory,
    config: CorpusConfig,
    sample_id: str = "",
) -> SyntheticSample:
    """Render one utterance.

    Audio frames carry the phoneme embedding, a speaker offset and isotropic
    noise; visual frames carry only the viseme embedding plus noise. Each
    phoneme spans ``[dur_min, dur_max]`` audio frames and the total is padded
    to an even count so that T_a = 2 * T_v.
    """
    rng = np.random.default_rng([config.seed, utterance.rng_seed])
    phonemes = [inventory.index_of(s) for s in utterance.transcript]
    durations = rng.integers(config.dur_min, config.dur_max + 1, size=len(phonemes))
    if durations.sum() % 2:
        durations[-1] += 1
    align = np.repeat(np.asarray(phonemes, dtype=np.int64), durations)
    frames_audio = int(align.shape[0])
    frames_visual = frames_audio // 2

    audio = inventory.phoneme_embeddings[align].copy()
    if len(inventory.speaker_directions):
        audio += config.speaker_scale * inventory.speaker_directions[utterance.speaker_id]
    audio += config.sigma_audio * rng.standard_normal((frames_audio, config.audio_dim))

    visemes = np.asarray(inventory.viseme_of, dtype=np.int64)[align[::2]]
    visual = inventory.viseme_embeddings[visemes].copy()
    visual += config.sigma_visual * rng.standard_normal((frames_visual, config.visual_dim))

    return SyntheticSample(
        id=sample_id,
        utterance=utterance,
        audio=audio,
        visual=visual,
        align=[int(p) for p in align],
    )
