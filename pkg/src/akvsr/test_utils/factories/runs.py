"""Tiny run configurations, corpora and models for fast tests."""

from typing import Any

from akvsr.config.run import RunConfig
from akvsr.corpus import Corpus, build_corpus
from akvsr.nn import CompactAudioMemory, Vocab, init_memory
from akvsr.training.models import AsrModel, VsrModel

from .base import BaseFactory, TraitMixin

TINY_SECTIONS: dict[str, dict[str, Any]] = {
    "corpus": {
        "num_phonemes": 6,
        "num_visemes": 3,
        "num_speakers": 2,
        "audio_dim": 8,
        "visual_dim": 8,
        "min_length": 2,
        "max_length": 4,
        "dur_min": 2,
        "dur_max": 3,
        "n_train": 12,
        "n_test": 6,
        "single_speaker_n": 8,
    },
    "quantizer": {"num_clusters": 6, "max_iter": 20},
    "model": {
        "d": 8,
        "heads": 2,
        "ff": 16,
        "visual_layers": 1,
        "context_layers": 1,
        "decoder_layers": 1,
        "abm_depth": 1,
        "abm_heads": 2,
    },
    "training": {
        "batch_size": 4,
        "memory_steps": 3,
        "vsr_steps": 3,
        "seeds": [0, 1, 2],
        "log_every": 1,
        "eval_every": 3,
        "eval_size": 4,
        "max_decode_len": 6,
        "lr": 1e-3,
    },
}


class RunConfigFactory(BaseFactory, TraitMixin):
    """Run configurations; the ``tiny`` trait runs every stage in seconds."""

    _model = RunConfig

    @classmethod
    def create(cls, **sections: Any) -> RunConfig:
        """Validated config from per-section overrides."""
        return RunConfig.from_mapping(sections)

    @classmethod
    def trait_tiny(cls) -> dict[str, Any]:
        """Smallest dimensions every module accepts."""
        return {name: dict(values) for name, values in TINY_SECTIONS.items()}

    @classmethod
    def tiny(cls, run_dir: Any = None, **overrides: dict[str, Any]) -> RunConfig:
        """Tiny config, optionally rooted at ``run_dir``, with section overrides."""
        data = cls.traits("tiny")
        for section, values in overrides.items():
            data.setdefault(section, {}).update(values)
        if run_dir is not None:
            data["paths"] = {
                "run_dir": str(run_dir),
                "corpus_dir": str(run_dir / "corpus"),
                **data.get("paths", {}),
            }
        return RunConfig.from_mapping(data)


def tiny_corpus(config: RunConfig) -> Corpus:
    """In-memory corpus with the config's split sizes."""
    c = config.corpus
    return build_corpus(c, c.n_train, c.n_test, c.single_speaker_n)


def tiny_vocab(num_phonemes: int = 3) -> Vocab:
    """Vocabulary over the symbols ``p0 .. p{n-1}``."""
    return Vocab(phonemes=[f"p{i}" for i in range(num_phonemes)])


def tiny_asr_model(config: RunConfig, vocab: Vocab, seed: int = 0) -> AsrModel:
    """Stage-1 model around a fresh trainable memory."""
    memory = init_memory(config.quantizer.num_clusters, config.model.d, seed)
    return AsrModel(config.model, vocab, memory, seed)


def tiny_vsr_model(
    config: RunConfig,
    vocab: Vocab,
    memory: CompactAudioMemory | None = None,
    depth: int | None = None,
    seed: int = 0,
) -> VsrModel:
    """Stage-2 model over a frozen memory (fresh unless given)."""
    if memory is None:
        memory = init_memory(config.quantizer.num_clusters, config.model.d, seed).freeze()
    depth = config.model.abm_depth if depth is None else depth
    return VsrModel(config.model, vocab, config.corpus.visual_dim, memory, depth, seed)
