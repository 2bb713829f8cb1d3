"""Corpus generation and JSONL split storage."""

import json
from collections.abc import Callable, Iterable
from pathlib import Path
from typing import Optional

import numpy as np

from akvsr.config.run import CorpusConfig
from akvsr.corpus.grammar import BigramGrammar, build_grammar, sample_utterance
from akvsr.corpus.inventory import make_inventory
from akvsr.corpus.render import render
from akvsr.errors import CorpusFileError, DataError
from akvsr.models.base.types import Split
from akvsr.models.corpus import PhonemeInventory, SyntheticSample
from akvsr.utils import atomic_write_text, get_logger

logger = get_logger(__name__)

META_FILE = "corpus.json"
# bound on redraws when looking for a test transcript unseen in train
_MAX_REDRAWS = 1000


def inventory_for(config: CorpusConfig) -> PhonemeInventory:
    """The inventory a corpus config deterministically implies."""
    return make_inventory(
        config.num_phonemes,
        config.num_visemes,
        config.seed,
        audio_dim=config.audio_dim,
        visual_dim=config.visual_dim,
        num_speakers=config.num_speakers,
    )


class Corpus:
    """A generated corpus: its config, inventory, grammar and splits."""

    def __init__(
        self,
        config: CorpusConfig,
        splits: dict[Split, list[SyntheticSample]],
        inventory: Optional[PhonemeInventory] = None,
    ) -> None:
        """Bundle splits with the structures they were rendered from."""
        self.config = config
        self.inventory = inventory or inventory_for(config)
        self.grammar: BigramGrammar = build_grammar(self.inventory, config.seed)
        self.splits = splits

    def __getitem__(self, split: Split | str) -> list[SyntheticSample]:
        """Samples of one split."""
        return self.splits[Split(split)]

    @property
    def phonemes(self) -> list[str]:
        """Phoneme symbols in vocabulary order."""
        return list(self.inventory.phonemes)


def build_corpus(
    config: CorpusConfig,
    n_train: int,
    n_test: int,
    single_speaker_n: int,
) -> Corpus:
    """Render the train, test and quantfit splits in memory.

    Raises:
        DataError: if any count is below one.
    """
    for name, count in (
        ("n_train", n_train),
        ("n_test", n_test),
        ("single_speaker_n", single_speaker_n),
    ):
        if count < 1:
            raise DataError(f"{name} must be >= 1, got {count}")

    inventory = inventory_for(config)
    grammar = build_grammar(inventory, config.seed)
    seeds = np.random.default_rng([config.seed, 2])
    speakers = config.num_speakers

    def draw(
        split: Split,
        count: int,
        speaker_of: Callable[[int], int],
        exclude: set[tuple[str, ...]],
    ) -> list[SyntheticSample]:
        samples = []
        for i in range(count):
            for _ in range(_MAX_REDRAWS):
                seed = int(seeds.integers(0, 2**31 - 1))
                utterance = sample_utterance(
                    inventory,
                    grammar,
                    speaker_of(i),
                    seed,
                    config.min_length,
                    config.max_length,
                )
                if tuple(utterance.transcript) not in exclude:
                    break
            else:
                logger.warning(
                    f"{split.value} sample {i}: no unseen transcript after "
                    f"{_MAX_REDRAWS} draws, keeping {' '.join(utterance.transcript)!r}"
                )
            sample_id = f"{split.value}-{i:05d}"
            samples.append(render(utterance, inventory, config, sample_id))
        return samples

    train = draw(Split.TRAIN, n_train, lambda i: i % speakers, set())
    seen = {tuple(s.utterance.transcript) for s in train}
    test = draw(Split.TEST, n_test, lambda i: i % speakers, seen)
    quantfit = draw(Split.QUANTFIT, single_speaker_n, lambda i: 0, set())
    return Corpus(
        config,
        {Split.TRAIN: train, Split.TEST: test, Split.QUANTFIT: quantfit},
        inventory,
    )


def write_split(path: Path, samples: Iterable[SyntheticSample]) -> int:
    """Write samples as JSONL, atomically; returns the line count."""
    lines = [json.dumps(sample.to_record()) + "\n" for sample in samples]
    try:
        atomic_write_text(path, "".join(lines))
    except OSError as e:
        raise CorpusFileError(path, str(e)) from e
    return len(lines)


def read_split(path: Path) -> list[SyntheticSample]:
    """Read a JSONL split."""
    try:
        with open(path) as handle:
            return [
                SyntheticSample.from_record(json.loads(line))
                for line in handle
                if line.strip()
            ]
    except OSError as e:
        raise CorpusFileError(path, str(e)) from e
    except (ValueError, KeyError) as e:
        raise CorpusFileError(path, f"malformed record: {e}") from e


def generate_corpus(
    config: CorpusConfig,
    out_dir: Path,
    n_train: Optional[int] = None,
    n_test: Optional[int] = None,
    single_speaker_n: Optional[int] = None,
) -> dict[Split, Path]:
    """Generate and write all splits plus ``corpus.json`` metadata."""
    corpus = build_corpus(
        config,
        config.n_train if n_train is None else n_train,
        config.n_test if n_test is None else n_test,
        config.single_speaker_n if single_speaker_n is None else single_speaker_n,
    )
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / META_FILE).write_text(
            json.dumps({"config": config.model_dump(mode="json")}, indent=2, sort_keys=True)
        )
    except OSError as e:
        raise CorpusFileError(out_dir / META_FILE, str(e)) from e

    paths = {}
    for split, samples in corpus.splits.items():
        path = out_dir / f"{split.value}.jsonl"
        lines = write_split(path, samples)
        logger.info(f"Wrote {lines} samples to {path}")
        paths[split] = path
    return paths


def load_corpus(corpus_dir: Path) -> Corpus:
    """Load a corpus written by :func:`generate_corpus`."""
    corpus_dir = Path(corpus_dir)
    meta_path = corpus_dir / META_FILE
    try:
        meta = json.loads(meta_path.read_text())
    except (OSError, ValueError) as e:
        raise CorpusFileError(meta_path, str(e)) from e
    config = CorpusConfig.model_validate(meta["config"])
    splits = {split: read_split(corpus_dir / f"{split.value}.jsonl") for split in Split}
    return Corpus(config, splits)
