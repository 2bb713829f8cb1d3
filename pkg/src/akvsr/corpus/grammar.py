"""Bigram grammar whose context disambiguates viseme-sharing phonemes."""

import numpy as np
from pydantic import BaseModel, Field

from akvsr.errors import ParameterError
from akvsr.models.corpus import PhonemeInventory, Utterance


class BigramGrammar(BaseModel):
    """Uniform transitions over per-phoneme successor sets."""

    successors: list[list[int]] = Field(..., description="Allowed next phonemes")

    def is_allowed(self, prev: int, nxt: int) -> bool:
        """Whether ``prev -> nxt`` is a permitted bigram."""
        return nxt in self.successors[prev]


def build_grammar(inventory: PhonemeInventory, seed: int) -> BigramGrammar:
    """Deal the phoneme set into disjoint successor sets per viseme class.

    Members of one viseme class get pairwise disjoint successor sets, so the
    next phoneme identifies which member was spoken. Singleton classes may
    be followed by anything.
    """
    rng = np.random.default_rng([seed, 1])
    num = inventory.num_phonemes
    successors: list[list[int]] = [list(range(num)) for _ in range(num)]
    for members in inventory.viseme_classes():
        if len(members) < 2:
            continue
        dealt = rng.permutation(num)
        for rank, member in enumerate(members):
            successors[member] = sorted(int(p) for p in dealt[rank :: len(members)])
    return BigramGrammar(successors=successors)


def sample_utterance(
    inventory: PhonemeInventory,
    grammar: BigramGrammar,
    speaker_id: int,
    seed: int,
    min_length: int = 3,
    max_length: int = 12,
) -> Utterance:
    """Draw a transcript of uniform length in ``[min_length, max_length]``.

    Raises:
        ParameterError: if ``speaker_id`` is not a known speaker.
    """
    num_speakers = len(inventory.speaker_directions)
    if not 0 <= speaker_id < max(num_speakers, 1):
        raise ParameterError(f"speaker_id {speaker_id} outside [0, {num_speakers})")
    rng = np.random.default_rng(seed)
    length = int(rng.integers(min_length, max_length + 1))
    current = int(rng.integers(inventory.num_phonemes))
    sequence = [current]
    for _ in range(length - 1):
        options = grammar.successors[current]
        current = int(options[int(rng.integers(len(options)))])
        sequence.append(current)
    return Utterance(
        transcript=[inventory.phonemes[p] for p in sequence],
        speaker_id=speaker_id,
        rng_seed=seed,
    )
