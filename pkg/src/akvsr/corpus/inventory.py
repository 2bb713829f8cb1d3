"""Phoneme/viseme inventories with orthonormal embedding directions."""

import string

import numpy as np

from akvsr.errors import ConfigError
from akvsr.models.corpus import PhonemeInventory


def orthonormal_rows(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` mutually orthogonal unit vectors in ``dim``-space."""
    if count > dim:
        raise ConfigError(f"cannot place {count} orthogonal vectors in {dim} dims")
    q, r = np.linalg.qr(rng.standard_normal((dim, count)))
    # fix QR's sign ambiguity so the basis is a pure function of the draw
    q = q * np.sign(np.diag(r))
    return q.T.copy()


def make_inventory(
    num_phonemes: int,
    num_visemes: int,
    seed: int,
    audio_dim: int = 32,
    visual_dim: int = 32,
    num_speakers: int = 0,
) -> PhonemeInventory:
    """Build a deterministic inventory with a balanced viseme assignment.

    Phonemes are shuffled by ``seed`` and dealt round-robin onto visemes,
    so class sizes differ by at most one and every viseme is used. Speaker
    directions live in the orthogonal complement of the phoneme span.

    Raises:
        ConfigError: if ``V >= P`` or the dimensions cannot hold the bases.
    """
    if num_visemes >= num_phonemes:
        raise ConfigError("ambiguity requires V < P", ["num_visemes"])
    if not 1 <= num_visemes or not 2 <= num_phonemes <= 26:
        raise ConfigError("need 1 <= V < P <= 26", ["num_phonemes", "num_visemes"])
    if audio_dim < num_phonemes + num_speakers:
        raise ConfigError("audio_dim must be >= P + S", ["audio_dim"])

    rng = np.random.default_rng(seed)
    order = rng.permutation(num_phonemes)
    viseme_of = [0] * num_phonemes
    for slot, phoneme in enumerate(order):
        viseme_of[int(phoneme)] = slot % num_visemes

    audio_basis = orthonormal_rows(num_phonemes + num_speakers, audio_dim, rng)
    return PhonemeInventory(
        phonemes=list(string.ascii_lowercase[:num_phonemes]),
        viseme_of=viseme_of,
        num_visemes=num_visemes,
        phoneme_embeddings=audio_basis[:num_phonemes],
        viseme_embeddings=orthonormal_rows(num_visemes, visual_dim, rng),
        speaker_directions=audio_basis[num_phonemes:],
    )
