"""Synthetic corpus records."""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PhonemeInventory(BaseModel):
    """Phoneme and viseme symbols with their embedding directions."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    phonemes: list[str] = Field(..., min_length=2, description="Ordered symbols")
    viseme_of: list[int] = Field(..., description="Viseme index per phoneme")
    num_visemes: int = Field(..., ge=1)
    phoneme_embeddings: np.ndarray = Field(..., description="[P x d_a] orthonormal rows")
    viseme_embeddings: np.ndarray = Field(..., description="[V x d] orthonormal rows")
    speaker_directions: np.ndarray = Field(
        ..., description="[S x d_a] unit rows orthogonal to the phoneme span"
    )

    @model_validator(mode="after")
    def _surjective(self) -> "PhonemeInventory":
        if len(self.viseme_of) != len(self.phonemes):
            raise ValueError("viseme_of must map every phoneme")
        if sorted(set(self.viseme_of)) != list(range(self.num_visemes)):
            raise ValueError("viseme_of must be surjective onto the visemes")
        return self

    @property
    def num_phonemes(self) -> int:
        """P."""
        return len(self.phonemes)

    def viseme_classes(self) -> list[list[int]]:
        """Phoneme indices grouped by viseme."""
        classes: list[list[int]] = [[] for _ in range(self.num_visemes)]
        for p, v in enumerate(self.viseme_of):
            classes[v].append(p)
        return classes

    def index_of(self, symbol: str) -> int:
        """Phoneme index of ``symbol``."""
        return self.phonemes.index(symbol)


class Utterance(BaseModel):
    """Phoneme transcript with speaker and nuisance seed."""

    transcript: list[str] = Field(..., min_length=1)
    speaker_id: int = Field(..., ge=0)
    rng_seed: int = Field(..., ge=0)


class SyntheticSample(BaseModel):
    """Paired audio/visual feature sequences of one utterance."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    id: str
    utterance: Utterance
    audio: np.ndarray = Field(..., description="[T_a x d_a]")
    visual: np.ndarray = Field(..., description="[T_v x d_visual]")
    align: list[int] = Field(..., description="Phoneme index per audio frame")

    @field_validator("audio", "visual", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=np.float64)

    @model_validator(mode="after")
    def _frame_ratio(self) -> "SyntheticSample":
        if self.audio.shape[0] != 2 * self.visual.shape[0]:
            raise ValueError("audio must have exactly twice the visual frames")
        if len(self.align) != self.audio.shape[0]:
            raise ValueError("align must label every audio frame")
        return self

    @property
    def speaker(self) -> int:
        """Speaker id of the utterance."""
        return self.utterance.speaker_id

    @property
    def visual_align(self) -> list[int]:
        """Phoneme index per visual frame (first of its two audio frames)."""
        return self.align[::2]

    def to_record(self) -> dict[str, Any]:
        """JSONL record layout."""
        return {
            "id": self.id,
            "speaker": self.utterance.speaker_id,
            "seed": self.utterance.rng_seed,
            "transcript": list(self.utterance.transcript),
            "audio": self.audio.tolist(),
            "visual": self.visual.tolist(),
            "align": list(self.align),
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "SyntheticSample":
        """Inverse of :meth:`to_record`."""
        utterance = Utterance(
            transcript=record["transcript"],
            speaker_id=record["speaker"],
            rng_seed=record.get("seed", 0),
        )
        return cls(
            id=record["id"],
            utterance=utterance,
            audio=record["audio"],
            visual=record["visual"],
            align=record["align"],
        )
