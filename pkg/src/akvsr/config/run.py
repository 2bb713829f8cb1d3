"""Run configuration: every tunable of the corpus, models and training.

All module invariants are enforced here so an invalid configuration never
reaches a training loop. Files may be YAML or JSON; keys are accepted in
snake_case or camelCase.
"""

import math
from pathlib import Path
from typing import Any, Optional

import yaml  # type: ignore[import-untyped]
from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    model_validator,
)
from pydantic.alias_generators import to_camel

from akvsr.config.base import AkvsrSettings
from akvsr.errors import ConfigError


class _Section(BaseModel):
    model_config = ConfigDict(
        alias_generator=to_camel,
        populate_by_name=True,
        extra="forbid",
    )


class CorpusConfig(_Section):
    """Synthetic corpus generator parameters."""

    num_phonemes: int = Field(
        12, ge=2, le=26, validation_alias=AliasChoices("num_phonemes", "numPhonemes", "P")
    )
    num_visemes: int = Field(
        6, ge=2, validation_alias=AliasChoices("num_visemes", "numVisemes", "V")
    )
    num_speakers: int = Field(
        4, ge=1, validation_alias=AliasChoices("num_speakers", "numSpeakers", "S")
    )
    sigma_audio: float = Field(0.1, ge=0.0, description="Audio noise std-dev")
    sigma_visual: float = Field(0.3, ge=0.0, description="Visual noise std-dev")
    speaker_scale: float = Field(0.5, ge=0.0, description="Speaker offset magnitude")
    dur_min: int = Field(2, ge=2, description="Min audio frames per phoneme")
    dur_max: int = Field(5, ge=2, description="Max audio frames per phoneme")
    min_length: int = Field(3, ge=1, description="Min transcript length")
    max_length: int = Field(12, ge=1, description="Max transcript length")
    audio_dim: int = Field(
        32, ge=8, validation_alias=AliasChoices("audio_dim", "audioDim", "d_a")
    )
    visual_dim: int = Field(
        32, ge=8, validation_alias=AliasChoices("visual_dim", "visualDim", "d")
    )
    seed: int = Field(0, ge=0)
    n_train: int = Field(400, ge=1, validation_alias=AliasChoices("n_train", "nTrain"))
    n_test: int = Field(100, ge=1, validation_alias=AliasChoices("n_test", "nTest"))
    single_speaker_n: int = Field(
        100, ge=1, validation_alias=AliasChoices("single_speaker_n", "singleSpeakerN")
    )

    @model_validator(mode="after")
    def _invariants(self) -> "CorpusConfig":
        if self.num_visemes >= self.num_phonemes:
            raise ValueError("ambiguity requires V < P")
        if self.sigma_visual < self.sigma_audio:
            raise ValueError("sigma_visual must be >= sigma_audio")
        if self.dur_max < self.dur_min:
            raise ValueError("dur_max must be >= dur_min")
        if self.max_length < self.min_length:
            raise ValueError("max_length must be >= min_length")
        if self.audio_dim < self.num_phonemes + self.num_speakers:
            raise ValueError("audio_dim must be >= P + S for orthogonal directions")
        if self.visual_dim < self.num_visemes:
            raise ValueError("visual_dim must be >= V")
        return self


class QuantizerConfig(_Section):
    """k-means quantizer parameters."""

    num_clusters: int = Field(
        16, ge=2, validation_alias=AliasChoices("num_clusters", "numClusters", "N")
    )
    max_iter: int = Field(100, ge=1)


class ModelConfig(_Section):
    """Transformer, memory and ABM dimensions."""

    d: int = Field(32, ge=8, description="Model width == memory slot dim")
    heads: int = Field(4, ge=1)
    ff: int = Field(64, ge=1)
    visual_layers: int = Field(2, ge=0)
    context_layers: int = Field(4, ge=0)
    decoder_layers: int = Field(2, ge=1)
    abm_depth: int = Field(2, ge=0, le=8)
    abm_heads: int = Field(4, ge=1)
    d_k: Optional[int] = Field(None, ge=1, description="Defaults to d")
    d_v: Optional[int] = Field(None, ge=1, description="Defaults to d")
    tau: Optional[float] = Field(None, gt=0, description="Defaults to sqrt(d_k/h)")
    ln_eps: float = Field(1e-5, gt=0)
    init_std: float = Field(0.02, gt=0)

    @model_validator(mode="after")
    def _divisibility(self) -> "ModelConfig":
        if self.d % self.heads:
            raise ValueError("d must be divisible by heads")
        if self.key_dim % self.abm_heads or self.value_dim % self.abm_heads:
            raise ValueError("d_k and d_v must be divisible by abm_heads")
        return self

    @property
    def key_dim(self) -> int:
        """Resolved d_k."""
        return self.d_k or self.d

    @property
    def value_dim(self) -> int:
        """Resolved d_v."""
        return self.d_v or self.d

    @property
    def abm_tau(self) -> float:
        """Resolved per-head attention temperature."""
        return self.tau or math.sqrt(self.key_dim / self.abm_heads)


class TrainingConfig(_Section):
    """Optimizer, loss and schedule for both training stages."""

    ctc_weight: float = Field(
        0.1, ge=0.0, le=1.0, validation_alias=AliasChoices("ctc_weight", "ctcWeight", "lambda")
    )
    lr: float = Field(3e-4, gt=0)
    batch_size: int = Field(8, ge=1)
    memory_steps: int = Field(3000, ge=0)
    vsr_steps: int = Field(3000, ge=0)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    log_every: int = Field(10, ge=1)
    eval_every: int = Field(500, ge=1)
    eval_size: int = Field(32, ge=1, description="Held-out slice for step-log WER")
    max_decode_len: int = Field(16, ge=1)
    unfreeze_memory: bool = Field(False, description="Control: train slots in stage 2")
    zero_memory: bool = Field(False, description="Control: all-zero memory slots")
    kd_weight: float = Field(1.0, ge=0.0, description="Weight of the distillation term")


class PathConfig(_Section):
    """Where corpus, checkpoints and reports live."""

    corpus_dir: Path = Field(Path("runs/corpus"))
    run_dir: Path = Field(Path("runs/default"))

    @property
    def quantizer_checkpoint(self) -> Path:
        """Stage-0 output."""
        return self.run_dir / "quantizer.ckpt.json"

    @property
    def memory_checkpoint(self) -> Path:
        """Stage-1 output."""
        return self.run_dir / "memory.ckpt.json"

    @property
    def vsr_checkpoint(self) -> Path:
        """Stage-2 output."""
        return self.run_dir / "vsr.ckpt.json"

    @property
    def baseline_checkpoint(self) -> Path:
        """Stage-2 output of the depth-0 baseline."""
        return self.run_dir / "vsr_baseline.ckpt.json"

    def step_log(self, stage: str) -> Path:
        """JSONL step log of one training stage."""
        return self.run_dir / f"steps_{stage}.jsonl"

    @property
    def report(self) -> Path:
        """Final pipeline report."""
        return self.run_dir / "report.json"


class RunConfig(_Section):
    """Root configuration validated against every module invariant."""

    seed: int = Field(0, ge=0, description="Seeds quantizer, init and shuffling")
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    quantizer: QuantizerConfig = Field(default_factory=QuantizerConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    paths: PathConfig = Field(default_factory=PathConfig)

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "RunConfig":
        """Validate a mapping, converting pydantic errors into ``ConfigError``."""
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError.from_validation_errors(e.errors()) from e

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        """Create a RunConfig from a YAML or JSON file."""
        try:
            with open(path) as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}", ["<file>"]) from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must contain a mapping", ["<root>"])
        return cls.from_mapping(data)

    def with_env_overrides(self, settings: Optional[AkvsrSettings] = None) -> "RunConfig":
        """Apply ``AKVSR_*`` overrides (currently the seed)."""
        settings = settings or AkvsrSettings()
        if settings.seed is None:
            return self
        return self.model_copy(update={"seed": settings.seed})

    def with_updates(self, **sections: Any) -> "RunConfig":
        """Copy with per-section updates (or top-level values), re-validated."""
        data = self.snapshot()
        for section, updates in sections.items():
            if isinstance(data.get(section), dict):
                data[section].update(updates)
            else:
                data[section] = updates
        return RunConfig.from_mapping(data)

    def snapshot(self) -> dict[str, Any]:
        """JSON-compatible dump used in checkpoint metadata."""
        return self.model_dump(mode="json")
