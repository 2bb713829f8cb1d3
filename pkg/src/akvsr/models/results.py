"""Result and report models produced by checks, training and evaluation."""

import math
from typing import Optional

from pydantic import BaseModel, Field, model_validator

from akvsr.models.base.types import AblationAxis


class GradCheckEntry(BaseModel):
    """Finite-difference comparison for one parameter tensor."""

    name: str = Field(..., description="Parameter name")
    max_rel_error: float = Field(..., description="Max |a-n|/max(1,|a|,|n|)")
    worst_index: list[int] = Field(default_factory=list, description="Argmax location")
    passed: bool = Field(..., description="max_rel_error <= tol and no NaN")
    nan_location: Optional[list[int]] = Field(None, description="First NaN, if any")


class GradCheckReport(BaseModel):
    """Gradient check outcome for one scalar function."""

    label: str = Field("", description="What was checked")
    tol: float = Field(..., gt=0, description="Relative tolerance")
    step: float = Field(..., gt=0, description="Central-difference step h")
    entries: list[GradCheckEntry] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when every parameter passed."""
        return all(e.passed for e in self.entries)

    @property
    def max_rel_error(self) -> float:
        """Worst error across parameters (NaN if any entry is NaN)."""
        if not self.entries:
            return 0.0
        errors = [e.max_rel_error for e in self.entries]
        if any(math.isnan(e) for e in errors):
            return float("nan")
        return max(errors)


class GradCheckSummary(BaseModel):
    """Outcome of the whole gradient suite."""

    reports: list[GradCheckReport] = Field(default_factory=list)
    injected_sign_flip: Optional[str] = Field(None, description="Mutated op, if any")

    @property
    def passed(self) -> bool:
        """True when every check passed."""
        return all(r.passed for r in self.reports)

    @property
    def failures(self) -> list[str]:
        """Labels of the failed checks."""
        return [r.label for r in self.reports if not r.passed]


class WerReport(BaseModel):
    """Edit-operation counts of a hypothesis against a reference."""

    substitutions: int = Field(0, ge=0)
    insertions: int = Field(0, ge=0)
    deletions: int = Field(0, ge=0)
    reference_length: int = Field(..., gt=0)

    @property
    def errors(self) -> int:
        """Total edit count S + I + D."""
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        """(S + I + D) / reference length."""
        return self.errors / self.reference_length

    def __add__(self, other: "WerReport") -> "WerReport":
        """Corpus-level aggregation."""
        return WerReport(
            substitutions=self.substitutions + other.substitutions,
            insertions=self.insertions + other.insertions,
            deletions=self.deletions + other.deletions,
            reference_length=self.reference_length + other.reference_length,
        )


class DisentanglementReport(BaseModel):
    """How well clusters track phonemes and ignore speakers."""

    phoneme_purity: float = Field(..., ge=0.0, le=1.0)
    speaker_nmi: float = Field(..., ge=0.0, le=1.0)
    frames: int = Field(..., gt=0)


class TrainReport(BaseModel):
    """Summary of one training stage."""

    stage: str
    steps: int = Field(..., ge=0)
    losses: list[float] = Field(default_factory=list)
    dropped_elements: int = Field(0, ge=0, description="Infeasible-CTC drops")
    eval_wer: Optional[float] = Field(None, ge=0.0)

    @property
    def final_loss(self) -> Optional[float]:
        """Last recorded loss."""
        return self.losses[-1] if self.losses else None


class AblationRow(BaseModel):
    """One (value, seed) run of an ablation sweep."""

    axis_value: int
    seed: int
    wer: float = Field(..., ge=0.0)
    asr_wer: Optional[float] = Field(None, ge=0.0)
    purity: Optional[float] = Field(None, ge=0.0, le=1.0)
    speaker_nmi: Optional[float] = Field(None, ge=0.0, le=1.0)


class AblationSummary(BaseModel):
    """Mean and std of WER over seeds for one axis value."""

    axis_value: int
    mean_wer: float
    std_wer: float
    seeds: int


class AblationResult(BaseModel):
    """All runs of a sweep plus per-value aggregation."""

    axis: AblationAxis
    values: list[int] = Field(..., min_length=2)
    seeds: list[int] = Field(..., min_length=3)
    rows: list[AblationRow] = Field(default_factory=list)

    @model_validator(mode="after")
    def _rows_cover_grid(self) -> "AblationResult":
        if self.rows and len(self.rows) != len(self.values) * len(self.seeds):
            raise ValueError("rows must cover every (value, seed) pair")
        return self

    def summary(self) -> list[AblationSummary]:
        """Per-value mean and (population) std of WER."""
        out = []
        for value in self.values:
            wers = [r.wer for r in self.rows if r.axis_value == value]
            mu = sum(wers) / len(wers)
            std = math.sqrt(sum((w - mu) ** 2 for w in wers) / len(wers))
            out.append(
                AblationSummary(
                    axis_value=value, mean_wer=mu, std_wer=std, seeds=len(wers)
                )
            )
        return out


class AbmBenefitReport(BaseModel):
    """Directional comparison of ABM against baseline and zero-memory control."""

    depth: int = Field(..., ge=1)
    seeds: list[int]
    baseline: AblationSummary
    abm: AblationSummary
    zero_memory: AblationSummary
    kd_logit: Optional[AblationSummary] = Field(
        None, description="No-ABM model distilled from ASR CTC posteriors"
    )
    kd_feature: Optional[AblationSummary] = Field(
        None, description="No-ABM model distilled from ASR context features"
    )
    abm_not_worse_than_baseline: bool
    abm_beats_zero_memory: bool
    abm_not_worse_than_distillation: Optional[bool] = None

    @property
    def finding(self) -> str:
        """``supported`` when both directional checks hold, else ``negative``."""
        if self.abm_not_worse_than_baseline and self.abm_beats_zero_memory:
            return "supported"
        return "negative"


class RetrievalLayerStats(BaseModel):
    """Attention statistics of one ABM layer over a split."""

    layer: int
    mean_entropy: float = Field(..., ge=0.0)
    slot_usage: list[int]
    agreement: float = Field(..., ge=0.0, le=1.0)


class RetrievalReport(BaseModel):
    """Which memory slots the ABM retrieves for visual frames."""

    frames: int = Field(..., ge=0)
    layers: list[RetrievalLayerStats] = Field(default_factory=list)

    @property
    def agreement(self) -> Optional[float]:
        """Agreement of the last layer (the one feeding the decoder)."""
        return self.layers[-1].agreement if self.layers else None


class PipelineReport(BaseModel):
    """Final report of the end-to-end pipeline command."""

    asr_wer: Optional[float] = None
    vsr_wer_baseline: Optional[float] = None
    vsr_wer_abm: Optional[float] = None
    purity: Optional[float] = None
    speaker_nmi: Optional[float] = None
    retrieval_agreement: Optional[float] = None
