"""End-to-end orchestration: quantizer, memory stage, VSR stage, evaluation.

Every stage reads its inputs from and writes its outputs to checkpoints under
``paths.run_dir``, so the CLI can run stages one at a time or all at once.
"""

import json
from collections.abc import Callable
from pathlib import Path
from typing import Any, Optional, TypeVar

from akvsr.config.run import RunConfig
from akvsr.corpus.io import Corpus, load_corpus
from akvsr.errors import CheckpointIntegrityError, ConfigError, StageError
from akvsr.evaluation.ablation import fit_quantizer
from akvsr.evaluation.analysis import retrieval_report
from akvsr.models.base.types import Split
from akvsr.models.results import DisentanglementReport, PipelineReport, TrainReport
from akvsr.nn import CompactAudioMemory
from akvsr.quantizer import ClusterModel, purity_and_leakage
from akvsr.services.artifacts import (
    load_memory,
    load_quantizer,
    load_vsr,
    save_memory_stage,
    save_quantizer,
    save_vsr,
)
from akvsr.training.base import BaseComponent
from akvsr.training.models import AsrModel, VsrModel
from akvsr.training.stages import evaluate_wer, train_memory_asr, train_vsr, vsr_examples
from akvsr.utils import atomic_write_text

T = TypeVar("T")


class Pipeline(BaseComponent):
    """Runs the stages of one configured experiment."""

    def __init__(self, config: RunConfig) -> None:
        """Bind a validated configuration."""
        super().__init__()
        self.config = config
        self.paths = config.paths
        self._corpus: Optional[Corpus] = None

    def _stage(self, name: str, fn: Callable[..., T], *args: Any, **kwargs: Any) -> T:
        """Run ``fn`` as stage ``name``; failures become ``StageError``.

        Configuration and checkpoint-integrity errors keep their own type
        (and exit code).
        """
        self._log_execution_start(name)
        try:
            result = fn(*args, **kwargs)
        except (ConfigError, CheckpointIntegrityError, StageError):
            self._log_execution_end(name, success=False)
            raise
        except Exception as e:
            self._log_execution_end(name, success=False, error=e)
            raise StageError(name, e) from e
        self._log_execution_end(name)
        return result

    @property
    def corpus(self) -> Corpus:
        """The corpus under ``paths.corpus_dir`` (loaded once)."""
        if self._corpus is None:
            self._corpus = self._stage("load-corpus", load_corpus, self.paths.corpus_dir)
        return self._corpus

    # -- stages ------------------------------------------------------------

    def fit_quantizer(self) -> tuple[ClusterModel, DisentanglementReport]:
        """Stage 0: fit on the single-speaker split; score on the test split."""

        def stage() -> tuple[ClusterModel, DisentanglementReport]:
            model = fit_quantizer(self.corpus, self.config, self.config.seed)
            save_quantizer(self.paths.quantizer_checkpoint, model, self.config)
            return model, purity_and_leakage(model, self.corpus[Split.TEST])

        return self._stage("fit-quantizer", stage)

    def train_memory(
        self, cluster_model: Optional[ClusterModel] = None
    ) -> tuple[AsrModel, TrainReport]:
        """Stage 1: memory ASR; the quantizer is read from disk if not given."""

        def stage() -> tuple[AsrModel, TrainReport]:
            quantizer = cluster_model or load_quantizer(self.paths.quantizer_checkpoint)
            model, report = train_memory_asr(
                self.corpus,
                quantizer,
                self.config,
                step_log=self.paths.step_log("memory"),
            )
            save_memory_stage(
                self.paths.memory_checkpoint, model, self.config, asr_wer=report.eval_wer
            )
            return model, report

        return self._stage("train-memory", stage)

    def train_vsr(
        self,
        depth: Optional[int] = None,
        memory: Optional[CompactAudioMemory] = None,
    ) -> tuple[VsrModel, TrainReport]:
        """Stage 2 at ``depth`` (default: configured ABM depth).

        Depth 0 needs no trained memory; a zero placeholder fills the slot.
        """
        depth = self.config.model.abm_depth if depth is None else depth
        checkpoint = (
            self.paths.vsr_checkpoint if depth else self.paths.baseline_checkpoint
        )

        def stage() -> tuple[VsrModel, TrainReport]:
            if memory is not None:
                source = memory
            elif depth:
                source = load_memory(self.paths.memory_checkpoint)
            else:
                source = CompactAudioMemory.zeros(
                    self.config.quantizer.num_clusters, self.config.model.d
                )
            model, report = train_vsr(
                self.corpus,
                source,
                depth,
                self.config,
                step_log=self.paths.step_log(f"vsr_depth{depth}"),
            )
            save_vsr(checkpoint, model, self.config, test_wer=report.eval_wer)
            return model, report

        return self._stage(f"train-vsr(depth={depth})", stage)

    def evaluate(self, checkpoint: Optional[Path] = None) -> dict[str, Any]:
        """Test WER of a stored VSR model plus its retrieval statistics."""

        def stage() -> dict[str, Any]:
            model = load_vsr(checkpoint or self.paths.vsr_checkpoint)
            test = self.corpus[Split.TEST]
            result: dict[str, Any] = {
                "abm_depth": model.abm.depth,
                "wer": evaluate_wer(
                    model,
                    vsr_examples(test, model.decoder.vocab),
                    self.config.training.max_decode_len,
                ),
            }
            if model.abm.depth and self.paths.quantizer_checkpoint.exists():
                quantizer = load_quantizer(self.paths.quantizer_checkpoint)
                retrieval = retrieval_report(model, test, quantizer)
                result["retrieval"] = retrieval.model_dump()
                result["retrieval_agreement"] = retrieval.agreement
            return result

        return self._stage("eval", stage)

    # -- end to end --------------------------------------------------------

    def run(self, include_baseline: bool = False) -> PipelineReport:
        """All stages in order; writes ``paths.report`` and returns it.

        With ABM depth 0 the quantizer and memory stages are skipped.
        """
        depth = self.config.model.abm_depth
        self._log_execution_start("pipeline", depth=depth, baseline=include_baseline)
        report = PipelineReport()
        if depth:
            cluster_model, disentanglement = self.fit_quantizer()
            asr_model, asr_report = self.train_memory(cluster_model)
            self.train_vsr(depth, asr_model.memory)
            evaluation = self.evaluate(self.paths.vsr_checkpoint)
            report = report.model_copy(
                update={
                    "asr_wer": asr_report.eval_wer,
                    "vsr_wer_abm": evaluation["wer"],
                    "purity": disentanglement.phoneme_purity,
                    "speaker_nmi": disentanglement.speaker_nmi,
                    "retrieval_agreement": evaluation.get("retrieval_agreement"),
                }
            )
        if include_baseline or not depth:
            self.train_vsr(0)
            baseline = self.evaluate(self.paths.baseline_checkpoint)
            report = report.model_copy(update={"vsr_wer_baseline": baseline["wer"]})

        atomic_write_text(
            self.paths.report,
            json.dumps(report.model_dump(), indent=2, sort_keys=True) + "\n",
        )
        self._log_execution_end("pipeline", report=self.paths.report)
        return report
