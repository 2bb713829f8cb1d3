"""The two training stages.

Stage 1 trains the compact audio memory by speech recognition from
quantized audio. Stage 2 trains the visual recognizer, reading the frozen
memory through the audio bridging stack.
"""

from collections.abc import Sequence
from pathlib import Path
from typing import Any, Optional

import numpy as np

from akvsr.config.run import RunConfig
from akvsr.corpus.io import Corpus
from akvsr.errors import ConfigError, InfeasibleCtcError
from akvsr.evaluation.wer import corpus_wer
from akvsr.models.base.types import DistillationMode, LogLevel, Split
from akvsr.models.corpus import SyntheticSample
from akvsr.models.results import TrainReport
from akvsr.nn import CompactAudioMemory, Vocab, init_memory
from akvsr.quantizer import ClusterModel, quantize
from akvsr.tensor import Tensor, backward, no_grad
from akvsr.tensor import ops
from akvsr.training.base import BaseComponent
from akvsr.training.models import (
    AsrModel,
    DistilledVsrModel,
    Example,
    Recognizer,
    VsrModel,
)
from akvsr.training.optim import Adam
from akvsr.utils import JsonlEventSink, logging_service

STEP_EVENT = "train_step"


def vocab_for(corpus: Corpus) -> Vocab:
    """Phoneme-level vocabulary of a corpus."""
    return Vocab(phonemes=corpus.phonemes)


def asr_examples(
    samples: Sequence[SyntheticSample], cluster_model: ClusterModel, vocab: Vocab
) -> list[Example]:
    """Quantized audio label sequences paired with transcript tokens."""
    return [
        Example(s.id, quantize(cluster_model, s.audio), vocab.encode(s.utterance.transcript))
        for s in samples
    ]


def vsr_examples(samples: Sequence[SyntheticSample], vocab: Vocab) -> list[Example]:
    """Visual feature sequences paired with transcript tokens."""
    return [Example(s.id, s.visual, vocab.encode(s.utterance.transcript)) for s in samples]


def evaluate_wer(model: Recognizer, examples: Sequence[Example], max_len: int) -> float:
    """Corpus token error rate of greedy attention decoding."""
    return corpus_wer(
        (model.transcribe(ex.inputs, max_len), ex.tokens) for ex in examples
    ).wer


class StageTrainer(BaseComponent):
    """Mini-batch Adam loop shared by both stages.

    Batches are drawn from a per-seed permutation of the training examples.
    Elements whose CTC term is infeasible are dropped with a warning.
    """

    stage = "train"

    def __init__(self, config: RunConfig, seed: int, step_log: Optional[Path] = None):
        """Bind the run configuration and the seed of this run."""
        super().__init__()
        self.config = config
        self.seed = seed
        self.step_log = step_log

    def fit(
        self,
        model: Recognizer,
        train: Sequence[Example],
        held_out: Sequence[Example],
        steps: int,
    ) -> TrainReport:
        """Run ``steps`` optimizer steps and report losses and held-out WER."""
        self._log_execution_start(
            self.stage, seed=self.seed, steps=steps, examples=len(train)
        )
        sink = JsonlEventSink(self.step_log) if self.step_log else None
        if sink:
            logging_service.subscribe(sink)
        try:
            report = self._loop(model, list(train), list(held_out), steps)
        finally:
            if sink:
                logging_service.unsubscribe(sink)
        self._log_execution_end(
            self.stage,
            final_loss=report.final_loss,
            dropped=report.dropped_elements,
            eval_wer=report.eval_wer,
        )
        return report

    def _loop(
        self,
        model: Recognizer,
        train: list[Example],
        held_out: list[Example],
        steps: int,
    ) -> TrainReport:
        training = self.config.training
        optimizer = Adam(model.trainable_parameters(), training.lr, seed=self.seed)
        rng = np.random.default_rng([self.seed, 4])
        queue: list[int] = []
        dropped = 0
        for step in range(1, steps + 1):
            batch = []
            while len(batch) < min(training.batch_size, len(train)):
                if not queue:
                    queue = rng.permutation(len(train)).tolist()
                batch.append(queue.pop())

            optimizer.zero_grad()
            terms: list[Tensor] = []
            att_values, ctc_values = [], []
            for i in batch:
                example = train[i]
                try:
                    losses = model.losses(example, training.ctc_weight)
                except InfeasibleCtcError as e:
                    dropped += 1
                    self.logger.warning(f"Dropping {example.sample_id}: {e}")
                    continue
                terms.append(losses.total)
                att_values.append(losses.att)
                ctc_values.append(losses.ctc)
            if not terms:
                self.logger.warning(f"Step {step}: every batch element was dropped")
                continue

            loss = terms[0]
            for term in terms[1:]:
                loss = ops.add(loss, term)
            loss = ops.mul(loss, 1.0 / len(terms))
            backward(loss)
            optimizer.step()
            optimizer.state.record_loss(loss.item())

            if step % training.log_every == 0 or step == steps:
                wer_eval = None
                if held_out and (step % training.eval_every == 0 or step == steps):
                    wer_eval = evaluate_wer(model, held_out, training.max_decode_len)
                self._emit(step, loss.item(), att_values, ctc_values, wer_eval)

        eval_wer = (
            evaluate_wer(model, held_out, training.max_decode_len) if held_out else None
        )
        return TrainReport(
            stage=self.stage,
            steps=steps,
            losses=optimizer.state.losses,
            dropped_elements=dropped,
            eval_wer=eval_wer,
        )

    def _emit(
        self,
        step: int,
        loss: float,
        att: list[float],
        ctc: list[float],
        wer_eval: Optional[float],
    ) -> None:
        finite_ctc = [c for c in ctc if np.isfinite(c)]
        event: dict[str, Any] = {
            "event": STEP_EVENT,
            "stage": self.stage,
            "step": step,
            "loss": loss,
            "ctc": float(np.mean(finite_ctc)) if finite_ctc else None,
            "att": float(np.mean(att)),
            "wer_eval": wer_eval,
        }
        logging_service.notify(event, LogLevel.DEBUG, self.__class__.__name__)

    def run(self, **kwargs: Any) -> Any:
        """Alias of :meth:`fit`."""
        return self.fit(**kwargs)


class MemoryStageTrainer(StageTrainer):
    """Stage 1: train memory, context encoder and decoder by ASR."""

    stage = "memory"


class VsrStageTrainer(StageTrainer):
    """Stage 2: train the visual recognizer against a memory."""

    stage = "vsr"


class DistillationStageTrainer(StageTrainer):
    """Stage 2 baseline: no ABM, pulled toward the stage-1 ASR model."""

    stage = "vsr_kd"


def train_memory_asr(
    corpus: Corpus,
    cluster_model: ClusterModel,
    config: RunConfig,
    seed: Optional[int] = None,
    step_log: Optional[Path] = None,
) -> tuple[AsrModel, TrainReport]:
    """Stage 1 on the multi-speaker train split.

    Raises:
        ConfigError: if the quantizer's cluster count differs from the configured N.
    """
    seed = config.seed if seed is None else seed
    if cluster_model.num_clusters != config.quantizer.num_clusters:
        raise ConfigError(
            f"quantizer has {cluster_model.num_clusters} clusters, "
            f"config expects N={config.quantizer.num_clusters}",
            ["quantizer.num_clusters"],
        )
    vocab = vocab_for(corpus)
    memory = init_memory(cluster_model.num_clusters, config.model.d, seed)
    model = AsrModel(config.model, vocab, memory, seed)
    train = asr_examples(corpus[Split.TRAIN], cluster_model, vocab)
    held_out = asr_examples(
        corpus[Split.TEST][: config.training.eval_size], cluster_model, vocab
    )
    trainer = MemoryStageTrainer(config, seed, step_log)
    report = trainer.fit(model, train, held_out, config.training.memory_steps)
    return model, report


def stage_two_memory(memory: CompactAudioMemory, config: RunConfig) -> CompactAudioMemory:
    """The memory stage 2 reads: frozen, trainable (control) or all-zero (control)."""
    if config.training.zero_memory:
        return CompactAudioMemory.zeros(memory.num_slots, memory.dim)
    if config.training.unfreeze_memory:
        return memory.unfrozen()
    return memory.freeze()


def train_vsr(
    corpus: Corpus,
    memory: CompactAudioMemory,
    abm_depth: int,
    config: RunConfig,
    seed: Optional[int] = None,
    step_log: Optional[Path] = None,
) -> tuple[VsrModel, TrainReport]:
    """Stage 2 on the train split; the report's WER is over the full test split.

    Raises:
        ConfigError: if the memory width differs from the model width.
    """
    seed = config.seed if seed is None else seed
    vocab = vocab_for(corpus)
    model = VsrModel(
        config.model,
        vocab,
        corpus.config.visual_dim,
        stage_two_memory(memory, config),
        abm_depth,
        seed,
    )
    train = vsr_examples(corpus[Split.TRAIN], vocab)
    held_out = vsr_examples(corpus[Split.TEST][: config.training.eval_size], vocab)
    trainer = VsrStageTrainer(config, seed, step_log)
    report = trainer.fit(model, train, held_out, config.training.vsr_steps)
    test_wer = evaluate_wer(
        model, vsr_examples(corpus[Split.TEST], vocab), config.training.max_decode_len
    )
    return model, report.model_copy(update={"eval_wer": test_wer})


def _pair_frames(frames: np.ndarray) -> np.ndarray:
    # audio runs at twice the visual rate; average each pair of frames
    return frames.reshape(frames.shape[0] // 2, 2, *frames.shape[1:]).mean(axis=1)


def distillation_targets(
    teacher: AsrModel,
    samples: Sequence[SyntheticSample],
    cluster_model: ClusterModel,
    mode: DistillationMode,
) -> dict[str, np.ndarray]:
    """Teacher outputs per sample id, downsampled to the visual frame rate.

    ``LOGIT`` targets are CTC log-posteriors (pairs averaged in probability
    space); ``FEATURE`` targets are context-encoder outputs.
    """
    mode = DistillationMode(mode)
    targets: dict[str, np.ndarray] = {}
    with no_grad():
        for s in samples:
            labels = quantize(cluster_model, s.audio)
            if mode is DistillationMode.LOGIT:
                probs = _pair_frames(np.exp(teacher.ctc_log_probs(labels)))
                targets[s.id] = np.log(probs)
            else:
                targets[s.id] = _pair_frames(teacher.encode(labels).data)
    return targets


def train_distilled_vsr(
    corpus: Corpus,
    teacher: AsrModel,
    cluster_model: ClusterModel,
    config: RunConfig,
    mode: DistillationMode = DistillationMode.LOGIT,
    seed: Optional[int] = None,
    step_log: Optional[Path] = None,
) -> tuple[DistilledVsrModel, TrainReport]:
    """Stage 2 without ABM, with a distillation term toward the stage-1 model.

    The teacher is only read. The report's WER is over the full test split.
    """
    seed = config.seed if seed is None else seed
    vocab = vocab_for(corpus)
    targets = distillation_targets(teacher, corpus[Split.TRAIN], cluster_model, mode)
    model = DistilledVsrModel(
        config.model,
        vocab,
        corpus.config.visual_dim,
        teacher.memory.freeze(),
        targets,
        mode,
        config.training.kd_weight,
        seed,
    )
    train = vsr_examples(corpus[Split.TRAIN], vocab)
    held_out = vsr_examples(corpus[Split.TEST][: config.training.eval_size], vocab)
    trainer = DistillationStageTrainer(config, seed, step_log)
    report = trainer.fit(model, train, held_out, config.training.vsr_steps)
    test_wer = evaluate_wer(
        model, vsr_examples(corpus[Split.TEST], vocab), config.training.max_decode_len
    )
    return model, report.model_copy(update={"eval_wer": test_wer})
