"""Memory-driven ASR (stage 1), ABM-equipped VSR (stage 2) and the distilled VSR baseline."""

from collections.abc import Mapping
from typing import NamedTuple

import numpy as np

from akvsr.config.run import ModelConfig
from akvsr.errors import ConfigError, ContractError
from akvsr.models.base.types import DistillationMode
from akvsr.nn import (
    AbmStack,
    CompactAudioMemory,
    DecoderStack,
    EncoderStack,
    Linear,
    Module,
    Vocab,
)
from akvsr.tensor import Tensor, log_softmax_rows, no_grad
from akvsr.tensor import ops
from akvsr.training.losses import (
    attention_loss,
    ctc_term,
    feature_distillation,
    hybrid_loss,
    posterior_distillation,
)


class Example(NamedTuple):
    """One training/eval item: model inputs and phoneme tokens."""

    sample_id: str
    inputs: np.ndarray
    tokens: list[int]


class SampleLosses(NamedTuple):
    """Loss terms of one example."""

    total: Tensor
    att: float
    ctc: float
    kd: float = 0.0


class Recognizer(Module):
    """Shared decoder, CTC head and loss wiring; subclasses define ``encode``."""

    decoder: DecoderStack
    ctc_head: Linear

    def encode(self, inputs: np.ndarray) -> Tensor:
        raise NotImplementedError

    def losses(self, example: Example, lam: float) -> SampleLosses:
        """Hybrid loss of one example.

        Raises:
            InfeasibleCtcError: if the CTC term is infinite and ``lam > 0``.
        """
        enc = self.encode(example.inputs)
        att = attention_loss(self.decoder, enc, [*example.tokens, self.decoder.vocab.eos])
        ctc, instance, _ = ctc_term(self.ctc_head(enc), example.tokens)
        total = hybrid_loss(ctc, att, lam, instance)
        return SampleLosses(total=total, att=att.item(), ctc=ctc.item())

    def transcribe(self, inputs: np.ndarray, max_len: int) -> list[int]:
        """Greedy attention decoding to phoneme tokens."""
        with no_grad():
            return self.decoder.greedy_decode(self.encode(inputs), max_len)

    def ctc_log_probs(self, inputs: np.ndarray) -> np.ndarray:
        """Frame log-posteriors of the CTC head."""
        with no_grad():
            return log_softmax_rows(self.ctc_head(self.encode(inputs))).data


def _encoder(rng: np.random.Generator, config: ModelConfig, layers: int) -> EncoderStack:
    return EncoderStack(
        rng, config.d, config.heads, config.ff, layers, config.init_std, config.ln_eps
    )


def _decoder(rng: np.random.Generator, config: ModelConfig, vocab: Vocab) -> DecoderStack:
    return DecoderStack(
        rng,
        vocab,
        config.d,
        config.heads,
        config.ff,
        config.decoder_layers,
        config.init_std,
        config.ln_eps,
    )


def _check_memory(memory: CompactAudioMemory, config: ModelConfig) -> None:
    if memory.dim != config.d:
        raise ConfigError(
            f"memory dim {memory.dim} must equal model width d={config.d}", ["model.d"]
        )


class AsrModel(Recognizer):
    """Cluster labels -> memory lookup -> context encoder -> decoder / CTC head."""

    def __init__(
        self, config: ModelConfig, vocab: Vocab, memory: CompactAudioMemory, seed: int
    ) -> None:
        """Build around a (trainable) memory."""
        super().__init__()
        _check_memory(memory, config)
        rng = np.random.default_rng([seed, 5])
        self.memory = memory
        self.context_encoder = _encoder(rng, config, config.context_layers)
        self.decoder = _decoder(rng, config, vocab)
        self.ctc_head = Linear(rng, config.d, vocab.ctc_size, config.init_std)

    def encode(self, inputs: np.ndarray) -> Tensor:
        """``inputs`` are per-frame cluster labels."""
        return self.context_encoder(self.memory.lookup(inputs))


class VsrModel(Recognizer):
    """Visual features -> projection -> visual encoder -> ABM -> decoder / CTC head."""

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocab,
        visual_dim: int,
        memory: CompactAudioMemory,
        abm_depth: int,
        seed: int,
    ) -> None:
        """Build around a memory that is frozen unless the caller says otherwise."""
        super().__init__()
        _check_memory(memory, config)
        rng = np.random.default_rng([seed, 6])
        # maps fixed-width corpus features into the (swept) model width
        self.input_projection = Linear(rng, visual_dim, config.d, config.init_std)
        self.visual_encoder = _encoder(rng, config, config.visual_layers)
        self.abm = AbmStack(
            rng,
            abm_depth,
            config.d,
            config.key_dim,
            config.value_dim,
            config.abm_heads,
            config.abm_tau,
            config.init_std,
            config.ln_eps,
        )
        self.memory = memory
        self.decoder = _decoder(rng, config, vocab)
        self.ctc_head = Linear(rng, config.d, vocab.ctc_size, config.init_std)

    def visual_features(self, inputs: np.ndarray) -> Tensor:
        """Context-encoded visual features before audio bridging."""
        return self.visual_encoder(self.input_projection(Tensor(inputs)))

    def encode(self, inputs: np.ndarray) -> Tensor:
        """``inputs`` are ``[T_v x visual_dim]`` features."""
        return self.abm(self.visual_features(inputs), self.memory)


class DistilledVsrModel(VsrModel):
    """No-ABM VSR model with an extra term pulling it toward the stage-1 ASR model.

    ``targets`` maps sample ids to fixed teacher outputs at the visual frame
    rate: CTC log-posteriors (``LOGIT``) or context-encoder features
    (``FEATURE``). The teacher itself is not a child module, so none of its
    parameters are trained here.
    """

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocab,
        visual_dim: int,
        memory: CompactAudioMemory,
        targets: Mapping[str, np.ndarray],
        mode: DistillationMode,
        weight: float,
        seed: int,
    ) -> None:
        """Build a depth-0 model; ``memory`` only satisfies the width check."""
        super().__init__(config, vocab, visual_dim, memory, 0, seed)
        self.targets = dict(targets)
        self.mode = DistillationMode(mode)
        self.weight = weight

    def losses(self, example: Example, lam: float) -> SampleLosses:
        """Hybrid loss plus ``weight`` times the distillation term.

        Raises:
            ContractError: if no teacher target exists for the example.
            InfeasibleCtcError: if the CTC term is infinite and ``lam > 0``.
        """
        target = self.targets.get(example.sample_id)
        if target is None:
            raise ContractError(f"no distillation target for sample '{example.sample_id}'")
        features = self.visual_features(example.inputs)
        att = attention_loss(self.decoder, features, [*example.tokens, self.decoder.vocab.eos])
        logits = self.ctc_head(features)
        ctc, instance, _ = ctc_term(logits, example.tokens)
        total = hybrid_loss(ctc, att, lam, instance)
        if self.mode is DistillationMode.LOGIT:
            kd = posterior_distillation(logits, target)
        else:
            kd = feature_distillation(features, target)
        if self.weight:
            total = ops.add(total, ops.mul(kd, self.weight))
        return SampleLosses(total=total, att=att.item(), ctc=ctc.item(), kd=kd.item())
