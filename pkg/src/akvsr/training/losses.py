"""Attention loss, the CTC term, their weighted hybrid and distillation terms."""

from collections.abc import Sequence
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from akvsr.ctc import CtcInstance, count_repeats, ctc_loss
from akvsr.errors import ContractError, DimensionError, InfeasibleCtcError, ParameterError
from akvsr.nn.seqnet import DecoderStack
from akvsr.tensor import Tensor, cross_entropy, log_softmax_rows
from akvsr.tensor import ops


class HybridLossConfig(BaseModel):
    """Weighting of the CTC and attention terms."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(0.1, ge=0.0, le=1.0, alias="lambda")
    label_smoothing: Literal[0] = 0

    def combine(self, ctc: Tensor, att: Tensor, instance: CtcInstance | None = None) -> Tensor:
        """Apply :func:`hybrid_loss` with this weighting."""
        return hybrid_loss(ctc, att, self.lam, instance)


def attention_loss(decoder: DecoderStack, enc: Tensor, target: Sequence[int]) -> Tensor:
    """Teacher-forced summed NLL of ``target`` (which must end with EOS).

    Raises:
        ContractError: if the target holds the blank or lacks the final EOS.
    """
    vocab = decoder.vocab
    target = list(target)
    if not target or target[-1] != vocab.eos:
        raise ContractError(f"attention target must end with EOS ({vocab.eos})")
    if vocab.blank in target:
        raise ContractError("attention target must not contain the blank token")
    logits = decoder.decode([vocab.bos, *target[:-1]], enc)
    return cross_entropy(logits, target)


def ctc_term(logits: Tensor, target: Sequence[int]) -> tuple[Tensor, CtcInstance, bool]:
    """CTC loss of head ``logits`` (blank at 0) against phoneme tokens."""
    instance = CtcInstance(log_probs=log_softmax_rows(logits), target=list(target))
    loss, feasible = ctc_loss(instance)
    return loss, instance, feasible


def hybrid_loss(
    ctc: Tensor,
    att: Tensor,
    lam: float,
    instance: CtcInstance | None = None,
) -> Tensor:
    """``(1 - lam) * att + lam * ctc``.

    Raises:
        ParameterError: if ``lam`` is outside ``[0, 1]``.
        InfeasibleCtcError: if the CTC term is infinite while ``lam > 0``.
    """
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [0, 1], got {lam}")
    if lam == 0.0:
        return att
    if not np.isfinite(ctc.data).all():
        if instance is None:
            raise InfeasibleCtcError(0, 0, 0)
        raise InfeasibleCtcError(
            instance.frames, len(instance.target), count_repeats(instance.target)
        )
    if lam == 1.0:
        return ctc
    return ops.add(ops.mul(att, 1.0 - lam), ops.mul(ctc, lam))



def posterior_distillation(logits: Tensor, teacher_log_probs: np.ndarray) -> Tensor:
    """Mean per-frame ``KL(teacher || softmax(logits))``.

    Raises:
        DimensionError: if the teacher posteriors do not match ``logits``.
    """
    teacher_log_probs = np.asarray(teacher_log_probs, dtype=np.float64)
    if teacher_log_probs.shape != logits.shape:
        raise DimensionError("posterior_distillation", logits.shape, teacher_log_probs.shape)
    p = np.exp(teacher_log_probs)
    frames = logits.shape[0]
    # entropy part is constant in the student; kept so the value is a true KL
    neg_entropy = float(np.sum(np.where(p > 0, p * teacher_log_probs, 0.0))) / frames
    cross = ops.mul(ops.sum(ops.mul(log_softmax_rows(logits), p)), -1.0 / frames)
    return ops.add(cross, neg_entropy)


def feature_distillation(features: Tensor, teacher_features: np.ndarray) -> Tensor:
    """Mean squared error to fixed teacher features.

    Raises:
        DimensionError: if the shapes differ.
    """
    teacher_features = np.asarray(teacher_features, dtype=np.float64)
    if teacher_features.shape != features.shape:
        raise DimensionError("feature_distillation", features.shape, teacher_features.shape)
    diff = ops.sub(features, teacher_features)
    return ops.mean(ops.mul(diff, diff))
