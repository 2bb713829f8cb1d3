"""Connectionist temporal classification: loss, enumeration oracle, decoding.

The loss runs the forward recursion over the blank-extended target inside
the autodiff graph (logsumexp, shift and index nodes), so its gradient comes
from the primitives' rules instead of a hand-derived backward pass.
"""

import itertools
from collections.abc import Sequence
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from akvsr.errors import ContractError, DimensionError, InstanceTooLargeError
from akvsr.tensor import NEG_INF, Tensor, index, logsumexp, shift, stack
from akvsr.tensor import ops

BLANK = 0
# enumeration budget of the brute-force oracle
MAX_PATHS = 10**6


def count_repeats(target: Sequence[int]) -> int:
    """Adjacent equal labels; each needs a separating blank frame."""
    return sum(1 for a, b in itertools.pairwise(target) if a == b)


class CtcInstance(BaseModel):
    """Frame log-posteriors (blank at 0) and a blank-free target."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    log_probs: Tensor = Field(..., description="[T x |vocab|] row log-softmax")
    target: list[int] = Field(default_factory=list)

    @field_validator("log_probs", mode="before")
    @classmethod
    def _as_tensor(cls, value: Any) -> Tensor:
        tensor = value if isinstance(value, Tensor) else Tensor(value)
        if tensor.ndim != 2 or tensor.shape[0] < 1:
            raise ValueError(f"log_probs must be [T x V] with T >= 1, got {tensor.shape}")
        return tensor

    @field_validator("target")
    @classmethod
    def _no_blank(cls, value: list[int]) -> list[int]:
        if any(t == BLANK for t in value):
            raise ValueError("CTC targets must not contain the blank label")
        return value

    @property
    def frames(self) -> int:
        """T."""
        return self.log_probs.shape[0]

    @property
    def num_classes(self) -> int:
        """|vocab| including blank."""
        return self.log_probs.shape[1]

    @property
    def feasible(self) -> bool:
        """Whether ``T >= L + repeats(target)``."""
        return self.frames >= len(self.target) + count_repeats(self.target)

    def extended_target(self) -> np.ndarray:
        """Blank-interleaved target of length ``2L + 1``."""
        ext = np.zeros(2 * len(self.target) + 1, dtype=np.int64)
        ext[1::2] = self.target
        return ext

    def check_distribution(self, tol: float = 1e-10) -> None:
        """Raise ``ContractError`` unless every row is a log-distribution."""
        sums = np.logaddexp.reduce(self.log_probs.data, axis=1)
        if not np.all(np.abs(sums) <= tol):
            row = int(np.argmax(np.abs(sums)))
            raise ContractError(f"row {row} log-sums to {sums[row]:.3g}, not 0")


def ctc_loss(instance: CtcInstance) -> tuple[Tensor, bool]:
    """Negative log-probability of the target over all alignments.

    Returns ``(loss, feasible)``; an infeasible instance yields ``+inf`` and
    ``False`` rather than raising.
    """
    target = instance.target
    if any(t >= instance.num_classes for t in target):
        raise DimensionError("ctc_loss", instance.log_probs.shape, (max(target) + 1,))
    if not instance.feasible:
        return Tensor(np.inf), False

    ext = instance.extended_target()
    states = ext.shape[0]
    # emissions[t, s] = log p(ext[s] | frame t)
    emissions = index(instance.log_probs, (slice(None), ext))

    # skipping the preceding blank is allowed onto a label that differs
    # from the label two states back
    skip = np.full(states, NEG_INF)
    for s in range(2, states):
        if ext[s] != BLANK and ext[s] != ext[s - 2]:
            skip[s] = 0.0
    skip_mask = Tensor(skip)
    start = np.full(states, NEG_INF)
    start[: min(2, states)] = 0.0

    alpha = ops.add(emissions[0], Tensor(start))
    for t in range(1, instance.frames):
        paths = stack(
            [alpha, shift(alpha, 1), ops.add(shift(alpha, 2), skip_mask)], axis=0
        )
        alpha = ops.add(logsumexp(paths, axis=0), emissions[t])

    finals = [states - 1] if states == 1 else [states - 1, states - 2]
    total = logsumexp(index(alpha, np.asarray(finals)), axis=0)
    return ops.neg(total), True


def collapse(path: Sequence[int]) -> list[int]:
    """Merge repeated labels, then drop blanks."""
    return [int(k) for k, _ in itertools.groupby(path) if k != BLANK]


def ctc_bruteforce(instance: CtcInstance) -> float:
    """Negative log-probability by enumerating every length-T path.

    Raises:
        InstanceTooLargeError: if ``|vocab|^T`` exceeds the path budget.
    """
    count = instance.num_classes**instance.frames
    if count > MAX_PATHS:
        raise InstanceTooLargeError(
            f"{instance.num_classes}^{instance.frames} = {count} paths exceeds {MAX_PATHS}"
        )
    lp = instance.log_probs.data
    frames = np.arange(instance.frames)
    scores = [
        float(lp[frames, list(path)].sum())
        for path in itertools.product(range(instance.num_classes), repeat=instance.frames)
        if collapse(path) == instance.target
    ]
    if not scores:
        return float("inf")
    return float(-np.logaddexp.reduce(scores))


def ctc_greedy_decode(log_probs: Tensor | np.ndarray) -> list[int]:
    """Per-frame argmax, collapsed; ties resolve to the lowest label."""
    data = log_probs.data if isinstance(log_probs, Tensor) else np.asarray(log_probs)
    return collapse(np.argmax(data, axis=1).tolist())
