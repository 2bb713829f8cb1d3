"""The compact audio memory: one trainable vector per quantizer cluster."""

from collections.abc import Sequence

import numpy as np

from akvsr.errors import ParameterError, SlotIndexError
from akvsr.nn.module import Module
from akvsr.tensor import Tensor, gather_rows

INIT_STD = 0.02


class CompactAudioMemory(Module):
    """``N x d`` slot table addressed frame-wise by cluster labels.

    A frozen memory keeps its values but its slots no longer require
    gradients, so backward never produces an entry for them and an optimizer
    refuses to update them.
    """

    def __init__(self, slots: Tensor) -> None:
        """Wrap an existing ``[N x d]`` slot tensor."""
        super().__init__()
        if slots.ndim != 2:
            raise ParameterError(f"memory slots must be 2-D, got shape {slots.shape}")
        if not np.isfinite(slots.data).all():
            raise ParameterError("memory slots must be finite")
        slots.name = "memory.slots"
        self.slots = slots

    @property
    def num_slots(self) -> int:
        """N."""
        return self.slots.shape[0]

    @property
    def dim(self) -> int:
        """d."""
        return self.slots.shape[1]

    @property
    def frozen(self) -> bool:
        """True once :meth:`freeze` has been applied."""
        return not self.slots.requires_grad

    def lookup(self, labels: Sequence[int] | np.ndarray) -> Tensor:
        """Gather ``slots[labels[i]]`` per frame.

        Raises:
            SlotIndexError: naming the first frame whose label is out of range.
        """
        labels = np.asarray(labels, dtype=np.int64)
        bad = np.flatnonzero((labels < 0) | (labels >= self.num_slots))
        if bad.size:
            frame = int(bad[0])
            raise SlotIndexError(frame, int(labels[frame]), self.num_slots)
        return gather_rows(self.slots, labels)

    def freeze(self) -> "CompactAudioMemory":
        """Read-only copy holding this memory's values."""
        return CompactAudioMemory(Tensor(self.slots.data, requires_grad=False))

    def unfrozen(self) -> "CompactAudioMemory":
        """Trainable copy, for the fine-tune-memory control."""
        return CompactAudioMemory(Tensor(self.slots.data, requires_grad=True))

    @classmethod
    def zeros(cls, num_slots: int, dim: int) -> "CompactAudioMemory":
        """Frozen all-zero memory used by the zero-memory control."""
        return cls(Tensor(np.zeros((num_slots, dim)), requires_grad=False))


def init_memory(num_slots: int, dim: int, seed: int) -> CompactAudioMemory:
    """Trainable memory with slots drawn from N(0, 0.02^2).

    Raises:
        ParameterError: if ``num_slots < 2`` or ``dim < 8``.
    """
    if num_slots < 2:
        raise ParameterError(f"memory needs N >= 2 slots, got {num_slots}")
    if dim < 8:
        raise ParameterError(f"memory needs d >= 8, got {dim}")
    rng = np.random.default_rng([seed, 3])
    return CompactAudioMemory(
        Tensor(rng.normal(0.0, INIT_STD, size=(num_slots, dim)), requires_grad=True)
    )
