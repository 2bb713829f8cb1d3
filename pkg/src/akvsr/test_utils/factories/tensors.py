"""Random tensors, log-posterior matrices, label sequences and CTC instances."""

from typing import Any, Optional

import numpy as np

from akvsr.ctc import CtcInstance, count_repeats
from akvsr.tensor import Tensor

from .base import BaseFactory


class TensorFactory(BaseFactory):
    """Gradient-requiring leaf tensors with standard normal entries."""

    @classmethod
    def create(cls, *shape: int, scale: float = 1.0, requires_grad: bool = True, **_: Any) -> Tensor:
        """Leaf tensor of ``shape``."""
        return Tensor(cls.rng().normal(0.0, scale, size=shape), requires_grad=requires_grad)

    @classmethod
    def create_batch(cls, size: int, *shape: int, **kwargs: Any) -> list[Tensor]:
        """``size`` independent leaves of the same shape."""
        return [cls.create(*shape, **kwargs) for _ in range(size)]


def random_log_probs(frames: int, classes: int, scale: float = 2.0) -> np.ndarray:
    """``[frames x classes]`` rows that are exact log-distributions."""
    logits = BaseFactory.rng().normal(0.0, scale, size=(frames, classes))
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def random_labels(length: int, classes: int, allow_blank: bool = False) -> list[int]:
    """Labels in ``[0, classes)`` (``[1, classes)`` without blank)."""
    low = 0 if allow_blank else 1
    return BaseFactory.rng().integers(low, classes, size=length).tolist()


class CtcInstanceFactory(BaseFactory):
    """Random CTC problems; feasible unless asked otherwise."""

    _model = CtcInstance

    @classmethod
    def create(
        cls,
        frames: int = 4,
        classes: int = 3,
        target: Optional[list[int]] = None,
        feasible: bool = True,
        **_: Any,
    ) -> CtcInstance:
        """Instance with ``frames`` rows over ``classes`` (blank included).

        Without an explicit ``target``, one is drawn and redrawn until its
        feasibility matches ``feasible``.
        """
        while target is None:
            length = int(cls.rng().integers(1, frames + 2))
            candidate = random_labels(length, classes)
            is_feasible = frames >= len(candidate) + count_repeats(candidate)
            if is_feasible == feasible:
                target = candidate
        return CtcInstance(log_probs=random_log_probs(frames, classes), target=target)
