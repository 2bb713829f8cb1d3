"""Adam optimizer over named parameters."""

from collections.abc import Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from akvsr.errors import FrozenParameterError, NonFiniteGradientError
from akvsr.tensor import Tensor

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8

NamedParams = Sequence[tuple[str, Tensor]]


class TrainState(BaseModel):
    """Step counter, Adam moments and loss history of one training run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: int = 0
    step: int = Field(0, ge=0)
    first_moment: dict[str, np.ndarray] = Field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = Field(default_factory=dict)
    losses: list[float] = Field(default_factory=list)

    @field_validator("losses")
    @classmethod
    def _finite(cls, value: list[float]) -> list[float]:
        if not all(np.isfinite(v) for v in value):
            raise ValueError("loss history must be finite")
        return value

    def record_loss(self, loss: float) -> None:
        """Append a finite loss value."""
        if not np.isfinite(loss):
            raise NonFiniteGradientError("<loss>")
        self.losses.append(float(loss))


def sgd_adam_step(
    state: TrainState,
    params: NamedParams,
    grads: Mapping[str, np.ndarray],
    lr: float,
) -> TrainState:
    """One bias-corrected Adam update applied to ``params`` in place.

    Parameters without an entry in ``grads`` get a zero gradient. Every
    gradient is checked before any parameter moves.

    Raises:
        FrozenParameterError: if a parameter no longer requires gradients.
        NonFiniteGradientError: naming the first parameter with a NaN/inf gradient.
    """
    for name, tensor in params:
        if not tensor.requires_grad:
            raise FrozenParameterError(name)
        grad = grads.get(name)
        if grad is not None and not np.isfinite(grad).all():
            raise NonFiniteGradientError(name)

    state.step += 1
    correction1 = 1.0 - BETA1**state.step
    correction2 = 1.0 - BETA2**state.step
    for name, tensor in params:
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        m = state.first_moment.get(name, np.zeros_like(tensor.data))
        v = state.second_moment.get(name, np.zeros_like(tensor.data))
        m = BETA1 * m + (1.0 - BETA1) * grad
        v = BETA2 * v + (1.0 - BETA2) * grad * grad
        state.first_moment[name] = m
        state.second_moment[name] = v
        tensor.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + EPSILON)
    return state


class Adam:
    """Adam bound to a fixed parameter list, reading ``tensor.grad``."""

    def __init__(self, params: NamedParams, lr: float, seed: int = 0) -> None:
        """Bind ``params``; a fresh :class:`TrainState` holds the moments."""
        self.params = list(params)
        self.lr = lr
        self.state = TrainState(seed=seed)

    def zero_grad(self) -> None:
        """Clear every bound parameter's gradient."""
        for _, tensor in self.params:
            tensor.zero_grad()

    def step(self) -> TrainState:
        """Apply one update from the accumulated gradients."""
        grads = {name: t.grad for name, t in self.params if t.grad is not None}
        return sgd_adam_step(self.state, self.params, grads, self.lr)
