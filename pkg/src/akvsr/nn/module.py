"""Parameter containers with hierarchical names.

A ``Module`` registers every ``Tensor`` and ``Module`` assigned as an
attribute, so ``named_parameters`` yields checkpoint names such as
``encoder.layer0.attn.wq``.
"""

from collections.abc import Iterable, Iterator
from typing import Any, Optional

import numpy as np

from akvsr.errors import ContractError, DimensionError
from akvsr.tensor import Tensor, layer_norm
from akvsr.tensor import ops


class Module:
    """Base class for everything that owns parameters."""

    def __init__(self) -> None:
        """Initialize empty parameter and child registries."""
        object.__setattr__(self, "_parameters", {})
        object.__setattr__(self, "_children", {})

    def __setattr__(self, name: str, value: Any) -> None:
        if isinstance(value, Tensor):
            self._parameters[name] = value
            self._children.pop(name, None)
        elif isinstance(value, Module):
            self._children[name] = value
            self._parameters.pop(name, None)
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        """Yield ``(dotted_name, tensor)`` in registration order."""
        for name, tensor in self._parameters.items():
            yield f"{prefix}{name}", tensor
        for name, child in self._children.items():
            # list containers flatten into their owner: encoder.layer0.*
            child_prefix = prefix if isinstance(child, ModuleList) else f"{prefix}{name}."
            yield from child.named_parameters(child_prefix)

    def trainable_parameters(self, prefix: str = "") -> list[tuple[str, Tensor]]:
        """Named parameters that currently require gradients."""
        return [(n, t) for n, t in self.named_parameters(prefix) if t.requires_grad]

    def num_parameters(self) -> int:
        """Total scalar parameter count."""
        return sum(t.size for _, t in self.named_parameters())

    def zero_grad(self) -> None:
        """Clear accumulated gradients of every parameter."""
        for _, tensor in self.named_parameters():
            tensor.zero_grad()

    def state_dict(self, prefix: str = "") -> dict[str, np.ndarray]:
        """Copies of every parameter array keyed by dotted name."""
        return {name: t.data.copy() for name, t in self.named_parameters(prefix)}

    def load_state_dict(self, state: dict[str, np.ndarray], prefix: str = "") -> None:
        """Copy arrays into parameters in place.

        Raises:
            ContractError: if a parameter has no entry in ``state``.
            DimensionError: if an entry's shape differs from the parameter's.
        """
        for name, tensor in self.named_parameters(prefix):
            if name not in state:
                raise ContractError(f"Missing tensor '{name}' in state")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise DimensionError(f"load {name}", tensor.shape, value.shape)
            tensor.data[...] = value


class ModuleList(Module):
    """Ordered children named ``{prefix}{index}``."""

    def __init__(self, modules: Iterable[Module] = (), prefix: str = "layer") -> None:
        """Register ``modules`` in order."""
        super().__init__()
        object.__setattr__(self, "_prefix", prefix)
        object.__setattr__(self, "_items", [])
        for module in modules:
            self.append(module)

    def append(self, module: Module) -> None:
        """Register one more child."""
        self._children[f"{self._prefix}{len(self._items)}"] = module
        self._items.append(module)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Any]:
        return iter(self._items)

    def __getitem__(self, index: int) -> Any:
        return self._items[index]


def normal_param(
    rng: np.random.Generator, shape: tuple[int, ...], std: float, name: Optional[str] = None
) -> Tensor:
    """Trainable tensor drawn from N(0, std^2)."""
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True, name=name)


def zeros_param(shape: tuple[int, ...], name: Optional[str] = None) -> Tensor:
    """Trainable all-zero tensor."""
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


class Linear(Module):
    """``x @ w + b`` on ``[T x in]`` inputs."""

    def __init__(
        self, rng: np.random.Generator, in_dim: int, out_dim: int, std: float, bias: bool = True
    ) -> None:
        """Draw ``w`` from N(0, std^2); ``b`` starts at zero."""
        super().__init__()
        self.w = normal_param(rng, (in_dim, out_dim), std)
        self.bias = bias
        if bias:
            self.b = zeros_param((out_dim,))

    def __call__(self, x: Tensor) -> Tensor:
        out = x @ self.w
        return ops.add(out, self.b) if self.bias else out


class LayerNormParams(Module):
    """Learnable LayerNorm gain and shift (``gamma``, ``beta``)."""

    def __init__(self, dim: int, eps: float = 1e-5) -> None:
        """Unit gain, zero shift."""
        super().__init__()
        self.gamma = Tensor(np.ones(dim), requires_grad=True)
        self.beta = zeros_param((dim,))
        object.__setattr__(self, "eps", eps)

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)
