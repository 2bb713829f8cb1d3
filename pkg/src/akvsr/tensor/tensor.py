"""Dense float64 tensors with a reverse-mode computation graph.

A ``Tensor`` owns a numpy array. Tensors produced by an operation on at least
one gradient-requiring input carry a ``Node`` recording the operation, its
parents and whatever the operation saved for its backward rule.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from types import SimpleNamespace
from typing import Any, ClassVar, Optional

import numpy as np

from akvsr.errors import ContractError

ArrayLike = Any

_grad_enabled = True


@contextmanager
def no_grad() -> Iterator[None]:
    """Run operations without recording graph nodes (inference)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


class Tensor:
    """Dense real tensor (64-bit) that may participate in a gradient graph."""

    __slots__ = ("data", "requires_grad", "grad", "node", "name")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ) -> None:
        """Create a leaf tensor holding a float64 copy of ``data``."""
        self.data: np.ndarray = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node: Optional[Node] = None
        self.name = name

    @classmethod
    def _from_op(cls, data: np.ndarray, node: Optional[Node]) -> Tensor:
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.name = None
        out.node = node
        out.requires_grad = node is not None
        return out

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        """Tensor extents."""
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        """Number of elements."""
        return int(self.data.size)

    @property
    def ndim(self) -> int:
        """Number of axes."""
        return int(self.data.ndim)

    @property
    def is_leaf(self) -> bool:
        """True for tensors not produced by a recorded operation."""
        return self.node is None

    def item(self) -> float:
        """Return the value of a single-element tensor."""
        if self.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        """Underlying array (not a copy)."""
        return self.data

    def detach(self) -> Tensor:
        """Constant tensor sharing this tensor's values."""
        return Tensor._from_op(self.data, None)

    def zero_grad(self) -> None:
        """Clear the accumulated gradient."""
        self.grad = None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # -- operator sugar (bound in ops.py) -------------------------------

    def __add__(self, other: Any) -> Tensor:
        from akvsr.tensor import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        from akvsr.tensor import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        from akvsr.tensor import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        from akvsr.tensor import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        from akvsr.tensor import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        from akvsr.tensor import ops

        return ops.mul(other, self)

    def __neg__(self) -> Tensor:
        from akvsr.tensor import ops

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from akvsr.tensor import ops

        return ops.matmul(self, other)

    def __getitem__(self, key: Any) -> Tensor:
        from akvsr.tensor import ops

        return ops.index(self, key)

    @property
    def T(self) -> Tensor:  # noqa: N802
        """Transpose of a 2-D tensor."""
        from akvsr.tensor import ops

        return ops.transpose(self)

    def sum(self, axis: Optional[int] = None) -> Tensor:
        """Sum over ``axis`` (all elements when None)."""
        from akvsr.tensor import ops

        return ops.sum(self, axis=axis)

    def mean(self, axis: Optional[int] = None) -> Tensor:
        """Mean over ``axis`` (all elements when None)."""
        from akvsr.tensor import ops

        return ops.mean(self, axis=axis)


class Node:
    """Graph record for one operation application."""

    __slots__ = ("op", "parents", "ctx")

    def __init__(self, op: type[Function], parents: tuple[Tensor, ...], ctx: SimpleNamespace):
        """Store the producing op, its tensor inputs and saved context."""
        self.op = op
        self.parents = parents
        self.ctx = ctx


class Function:
    """Base class for differentiable primitives.

    Subclasses implement ``forward(ctx, *arrays, **kwargs)`` returning an
    array and ``backward(ctx, grad)`` returning one gradient (or None) per
    tensor input.
    """

    name: ClassVar[str] = "function"
    # flipped by akvsr.tensor.mutation to prove the gradient suite detects errors
    grad_sign: ClassVar[float] = 1.0

    @staticmethod
    def forward(ctx: SimpleNamespace, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        """Run the forward rule and record a node when gradients are needed."""
        ctx = SimpleNamespace()
        data = cls.forward(ctx, *(t.data for t in inputs), **kwargs)
        if _grad_enabled and any(t.requires_grad for t in inputs):
            return Tensor._from_op(data, Node(cls, tuple(inputs), ctx))
        return Tensor._from_op(data, None)


GradientMap = dict[Tensor, np.ndarray]


def _topological_order(root: Tensor) -> list[Tensor]:
    """Post-order over gradient-requiring tensors, parents in input order."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        tensor, expanded = stack.pop()
        if expanded:
            order.append(tensor)
            continue
        if id(tensor) in visited:
            continue
        visited.add(id(tensor))
        stack.append((tensor, True))
        if tensor.node is not None:
            for parent in reversed(tensor.node.parents):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(root: Tensor) -> GradientMap:
    """Propagate d(root)/d(leaf) into every gradient-requiring leaf.

    Leaf gradients accumulate into ``leaf.grad``; intermediate tensors get
    their gradient assigned. Returns the map leaf -> gradient for this pass.

    Raises:
        ContractError: if ``root`` is not scalar-valued.
    """
    if root.size != 1:
        raise ContractError(f"backward() needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        return {}

    grads: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
    leaves: GradientMap = {}
    for tensor in reversed(_topological_order(root)):
        grad = grads.pop(id(tensor), None)
        if grad is None:
            continue
        if tensor.node is None:
            leaves[tensor] = grad
            tensor.grad = grad if tensor.grad is None else tensor.grad + grad
            continue
        tensor.grad = grad
        node = tensor.node
        parent_grads = node.op.backward(node.ctx, grad)
        sign = node.op.grad_sign
        for parent, pgrad in zip(node.parents, parent_grads):
            if pgrad is None or not parent.requires_grad:
                continue
            if sign != 1.0:
                pgrad = sign * pgrad
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pgrad
            else:
                grads[key] = np.array(pgrad, dtype=np.float64)
    return leaves
