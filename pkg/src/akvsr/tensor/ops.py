"""Differentiable primitive operations.

Each primitive is a ``Function`` subclass with explicit forward/backward
rules plus a functional wrapper. Broadcasting is limited to row-wise cases:
an operand may be a scalar or match the trailing axes of the other.
"""

from __future__ import annotations

from collections.abc import Sequence
from types import SimpleNamespace
from typing import Any, Optional

import numpy as np

from akvsr.errors import DimensionError, ParameterError
from akvsr.tensor.tensor import Function, Tensor

NEG_INF = -np.inf


def as_tensor(value: Any) -> Tensor:
    """Wrap numbers and arrays as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _check_rowwise(op: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    small, large = (a, b) if a.ndim < b.ndim else (b, a)
    if small.ndim < large.ndim and large.shape[large.ndim - small.ndim :] == small.shape:
        return
    raise DimensionError(op, a.shape, b.shape)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    return grad.reshape(shape)


# -- elementwise -----------------------------------------------------------


class Add(Function):
    name = "add"

    @staticmethod
    def forward(ctx: SimpleNamespace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_rowwise("add", a, b)
        ctx.shapes = (a.shape, b.shape)
        return a + b

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        sa, sb = ctx.shapes
        return _unbroadcast(grad, sa), _unbroadcast(grad, sb)


class Sub(Function):
    name = "sub"

    @staticmethod
    def forward(ctx: SimpleNamespace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_rowwise("sub", a, b)
        ctx.shapes = (a.shape, b.shape)
        return a - b

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        sa, sb = ctx.shapes
        return _unbroadcast(grad, sa), _unbroadcast(-grad, sb)


class Mul(Function):
    name = "mul"

    @staticmethod
    def forward(ctx: SimpleNamespace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_rowwise("mul", a, b)
        ctx.a, ctx.b = a, b
        return a * b

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return _unbroadcast(grad * ctx.b, ctx.a.shape), _unbroadcast(grad * ctx.a, ctx.b.shape)


class Neg(Function):
    name = "neg"

    @staticmethod
    def forward(ctx: SimpleNamespace, a: np.ndarray) -> np.ndarray:
        return -a

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return (-grad,)


class Relu(Function):
    name = "relu"

    @staticmethod
    def forward(ctx: SimpleNamespace, a: np.ndarray) -> np.ndarray:
        ctx.mask = a > 0
        return np.where(ctx.mask, a, 0.0)

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return (grad * ctx.mask,)


# -- linear algebra --------------------------------------------------------


class MatMul(Function):
    name = "matmul"

    @staticmethod
    def forward(ctx: SimpleNamespace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionError("matmul", a.shape, b.shape)
        ctx.a, ctx.b = a, b
        return a @ b

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return grad @ ctx.b.T, ctx.a.T @ grad


class Transpose(Function):
    name = "transpose"

    @staticmethod
    def forward(ctx: SimpleNamespace, a: np.ndarray) -> np.ndarray:
        if a.ndim != 2:
            raise DimensionError("transpose", a.shape)
        return a.T.copy()

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return (grad.T,)


# -- normalisation ---------------------------------------------------------


class SoftmaxRows(Function):
    name = "softmax_rows"

    @staticmethod
    def forward(ctx: SimpleNamespace, x: np.ndarray, scale: float = 1.0) -> np.ndarray:
        z = x / scale
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        s = e / e.sum(axis=-1, keepdims=True)
        ctx.s, ctx.scale = s, scale
        return s

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        s = ctx.s
        inner = (grad * s).sum(axis=-1, keepdims=True)
        return (s * (grad - inner) / ctx.scale,)


class LogSoftmaxRows(Function):
    name = "log_softmax_rows"

    @staticmethod
    def forward(ctx: SimpleNamespace, x: np.ndarray) -> np.ndarray:
        z = x - x.max(axis=-1, keepdims=True)
        out = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
        ctx.out = out
        return out

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        s = np.exp(ctx.out)
        return (grad - s * grad.sum(axis=-1, keepdims=True),)


class LayerNorm(Function):
    name = "layer_norm"

    @staticmethod
    def forward(
        ctx: SimpleNamespace,
        x: np.ndarray,
        gamma: np.ndarray,
        beta: np.ndarray,
        eps: float = 1e-5,
    ) -> np.ndarray:
        d = x.shape[-1]
        if gamma.shape != (d,) or beta.shape != (d,):
            raise DimensionError("layer_norm", x.shape, gamma.shape, beta.shape)
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered**2).mean(axis=-1, keepdims=True)
        rstd = 1.0 / np.sqrt(var + eps)
        xhat = centered * rstd
        ctx.xhat, ctx.rstd, ctx.gamma = xhat, rstd, gamma
        return xhat * gamma + beta

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        xhat, rstd = ctx.xhat, ctx.rstd
        reduce_axes = tuple(range(grad.ndim - 1))
        dgamma = (grad * xhat).sum(axis=reduce_axes)
        dbeta = grad.sum(axis=reduce_axes)
        dxhat = grad * ctx.gamma
        dx = rstd * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return dx, dgamma, dbeta


class LogSumExp(Function):
    name = "logsumexp"

    @staticmethod
    def forward(ctx: SimpleNamespace, x: np.ndarray, axis: int = -1) -> np.ndarray:
        if x.ndim == 0 or x.shape[axis] == 0:
            raise DimensionError("logsumexp", x.shape)
        m = x.max(axis=axis, keepdims=True)
        # an all -inf slice has no finite maximum to subtract
        m_safe = np.where(np.isfinite(m), m, 0.0)
        with np.errstate(divide="ignore"):
            out = np.log(np.exp(x - m_safe).sum(axis=axis, keepdims=True)) + m_safe
        ctx.x, ctx.out, ctx.axis = x, out, axis
        return np.squeeze(out, axis=axis)

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        out = ctx.out
        finite = np.isfinite(out)
        with np.errstate(invalid="ignore"):
            weights = np.where(finite, np.exp(ctx.x - np.where(finite, out, 0.0)), 0.0)
        return (weights * np.expand_dims(grad, ctx.axis),)


# -- reductions ------------------------------------------------------------


class Sum(Function):
    name = "sum"

    @staticmethod
    def forward(ctx: SimpleNamespace, x: np.ndarray, axis: Optional[int] = None) -> np.ndarray:
        ctx.shape, ctx.axis = x.shape, axis
        return np.asarray(x.sum(axis=axis))

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        if ctx.axis is not None:
            grad = np.expand_dims(grad, ctx.axis)
        return (np.broadcast_to(grad, ctx.shape).copy(),)


class Mean(Function):
    name = "mean"

    @staticmethod
    def forward(ctx: SimpleNamespace, x: np.ndarray, axis: Optional[int] = None) -> np.ndarray:
        ctx.shape, ctx.axis = x.shape, axis
        ctx.count = x.size if axis is None else x.shape[axis]
        return np.asarray(x.mean(axis=axis))

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        if ctx.axis is not None:
            grad = np.expand_dims(grad, ctx.axis)
        return (np.broadcast_to(grad / ctx.count, ctx.shape).copy(),)


# -- indexing and assembly -------------------------------------------------


class Index(Function):
    """numpy basic/fancy indexing; backward scatters with accumulation."""

    name = "index"

    @staticmethod
    def forward(ctx: SimpleNamespace, x: np.ndarray, key: Any = None) -> np.ndarray:
        ctx.shape, ctx.key = x.shape, key
        return np.array(x[key], dtype=np.float64)

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        out = np.zeros(ctx.shape)
        np.add.at(out, ctx.key, grad)
        return (out,)


class Shift(Function):
    """out[i] = x[i - k] along the last axis, ``fill`` where i < k."""

    name = "shift"

    @staticmethod
    def forward(ctx: SimpleNamespace, x: np.ndarray, k: int = 1, fill: float = NEG_INF) -> np.ndarray:
        ctx.k = k
        out = np.full_like(x, fill)
        if k < x.shape[-1]:
            out[..., k:] = x[..., : x.shape[-1] - k]
        return out

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        k = ctx.k
        out = np.zeros_like(grad)
        if k < grad.shape[-1]:
            out[..., : grad.shape[-1] - k] = grad[..., k:]
        return (out,)


class Stack(Function):
    name = "stack"

    @staticmethod
    def forward(ctx: SimpleNamespace, *xs: np.ndarray, axis: int = 0) -> np.ndarray:
        shapes = {x.shape for x in xs}
        if len(shapes) != 1:
            raise DimensionError("stack", *[x.shape for x in xs])
        ctx.axis, ctx.count = axis, len(xs)
        return np.stack(xs, axis=axis)

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return tuple(np.take(grad, i, axis=ctx.axis) for i in range(ctx.count))


class Concat(Function):
    name = "concat"

    @staticmethod
    def forward(ctx: SimpleNamespace, *xs: np.ndarray, axis: int = -1) -> np.ndarray:
        try:
            out = np.concatenate(xs, axis=axis)
        except ValueError as e:
            raise DimensionError("concat", *[x.shape for x in xs]) from e
        ctx.axis = axis
        ctx.bounds = np.cumsum([x.shape[axis] for x in xs])[:-1]
        return out

    @staticmethod
    def backward(ctx: SimpleNamespace, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return tuple(np.split(grad, ctx.bounds, axis=ctx.axis))


# -- functional API --------------------------------------------------------


def add(a: Any, b: Any) -> Tensor:
    """Elementwise sum with row-wise broadcasting."""
    return Add.apply(as_tensor(a), as_tensor(b))


def sub(a: Any, b: Any) -> Tensor:
    """Elementwise difference with row-wise broadcasting."""
    return Sub.apply(as_tensor(a), as_tensor(b))


def mul(a: Any, b: Any) -> Tensor:
    """Elementwise product with row-wise broadcasting."""
    return Mul.apply(as_tensor(a), as_tensor(b))


def neg(a: Tensor) -> Tensor:
    """Negation."""
    return Neg.apply(a)


def relu(a: Tensor) -> Tensor:
    """Rectified linear unit."""
    return Relu.apply(a)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of ``[m x k]`` and ``[k x n]``.

    Raises:
        DimensionError: naming both shapes when inner extents differ.
    """
    return MatMul.apply(a, b)


def transpose(a: Tensor) -> Tensor:
    """Transpose of a 2-D tensor."""
    return Transpose.apply(a)


def softmax_rows(x: Tensor, scale: float = 1.0) -> Tensor:
    """Row softmax of ``x / scale`` with max subtraction.

    Raises:
        ParameterError: if ``scale`` is not positive.
    """
    if not scale > 0:
        raise ParameterError(f"softmax scale must be positive, got {scale}")
    return SoftmaxRows.apply(x, scale=float(scale))


def log_softmax_rows(x: Tensor) -> Tensor:
    """Row log-softmax."""
    return LogSoftmaxRows.apply(x)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row ``(x - mean) / sqrt(var + eps) * gamma + beta``.

    Raises:
        ParameterError: if ``eps`` is not positive.
    """
    if not eps > 0:
        raise ParameterError(f"layer_norm eps must be positive, got {eps}")
    return LayerNorm.apply(x, gamma, beta, eps=float(eps))


def logsumexp(x: Tensor, axis: int = -1) -> Tensor:
    """``log(sum(exp(x)))`` over ``axis``; -inf entries are absorbing.

    Raises:
        DimensionError: if the reduced axis is empty.
    """
    return LogSumExp.apply(x, axis=axis)


def sum(x: Tensor, axis: Optional[int] = None) -> Tensor:  # noqa: A001
    """Sum over ``axis`` or all elements."""
    return Sum.apply(x, axis=axis)


def mean(x: Tensor, axis: Optional[int] = None) -> Tensor:
    """Mean over ``axis`` or all elements."""
    return Mean.apply(x, axis=axis)


def index(x: Tensor, key: Any) -> Tensor:
    """Differentiable ``x[key]``."""
    return Index.apply(x, key=key)


def gather_rows(table: Tensor, rows: Sequence[int] | np.ndarray) -> Tensor:
    """Rows ``table[rows]``; gradients accumulate per repeated row."""
    return Index.apply(table, key=np.asarray(rows, dtype=np.int64))


def shift(x: Tensor, k: int, fill: float = NEG_INF) -> Tensor:
    """Shift right by ``k`` along the last axis, padding with ``fill``."""
    return Shift.apply(x, k=int(k), fill=float(fill))


def stack(xs: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Stack equally shaped tensors along a new axis."""
    return Stack.apply(*xs, axis=axis)


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate tensors along an existing axis."""
    return Concat.apply(*xs, axis=axis)


def cross_entropy(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """Summed negative log-likelihood of ``targets`` under row softmax."""
    logp = log_softmax_rows(logits)
    rows = np.arange(len(targets))
    picked = index(logp, (rows, np.asarray(targets, dtype=np.int64)))
    return neg(sum(picked))


DIFFERENTIABLE_OPS: tuple[type[Function], ...] = (
    Add,
    Sub,
    Mul,
    Neg,
    Relu,
    MatMul,
    Transpose,
    SoftmaxRows,
    LogSoftmaxRows,
    LayerNorm,
    LogSumExp,
    Sum,
    Mean,
    Index,
    Shift,
    Stack,
    Concat,
)
