"""Dense tensors, differentiable primitives and reverse-mode gradients."""

from akvsr.tensor.gradcheck import grad_check, relative_error
from akvsr.tensor.ops import (
    NEG_INF,
    as_tensor,
    concat,
    cross_entropy,
    gather_rows,
    index,
    layer_norm,
    log_softmax_rows,
    logsumexp,
    matmul,
    mean,
    relu,
    shift,
    softmax_rows,
    stack,
    transpose,
)
from akvsr.tensor.tensor import Function, GradientMap, Node, Tensor, backward, no_grad

__all__ = [
    "NEG_INF",
    "Function",
    "GradientMap",
    "Node",
    "Tensor",
    "as_tensor",
    "backward",
    "concat",
    "cross_entropy",
    "gather_rows",
    "grad_check",
    "index",
    "layer_norm",
    "log_softmax_rows",
    "logsumexp",
    "matmul",
    "mean",
    "no_grad",
    "relative_error",
    "relu",
    "shift",
    "softmax_rows",
    "stack",
    "transpose",
]
