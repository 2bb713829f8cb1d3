"""Gradient-rule mutation for validating the gradient-check suite.

Flipping the sign of one primitive's backward rule must make every check
that routes through it fail; ``akvsr gradcheck --inject-sign-flip`` uses this.
"""

from collections.abc import Iterator
from contextlib import contextmanager

from akvsr.errors import ParameterError
from akvsr.tensor.ops import DIFFERENTIABLE_OPS
from akvsr.tensor.tensor import Function


def op_by_name(name: str) -> type[Function]:
    """Look up a primitive by its ``name``."""
    for op in DIFFERENTIABLE_OPS:
        if op.name == name:
            return op
    known = ", ".join(sorted(op.name for op in DIFFERENTIABLE_OPS))
    raise ParameterError(f"Unknown op '{name}' (known: {known})")


@contextmanager
def sign_flipped(op: type[Function] | str) -> Iterator[type[Function]]:
    """Negate ``op``'s backward rule inside the context."""
    target = op_by_name(op) if isinstance(op, str) else op
    previous = target.grad_sign
    target.grad_sign = -previous
    try:
        yield target
    finally:
        target.grad_sign = previous
