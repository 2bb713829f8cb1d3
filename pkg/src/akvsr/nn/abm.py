"""Audio bridging: visual queries attend over the compact audio memory.

Each layer scores every memory slot against every visual frame, rebuilds an
audio-knowledge vector per frame from the slots, and adds it back into the
visual stream under a LayerNorm. No frame alignment between the modalities
is involved, so the output always keeps the visual length.
"""

import numpy as np

from akvsr.errors import DimensionError, ParameterError
from akvsr.nn.memory import CompactAudioMemory
from akvsr.nn.module import LayerNormParams, Module, ModuleList, normal_param
from akvsr.tensor import Tensor, concat, layer_norm, softmax_rows, stack
from akvsr.tensor import ops


class AbmLayer(Module):
    """One cross-attention read from memory plus residual injection."""

    def __init__(
        self,
        rng: np.random.Generator,
        d: int,
        d_k: int,
        d_v: int,
        heads: int = 1,
        tau: float | None = None,
        std: float = 0.02,
        eps: float = 1e-5,
    ) -> None:
        """Create ``wq [d x d_k]``, ``wk [d x d_k]``, ``wv [d x d_v]``, ``wo [d_v x d]``.

        ``tau`` defaults to ``sqrt(d_k / heads)``.
        """
        super().__init__()
        if d_k % heads or d_v % heads:
            raise ParameterError(f"d_k={d_k} and d_v={d_v} must be divisible by heads={heads}")
        tau = float(np.sqrt(d_k / heads)) if tau is None else float(tau)
        if not tau > 0:
            raise ParameterError(f"tau must be positive, got {tau}")
        self.wq = normal_param(rng, (d, d_k), std)
        self.wk = normal_param(rng, (d, d_k), std)
        self.wv = normal_param(rng, (d, d_v), std)
        self.wo = normal_param(rng, (d_v, d), std)
        self.ln = LayerNormParams(d, eps)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "d_k", d_k)
        object.__setattr__(self, "d_v", d_v)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "tau", tau)

    def _check(self, f_v: Tensor, memory: CompactAudioMemory) -> None:
        if f_v.ndim != 2 or f_v.shape[1] != self.d or memory.dim != self.d:
            raise DimensionError("abm", f_v.shape, memory.slots.shape)

    def attention_scores(self, f_v: Tensor, memory: CompactAudioMemory) -> Tensor:
        """``[h x T_v x N]`` softmax over slots of ``Q K^T / tau`` per head."""
        self._check(f_v, memory)
        q = f_v @ self.wq
        k = memory.slots @ self.wk
        width = self.d_k // self.heads
        heads = []
        for h in range(self.heads):
            cols = (slice(None), slice(h * width, (h + 1) * width))
            heads.append(softmax_rows(q[cols] @ k[cols].T, scale=self.tau))
        return stack(heads, axis=0)

    def reconstruct(self, scores: Tensor, memory: CompactAudioMemory) -> Tensor:
        """``[T_v x d_v]``: per head, scores times the head's value slice."""
        if scores.ndim != 3 or scores.shape[0] != self.heads or scores.shape[2] != memory.num_slots:
            raise DimensionError("reconstruct", scores.shape, memory.slots.shape)
        values = memory.slots @ self.wv
        width = self.d_v // self.heads
        heads = [
            scores[h] @ values[(slice(None), slice(h * width, (h + 1) * width))]
            for h in range(self.heads)
        ]
        return concat(heads, axis=-1)

    def inject(self, f_v: Tensor, recalled: Tensor) -> Tensor:
        """``LN(f_v + recalled W_o)`` row-wise."""
        if recalled.shape != (f_v.shape[0], self.d_v):
            raise DimensionError("inject", f_v.shape, recalled.shape)
        return layer_norm(
            ops.add(f_v, recalled @ self.wo), self.ln.gamma, self.ln.beta, self.ln.eps
        )

    def __call__(self, f_v: Tensor, memory: CompactAudioMemory) -> Tensor:
        return self.inject(f_v, self.reconstruct(self.attention_scores(f_v, memory), memory))


class AbmStack(Module):
    """``k`` layers applied in sequence, each with its own weights.

    Depth 0 is the no-memory baseline and returns the visual features as is.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        depth: int,
        d: int,
        d_k: int,
        d_v: int,
        heads: int = 1,
        tau: float | None = None,
        std: float = 0.02,
        eps: float = 1e-5,
    ) -> None:
        """Create ``depth`` independent layers."""
        super().__init__()
        if depth < 0:
            raise ParameterError(f"ABM depth must be >= 0, got {depth}")
        self.layers = ModuleList(
            AbmLayer(rng, d, d_k, d_v, heads, tau, std, eps) for _ in range(depth)
        )

    @property
    def depth(self) -> int:
        """Number of layers."""
        return len(self.layers)

    def forward(self, f_v: Tensor, memory: CompactAudioMemory) -> Tensor:
        """Complement ``f_v`` with memory knowledge, layer by layer."""
        for layer in self.layers:
            f_v = layer(f_v, memory)
        return f_v

    __call__ = forward

    def trace(self, f_v: Tensor, memory: CompactAudioMemory) -> list[np.ndarray]:
        """Attention scores ``[h x T_v x N]`` of every layer for one input."""
        scores = []
        for layer in self.layers:
            a = layer.attention_scores(f_v, memory)
            scores.append(a.data.copy())
            f_v = layer.inject(f_v, layer.reconstruct(a, memory))
        return scores
