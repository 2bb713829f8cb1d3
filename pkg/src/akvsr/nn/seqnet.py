"""Small pre-norm transformer: vocabulary, encoder stack and decoder stack."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from akvsr.errors import ContractError, DimensionError, ParameterError
from akvsr.nn.module import LayerNormParams, Linear, Module, ModuleList, normal_param
from akvsr.tensor import Tensor, concat, gather_rows, no_grad, relu, softmax_rows
from akvsr.tensor import ops

# additive logit for disallowed attention positions
MASKED = -1e30


class Vocab(BaseModel):
    """Token ids: blank 0, phonemes 1..P, then BOS, EOS and PAD."""

    model_config = ConfigDict(frozen=True)

    phonemes: list[str] = Field(..., min_length=1)

    @property
    def blank(self) -> int:
        """CTC blank id."""
        return 0

    @property
    def num_phonemes(self) -> int:
        """P."""
        return len(self.phonemes)

    @property
    def bos(self) -> int:
        """Begin-of-sequence id."""
        return self.num_phonemes + 1

    @property
    def eos(self) -> int:
        """End-of-sequence id."""
        return self.num_phonemes + 2

    @property
    def pad(self) -> int:
        """Padding id."""
        return self.num_phonemes + 3

    @property
    def size(self) -> int:
        """|vocab|."""
        return self.num_phonemes + 4

    @property
    def ctc_size(self) -> int:
        """Classes of the CTC head: blank plus phonemes."""
        return self.num_phonemes + 1

    def encode(self, symbols: list[str]) -> list[int]:
        """Phoneme symbols to token ids."""
        try:
            return [self.phonemes.index(s) + 1 for s in symbols]
        except ValueError as e:
            raise ContractError(f"Unknown phoneme in {symbols}") from e

    def token_of(self, phoneme_index: int) -> int:
        """Token id of a 0-based phoneme index."""
        return phoneme_index + 1

    def decode(self, tokens: list[int]) -> list[str]:
        """Phoneme token ids back to symbols; specials are rejected."""
        if any(not 1 <= t <= self.num_phonemes for t in tokens):
            raise ContractError(f"Non-phoneme token in {tokens}")
        return [self.phonemes[t - 1] for t in tokens]


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """``[length x dim]`` fixed sine/cosine position table."""
    positions = np.arange(length)[:, None]
    rates = np.power(10000.0, -(np.arange(0, dim, 2) / dim))
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(positions * rates)
    table[:, 1::2] = np.cos(positions * rates[: dim // 2])
    return table


def causal_mask(length: int) -> np.ndarray:
    """Additive mask letting position ``l`` attend to positions ``<= l``."""
    return np.triu(np.full((length, length), MASKED), k=1)


class MultiHeadAttention(Module):
    """Scaled dot-product attention split over ``heads`` slices of ``d``."""

    def __init__(self, rng: np.random.Generator, d: int, heads: int, std: float) -> None:
        """Create ``wq``, ``wk``, ``wv``, ``wo``, each ``[d x d]``."""
        super().__init__()
        if d % heads:
            raise ParameterError(f"d={d} not divisible by heads={heads}")
        self.wq = normal_param(rng, (d, d), std)
        self.wk = normal_param(rng, (d, d), std)
        self.wv = normal_param(rng, (d, d), std)
        self.wo = normal_param(rng, (d, d), std)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "d", d)

    def __call__(self, x: Tensor, source: Tensor, mask: np.ndarray | None = None) -> Tensor:
        q, k, v = x @ self.wq, source @ self.wk, source @ self.wv
        width = self.d // self.heads
        outputs = []
        for h in range(self.heads):
            cols = (slice(None), slice(h * width, (h + 1) * width))
            scores = q[cols] @ k[cols].T
            if mask is not None:
                scores = ops.add(scores, Tensor(mask))
            weights = softmax_rows(scores, scale=float(np.sqrt(width)))
            outputs.append(weights @ v[cols])
        return concat(outputs, axis=-1) @ self.wo


class FeedForward(Module):
    """Position-wise ``relu(x W1 + b1) W2 + b2``."""

    def __init__(self, rng: np.random.Generator, d: int, ff: int, std: float) -> None:
        """Two linear layers ``d -> ff -> d``."""
        super().__init__()
        self.fc1 = Linear(rng, d, ff, std)
        self.fc2 = Linear(rng, ff, d, std)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(relu(self.fc1(x)))


class EncoderBlock(Module):
    """Pre-norm self-attention plus feed-forward, each residual."""

    def __init__(
        self, rng: np.random.Generator, d: int, heads: int, ff: int, std: float, eps: float
    ) -> None:
        """Create sublayers."""
        super().__init__()
        self.ln1 = LayerNormParams(d, eps)
        self.attn = MultiHeadAttention(rng, d, heads, std)
        self.ln2 = LayerNormParams(d, eps)
        self.ff = FeedForward(rng, d, ff, std)

    def __call__(self, x: Tensor) -> Tensor:
        h = self.ln1(x)
        x = x + self.attn(h, h)
        return x + self.ff(self.ln2(x))


class EncoderStack(Module):
    """Stack of encoder blocks with a final LayerNorm.

    A zero-layer stack is the identity. Sinusoidal positions are added to
    the input unless ``use_positions`` is off.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        d: int,
        heads: int,
        ff: int,
        num_layers: int,
        std: float = 0.02,
        eps: float = 1e-5,
        use_positions: bool = True,
    ) -> None:
        """Create ``num_layers`` blocks."""
        super().__init__()
        self.layers = ModuleList(
            EncoderBlock(rng, d, heads, ff, std, eps) for _ in range(num_layers)
        )
        if num_layers:
            self.ln = LayerNormParams(d, eps)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "use_positions", use_positions)

    def encode(self, x: Tensor) -> Tensor:
        """``[T x d] -> [T x d]``.

        Raises:
            DimensionError: if the feature dim is not ``d``.
        """
        if x.ndim != 2 or x.shape[1] != self.d:
            raise DimensionError("encode", x.shape, (x.shape[0] if x.ndim else 0, self.d))
        if not len(self.layers):
            return x
        if self.use_positions:
            x = ops.add(x, Tensor(sinusoidal_positions(x.shape[0], self.d)))
        for layer in self.layers:
            x = layer(x)
        return self.ln(x)

    __call__ = encode


class DecoderBlock(Module):
    """Causal self-attention, cross-attention over the encoder, feed-forward."""

    def __init__(
        self, rng: np.random.Generator, d: int, heads: int, ff: int, std: float, eps: float
    ) -> None:
        """Create sublayers."""
        super().__init__()
        self.ln1 = LayerNormParams(d, eps)
        self.self_attn = MultiHeadAttention(rng, d, heads, std)
        self.ln2 = LayerNormParams(d, eps)
        self.cross_attn = MultiHeadAttention(rng, d, heads, std)
        self.ln3 = LayerNormParams(d, eps)
        self.ff = FeedForward(rng, d, ff, std)

    def __call__(self, x: Tensor, enc: Tensor, mask: np.ndarray) -> Tensor:
        h = self.ln1(x)
        x = x + self.self_attn(h, h, mask)
        x = x + self.cross_attn(self.ln2(x), enc)
        return x + self.ff(self.ln3(x))


class DecoderStack(Module):
    """Autoregressive decoder over the full vocabulary."""

    def __init__(
        self,
        rng: np.random.Generator,
        vocab: Vocab,
        d: int,
        heads: int,
        ff: int,
        num_layers: int,
        std: float = 0.02,
        eps: float = 1e-5,
    ) -> None:
        """Create embeddings, blocks and the output projection."""
        super().__init__()
        # unit-scale embeddings sit on the same scale as the position table
        self.token_embedding = normal_param(rng, (vocab.size, d), 1.0)
        self.layers = ModuleList(
            DecoderBlock(rng, d, heads, ff, std, eps) for _ in range(num_layers)
        )
        self.ln = LayerNormParams(d, eps)
        self.output_projection = normal_param(rng, (d, vocab.size), std)
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "d", d)

    def decode(self, prefix: list[int], enc: Tensor) -> Tensor:
        """Teacher-forced logits ``[len(prefix) x |vocab|]``.

        Row ``l`` predicts the token after ``prefix[l]`` and depends only on
        ``prefix[:l + 1]``.
        """
        if not prefix:
            raise ContractError("decoder prefix must not be empty")
        if prefix[0] != self.vocab.bos:
            raise ContractError(f"decoder prefix must start with BOS ({self.vocab.bos})")
        if enc.ndim != 2 or enc.shape[1] != self.d:
            raise DimensionError("decode", enc.shape, (enc.shape[0], self.d))
        x = gather_rows(self.token_embedding, prefix)
        x = ops.add(x, Tensor(sinusoidal_positions(len(prefix), self.d)))
        mask = causal_mask(len(prefix))
        for layer in self.layers:
            x = layer(x, enc, mask)
        return self.ln(x) @ self.output_projection

    def decode_step(self, prefix: list[int], enc: Tensor) -> Tensor:
        """Logits over the vocabulary for the position after ``prefix``."""
        return self.decode(prefix, enc)[len(prefix) - 1]

    def greedy_decode(self, enc: Tensor, max_len: int) -> list[int]:
        """Argmax decoding until EOS or ``max_len`` tokens.

        Only phoneme tokens and EOS are eligible, so the result never holds
        blank, BOS or PAD. Ties go to the lowest id.
        """
        if max_len < 1:
            raise ParameterError(f"max_len must be >= 1, got {max_len}")
        eligible = np.full(self.vocab.size, -np.inf)
        eligible[1 : self.vocab.num_phonemes + 1] = 0.0
        eligible[self.vocab.eos] = 0.0
        prefix = [self.vocab.bos]
        with no_grad():
            enc = enc.detach()
            for _ in range(max_len):
                logits = self.decode_step(prefix, enc).data + eligible
                token = int(np.argmax(logits))
                if token == self.vocab.eos:
                    break
                prefix.append(token)
        return prefix[1:]
