"""The gradient suite behind ``akvsr gradcheck``.

Every differentiable primitive is checked on random small inputs, then the
network pieces built from them, then both training-stage graphs end to end
at tiny dimensions. A primitive's output is reduced to a scalar through a
fixed random projection so no backward rule can hide behind a constant sum.
"""

from collections.abc import Callable
from typing import NamedTuple, Optional

import numpy as np

from akvsr.config.run import ModelConfig
from akvsr.ctc import CtcInstance, ctc_loss
from akvsr.models.results import GradCheckEntry, GradCheckReport, GradCheckSummary
from akvsr.nn import (
    AbmLayer,
    DecoderStack,
    EncoderStack,
    Linear,
    Vocab,
    init_memory,
)
from akvsr.tensor import (
    Tensor,
    concat,
    cross_entropy,
    grad_check,
    index,
    layer_norm,
    log_softmax_rows,
    logsumexp,
    matmul,
    mean,
    no_grad,
    relu,
    shift,
    softmax_rows,
    stack,
    transpose,
)
from akvsr.tensor import ops
from akvsr.tensor.mutation import op_by_name, sign_flipped
from akvsr.training.base import BaseComponent
from akvsr.training.losses import attention_loss
from akvsr.training.models import AsrModel, Example, VsrModel

OP_TOL = 1e-4
MODEL_TOL = 1e-3

ScalarFn = Callable[[], Tensor]
Params = list[tuple[str, Tensor]]
Builder = Callable[[np.random.Generator], tuple[ScalarFn, Params]]

# stage-2 graph at d=8; T_v=3 frames of 8-dim visual features
TINY_MODEL = ModelConfig(
    d=8,
    heads=2,
    ff=8,
    visual_layers=1,
    context_layers=1,
    decoder_layers=1,
    abm_depth=1,
    abm_heads=2,
)
TINY_VOCAB = Vocab(phonemes=["a", "b", "c"])


class GradCheckCase(NamedTuple):
    """One named scalar function and the tolerance it is held to."""

    label: str
    build: Builder
    tol: float


def _leaf(rng: np.random.Generator, *shape: int, scale: float = 1.0) -> Tensor:
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)


def _away_from_zero(rng: np.random.Generator, *shape: int) -> Tensor:
    # relu's kink is not differentiable; keep samples clear of it
    magnitude = rng.uniform(0.2, 1.0, size=shape)
    return Tensor(magnitude * rng.choice([-1.0, 1.0], size=shape), requires_grad=True)


def _projected(
    rng: np.random.Generator, out: Callable[[], Tensor], params: Params
) -> tuple[ScalarFn, Params]:
    with no_grad():
        shape = out().shape
    weights = Tensor(rng.normal(size=shape))

    def f() -> Tensor:
        return ops.sum(ops.mul(out(), weights))

    return f, params


def _binary(fn: Callable[[Tensor, Tensor], Tensor], rowwise: bool) -> Builder:
    def build(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
        a = _leaf(rng, 3, 4)
        b = _leaf(rng, 4) if rowwise else _leaf(rng, 3, 4)
        return _projected(rng, lambda: fn(a, b), [("a", a), ("b", b)])

    return build


def _unary(fn: Callable[[Tensor], Tensor], *shape: int) -> Builder:
    def build(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
        x = _leaf(rng, *shape)
        return _projected(rng, lambda: fn(x), [("x", x)])

    return build


def _relu(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    x = _away_from_zero(rng, 3, 4)
    return _projected(rng, lambda: relu(x), [("x", x)])


def _matmul(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    a, b = _leaf(rng, 2, 3), _leaf(rng, 3, 4)
    return _projected(rng, lambda: matmul(a, b), [("a", a), ("b", b)])


def _layer_norm(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    x, gamma, beta = _leaf(rng, 3, 5), _leaf(rng, 5), _leaf(rng, 5)
    return _projected(
        rng,
        lambda: layer_norm(x, gamma, beta),
        [("x", x), ("gamma", gamma), ("beta", beta)],
    )


def _index(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    x = _leaf(rng, 4, 3)
    rows = np.array([0, 2, 2, 3])
    return _projected(rng, lambda: index(x, rows), [("x", x)])


def _stack(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    a, b = _leaf(rng, 2, 3), _leaf(rng, 2, 3)
    return _projected(rng, lambda: stack([a, b], axis=0), [("a", a), ("b", b)])


def _concat(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    a, b = _leaf(rng, 2, 3), _leaf(rng, 2, 2)
    return _projected(rng, lambda: concat([a, b], axis=-1), [("a", a), ("b", b)])


def _cross_entropy(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    logits = _leaf(rng, 3, 5)
    return (lambda: cross_entropy(logits, [4, 0, 2])), [("logits", logits)]


OP_CASES: dict[str, Builder] = {
    "add": _binary(ops.add, rowwise=True),
    "sub": _binary(ops.sub, rowwise=True),
    "mul": _binary(ops.mul, rowwise=False),
    "neg": _unary(ops.neg, 3, 4),
    "relu": _relu,
    "matmul": _matmul,
    "transpose": _unary(transpose, 2, 3),
    "softmax_rows": _unary(lambda x: softmax_rows(x, scale=1.7), 3, 4),
    "log_softmax_rows": _unary(log_softmax_rows, 3, 4),
    "layer_norm": _layer_norm,
    "logsumexp": _unary(lambda x: logsumexp(x, axis=0), 3, 4),
    "sum": _unary(lambda x: ops.sum(x, axis=0), 3, 4),
    "mean": _unary(lambda x: mean(x, axis=1), 3, 4),
    "index": _index,
    "shift": _unary(lambda x: shift(x, 2, fill=0.0), 2, 5),
    "stack": _stack,
    "concat": _concat,
}


# -- network pieces --------------------------------------------------------


def _linear(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    layer = Linear(rng, 4, 3, std=0.5)
    x = Tensor(rng.normal(size=(3, 4)))
    return _projected(rng, lambda: layer(x), layer.trainable_parameters())


def _encoder(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    encoder = EncoderStack(rng, 8, 2, 8, 1, std=0.3)
    x = Tensor(rng.normal(size=(3, 8)))
    return _projected(rng, lambda: encoder(x), encoder.trainable_parameters())


def _abm_inject(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    layer = AbmLayer(rng, 8, 8, 8, heads=2, std=0.3)
    memory = init_memory(4, 8, int(rng.integers(1 << 16))).unfrozen()
    f_v = _leaf(rng, 3, 8)
    return _projected(
        rng,
        lambda: layer(f_v, memory),
        [("f_v", f_v), ("memory.slots", memory.slots), *layer.trainable_parameters()],
    )


def _ctc(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    logits = _leaf(rng, 5, 4)

    def f() -> Tensor:
        loss, _ = ctc_loss(CtcInstance(log_probs=log_softmax_rows(logits), target=[1, 1, 3]))
        return loss

    return f, [("logits", logits)]


def _attention_loss(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    decoder = DecoderStack(rng, TINY_VOCAB, 8, 2, 8, 1, std=0.3)
    enc = _leaf(rng, 3, 8)
    target = [1, 3, TINY_VOCAB.eos]
    return (
        lambda: attention_loss(decoder, enc, target),
        [("enc", enc), *decoder.trainable_parameters()],
    )


def _asr_stage(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    seed = int(rng.integers(1 << 16))
    model = AsrModel(TINY_MODEL, TINY_VOCAB, init_memory(4, 8, seed), seed)
    example = Example("gradcheck", np.array([0, 2, 1, 3, 3]), [1, 2])
    return (lambda: model.losses(example, 0.1).total), model.trainable_parameters()


def _vsr_stage(rng: np.random.Generator) -> tuple[ScalarFn, Params]:
    seed = int(rng.integers(1 << 16))
    memory = init_memory(4, 8, seed).freeze()
    model = VsrModel(TINY_MODEL, TINY_VOCAB, 8, memory, TINY_MODEL.abm_depth, seed)
    example = Example("gradcheck", rng.normal(size=(3, 8)), [1, 2])
    return (lambda: model.losses(example, 0.1).total), model.trainable_parameters()


MODULE_CASES: dict[str, Builder] = {
    "linear": _linear,
    "cross_entropy": _cross_entropy,
    "encoder": _encoder,
    "abm": _abm_inject,
    "ctc": _ctc,
    "attention_loss": _attention_loss,
}

MODEL_CASES: dict[str, Builder] = {
    "memory_asr": _asr_stage,
    "vsr": _vsr_stage,
}


def default_cases() -> list[GradCheckCase]:
    """Primitive, module and end-to-end checks in suite order."""
    return [
        *(GradCheckCase(f"op:{name}", build, OP_TOL) for name, build in OP_CASES.items()),
        *(GradCheckCase(f"module:{name}", b, OP_TOL) for name, b in MODULE_CASES.items()),
        *(GradCheckCase(f"stage:{name}", b, MODEL_TOL) for name, b in MODEL_CASES.items()),
    ]


def _merge(label: str, tol: float, step: float, trials: list[GradCheckReport]) -> GradCheckReport:
    entries = [
        GradCheckEntry(**{**e.model_dump(), "name": f"trial{i}.{e.name}"})
        for i, report in enumerate(trials)
        for e in report.entries
    ]
    return GradCheckReport(label=label, tol=tol, step=step, entries=entries)


class GradCheckSuite(BaseComponent):
    """Runs every case ``trials`` times with fresh random inputs."""

    def __init__(self, seed: int = 0, trials: int = 3, step: float = 1e-5) -> None:
        """Configure the random source, repetition count and difference step."""
        super().__init__()
        self.seed = seed
        self.trials = trials
        self.step = step

    def check(self, case: GradCheckCase) -> GradCheckReport:
        """All trials of one case merged into one report."""
        rng = np.random.default_rng([self.seed, 7, *map(ord, case.label)])
        reports = []
        for _ in range(self.trials if case.label.startswith("op:") else 1):
            f, params = case.build(rng)
            reports.append(grad_check(f, params, self.step, case.tol, case.label))
        return _merge(case.label, case.tol, self.step, reports)

    def run(
        self,
        inject_sign_flip: Optional[str] = None,
        cases: Optional[list[GradCheckCase]] = None,
    ) -> GradCheckSummary:
        """Run the suite, optionally with one op's backward rule negated."""
        cases = cases if cases is not None else default_cases()
        self._log_execution_start("gradcheck", cases=len(cases), sign_flip=inject_sign_flip)
        if inject_sign_flip is None:
            reports = [self.check(case) for case in cases]
        else:
            with sign_flipped(op_by_name(inject_sign_flip)):
                reports = [self.check(case) for case in cases]
        summary = GradCheckSummary(reports=reports, injected_sign_flip=inject_sign_flip)
        if not summary.passed:
            self.logger.warning(f"Gradient checks failed: {', '.join(summary.failures)}")
        self._log_execution_end("gradcheck", passed=summary.passed)
        return summary


def run_gradcheck(
    seed: int = 0, trials: int = 3, inject_sign_flip: Optional[str] = None
) -> GradCheckSummary:
    """Functional entry point for :class:`GradCheckSuite`."""
    return GradCheckSuite(seed, trials).run(inject_sign_flip)
