"""Finite-difference checks of every backward rule and of the suite itself."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akvsr.errors import ParameterError
from akvsr.services.gradcheck import (
    MODEL_TOL,
    MODULE_CASES,
    OP_CASES,
    OP_TOL,
    GradCheckCase,
    GradCheckSuite,
    default_cases,
    run_gradcheck,
)
from akvsr.tensor import Tensor, grad_check, relative_error
from akvsr.tensor import ops
from akvsr.tensor.mutation import op_by_name, sign_flipped
from akvsr.tensor.ops import DIFFERENTIABLE_OPS


@pytest.mark.gradcheck
@pytest.mark.property
@pytest.mark.parametrize("name", sorted(OP_CASES))
@settings(max_examples=100, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_primitive_gradients(name, seed):
    f, params = OP_CASES[name](np.random.default_rng(seed))
    report = grad_check(f, params, tol=OP_TOL, label=name)
    assert report.passed, report.entries


@pytest.mark.gradcheck
@pytest.mark.parametrize("name", sorted(MODULE_CASES))
def test_module_gradients(name):
    f, params = MODULE_CASES[name](np.random.default_rng(3))
    report = grad_check(f, params, tol=OP_TOL, label=name)
    assert report.passed, [e for e in report.entries if not e.passed]


@pytest.mark.unit
class TestSuiteCoverage:
    def test_every_primitive_has_a_case(self):
        assert set(OP_CASES) == {op.name for op in DIFFERENTIABLE_OPS}

    def test_default_case_labels_and_tolerances(self):
        cases = default_cases()
        labels = [c.label for c in cases]
        assert labels[0] == "op:add"
        assert labels[-2:] == ["stage:memory_asr", "stage:vsr"]
        assert {c.tol for c in cases if c.label.startswith("stage:")} == {MODEL_TOL}
        assert len(labels) == len(set(labels))

    def test_op_by_name_rejects_unknown(self):
        with pytest.raises(ParameterError, match="known"):
            op_by_name("conv2d")

    def test_sign_flip_is_restored(self):
        op = op_by_name("relu")
        with sign_flipped("relu"):
            assert op.grad_sign == -1.0
        assert op.grad_sign == 1.0


@pytest.mark.gradcheck
class TestSuiteRun:
    """The suite passes as built and fails once a rule is corrupted."""

    @pytest.fixture
    def small_cases(self):
        wanted = {"op:matmul", "op:transpose", "op:relu", "module:linear", "module:ctc"}
        return [c for c in default_cases() if c.label in wanted]

    def test_clean_run_passes(self, small_cases):
        summary = GradCheckSuite(seed=5, trials=2).run(cases=small_cases)
        assert summary.passed
        assert summary.injected_sign_flip is None
        matmul = next(r for r in summary.reports if r.label == "op:matmul")
        assert {"trial0.a", "trial0.b", "trial1.a", "trial1.b"} == {e.name for e in matmul.entries}

    def test_sign_flip_is_detected(self, small_cases):
        summary = GradCheckSuite(seed=5, trials=1).run(
            inject_sign_flip="transpose", cases=small_cases
        )
        assert not summary.passed
        assert "op:transpose" in summary.failures
        assert "op:relu" not in summary.failures
        assert summary.injected_sign_flip == "transpose"

    def test_mutation_reaches_composite_graphs(self, small_cases):
        summary = GradCheckSuite(seed=5, trials=1).run(
            inject_sign_flip="matmul", cases=small_cases
        )
        assert {"op:matmul", "module:linear"} <= set(summary.failures)

    def test_same_seed_same_errors(self, small_cases):
        first = GradCheckSuite(seed=9, trials=1).check(small_cases[0])
        second = GradCheckSuite(seed=9, trials=1).check(small_cases[0])
        assert [e.max_rel_error for e in first.entries] == [
            e.max_rel_error for e in second.entries
        ]

    @pytest.mark.slow
    def test_full_suite_passes(self):
        assert run_gradcheck(seed=0, trials=3).passed


@pytest.mark.unit
class TestGradCheckPrimitive:
    def test_relative_error_floors_denominator_at_one(self):
        err = relative_error(np.array([0.0, 100.0]), np.array([1e-6, 101.0]))
        np.testing.assert_allclose(err, [1e-6, 1.0 / 101.0])

    def test_wrong_gradient_fails(self):
        x = Tensor([0.5, -1.5], requires_grad=True)

        def f():
            return ops.sum(ops.mul(x, x))

        report = grad_check(f, [("x", x)])
        assert report.passed
        with sign_flipped("mul"):
            assert not grad_check(f, [("x", x)]).passed

    def test_nan_gradient_reports_location(self):
        x = Tensor([1.0, np.nan], requires_grad=True)
        report = grad_check(lambda: ops.sum(ops.mul(x, x)), [("x", x)], label="nan")
        entry = report.entries[0]
        assert not entry.passed
        assert entry.nan_location is not None
        assert math.isnan(entry.max_rel_error)

    def test_parameters_are_restored(self):
        x = Tensor([0.25, 0.75], requires_grad=True)
        grad_check(lambda: ops.sum(ops.mul(x, x)), [("x", x)])
        np.testing.assert_array_equal(x.data, [0.25, 0.75])

    def test_custom_case_runs_through_suite(self):
        def build(rng):
            w = Tensor(rng.normal(size=(2, 2)), requires_grad=True)
            return (lambda: ops.sum(ops.relu(w @ w) * 0.0 + w)), [("w", w)]

        summary = GradCheckSuite(trials=1).run(cases=[GradCheckCase("custom", build, 1e-4)])
        assert summary.passed
