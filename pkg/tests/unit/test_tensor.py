"""Tensor core: forward values, graph recording and backward propagation."""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akvsr.errors import ContractError, DimensionError, ParameterError
from akvsr.tensor import (
    Tensor,
    backward,
    concat,
    gather_rows,
    layer_norm,
    log_softmax_rows,
    logsumexp,
    matmul,
    no_grad,
    shift,
    softmax_rows,
    stack,
)
from akvsr.tensor import ops
from akvsr.test_utils.factories import TensorFactory

finite_rows = st.lists(
    st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=1, max_size=6
)


def _mp_logsumexp(row):
    mpmath.mp.dps = 50
    return float(mpmath.log(mpmath.fsum(mpmath.exp(mpmath.mpf(v)) for v in row)))


@pytest.mark.unit
class TestForward:
    """Forward rules against numpy and high-precision oracles."""

    def test_matmul_matches_numpy(self, rng):
        a, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 4))
        np.testing.assert_array_equal(matmul(Tensor(a), Tensor(b)).data, a @ b)

    def test_matmul_names_both_shapes(self):
        with pytest.raises(DimensionError) as info:
            matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))
        assert info.value.shapes == [(2, 3), (4, 2)]
        assert "(2, 3)" in str(info.value) and "(4, 2)" in str(info.value)

    def test_rowwise_broadcast_only(self):
        out = ops.add(Tensor(np.ones((2, 3))), Tensor(np.arange(3.0)))
        np.testing.assert_array_equal(out.data, [[1, 2, 3], [1, 2, 3]])
        with pytest.raises(DimensionError):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones(2)))

    @pytest.mark.property
    @settings(max_examples=100, deadline=None)
    @given(row=finite_rows, scale=st.floats(min_value=0.1, max_value=10))
    def test_softmax_matches_high_precision(self, row, scale):
        out = softmax_rows(Tensor([row]), scale=scale).data[0]
        mpmath.mp.dps = 50
        exps = [mpmath.exp(mpmath.mpf(v) / mpmath.mpf(scale)) for v in row]
        total = mpmath.fsum(exps)
        expected = np.array([float(e / total) for e in exps])
        np.testing.assert_allclose(out, expected, rtol=1e-10, atol=1e-15)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.property
    @settings(max_examples=100, deadline=None)
    @given(row=finite_rows)
    def test_logsumexp_matches_high_precision(self, row):
        assert logsumexp(Tensor(row), axis=0).item() == pytest.approx(
            _mp_logsumexp(row), rel=1e-12, abs=1e-12
        )

    def test_softmax_is_stable_for_large_logits(self):
        out = softmax_rows(Tensor([[1000.0, 1000.0, -1000.0]])).data
        np.testing.assert_allclose(out, [[0.5, 0.5, 0.0]])

    def test_softmax_rejects_non_positive_scale(self):
        with pytest.raises(ParameterError):
            softmax_rows(Tensor([[1.0, 2.0]]), scale=0.0)

    def test_log_softmax_rows_are_log_distributions(self, rng):
        out = log_softmax_rows(Tensor(rng.normal(size=(4, 5)) * 30)).data
        np.testing.assert_allclose(np.logaddexp.reduce(out, axis=1), 0.0, atol=1e-12)

    def test_logsumexp_absorbs_negative_infinity(self):
        x = Tensor([[-np.inf, 0.0], [-np.inf, -np.inf]], requires_grad=True)
        out = logsumexp(x, axis=1)
        assert out.data[0] == 0.0
        assert out.data[1] == -np.inf
        backward(ops.sum(ops.index(out, 0)))
        np.testing.assert_array_equal(x.grad, [[0.0, 1.0], [0.0, 0.0]])

    def test_logsumexp_empty_axis(self):
        with pytest.raises(DimensionError):
            logsumexp(Tensor(np.zeros((2, 0))), axis=1)

    def test_layer_norm_rows_are_standardized(self, rng):
        x = Tensor(rng.normal(3.0, 2.0, size=(4, 6)))
        out = layer_norm(x, Tensor(np.ones(6)), Tensor(np.zeros(6))).data
        np.testing.assert_allclose(out.mean(axis=1), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.var(axis=1), 1.0, atol=1e-4)

    def test_layer_norm_rejects_bad_eps(self):
        with pytest.raises(ParameterError):
            layer_norm(Tensor(np.ones((1, 2))), Tensor(np.ones(2)), Tensor(np.zeros(2)), eps=0)

    def test_shift_pads_with_fill(self):
        out = shift(Tensor([1.0, 2.0, 3.0]), 2, fill=-1.0).data
        np.testing.assert_array_equal(out, [-1.0, -1.0, 1.0])

    def test_stack_and_concat_shapes(self):
        a, b = Tensor(np.zeros((2, 3))), Tensor(np.ones((2, 3)))
        assert stack([a, b], axis=0).shape == (2, 2, 3)
        assert concat([a, b], axis=-1).shape == (2, 6)
        with pytest.raises(DimensionError):
            stack([a, Tensor(np.zeros((3, 3)))])

    def test_primitives_keep_values_finite(self, rng):
        x = Tensor(rng.normal(size=(3, 4)) * 100)
        for out in (softmax_rows(x), log_softmax_rows(x), logsumexp(x)):
            assert np.isfinite(out.data).all()


@pytest.mark.unit
class TestGraph:
    """Node recording and reverse-mode propagation."""

    def test_constants_record_no_node(self):
        out = ops.add(Tensor([1.0]), Tensor([2.0]))
        assert out.node is None and not out.requires_grad

    def test_no_grad_suppresses_recording(self):
        x = TensorFactory.create(2, 2)
        with no_grad():
            out = x @ x
        assert out.node is None
        assert (x @ x).node is not None

    def test_gradient_shapes_match_values(self, rng):
        w = TensorFactory.create(3, 4)
        b = TensorFactory.create(4)
        x = Tensor(rng.normal(size=(5, 3)))
        leaves = backward(ops.sum(ops.add(x @ w, b)))
        assert w.grad.shape == w.shape and b.grad.shape == b.shape
        assert set(leaves) == {w, b}

    def test_backward_needs_scalar_root(self):
        with pytest.raises(ContractError):
            backward(TensorFactory.create(2, 2))

    def test_shared_subexpression_accumulates(self):
        x = Tensor([3.0], requires_grad=True)
        y = ops.mul(x, x)
        backward(ops.sum(ops.add(y, y)))
        np.testing.assert_allclose(x.grad, [12.0])

    def test_leaf_gradients_accumulate_across_passes(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        backward(ops.sum(x))
        backward(ops.sum(x))
        np.testing.assert_array_equal(x.grad, [2.0, 2.0])
        x.zero_grad()
        assert x.grad is None

    def test_gather_rows_accumulates_repeats(self):
        table = Tensor(np.zeros((3, 2)), requires_grad=True)
        backward(ops.sum(gather_rows(table, [0, 2, 2])))
        np.testing.assert_array_equal(table.grad, [[1, 1], [0, 0], [2, 2]])

    def test_item_needs_single_element(self):
        assert Tensor([[4.0]]).item() == 4.0
        with pytest.raises(ContractError):
            Tensor([1.0, 2.0]).item()
