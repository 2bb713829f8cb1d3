"""Memory, audio bridging and the transformer building blocks."""

import math

import numpy as np
import pytest

from akvsr.errors import (
    ContractError,
    DimensionError,
    ParameterError,
    SlotIndexError,
)
from akvsr.nn import (
    AbmLayer,
    AbmStack,
    CompactAudioMemory,
    DecoderStack,
    EncoderStack,
    Linear,
    Vocab,
    causal_mask,
    init_memory,
    sinusoidal_positions,
)
from akvsr.tensor import Tensor, backward
from akvsr.tensor import ops
from akvsr.test_utils.factories import tiny_vocab


def _layer_norm(x, eps):
    centered = x - x.mean(axis=-1, keepdims=True)
    return centered / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)


def _softmax(z):
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _abm_by_loops(f_v, slots, layer):
    """One single-head ABM layer, frame by frame and slot by slot."""
    f, m = f_v.tolist(), slots.tolist()
    wq, wk, wv, wo = (w.data.tolist() for w in (layer.wq, layer.wk, layer.wv, layer.wo))
    gamma, beta = layer.ln.gamma.data.tolist(), layer.ln.beta.data.tolist()
    d, d_k, d_v = len(f[0]), len(wq[0]), len(wv[0])

    def project(row, w, width):
        return [sum(row[i] * w[i][a] for i in range(len(row))) for a in range(width)]

    keys = [project(slot, wk, d_k) for slot in m]
    values = [project(slot, wv, d_v) for slot in m]
    out = []
    for frame in f:
        query = project(frame, wq, d_k)
        logits = [sum(query[a] * key[a] for a in range(d_k)) / layer.tau for key in keys]
        top = max(logits)
        weights = [math.exp(z - top) for z in logits]
        total = sum(weights)
        weights = [w / total for w in weights]
        recalled = [sum(weights[j] * values[j][c] for j in range(len(m))) for c in range(d_v)]
        row = [frame[o] + sum(recalled[c] * wo[c][o] for c in range(d_v)) for o in range(d)]
        mu = sum(row) / d
        var = sum((x - mu) ** 2 for x in row) / d
        scale = math.sqrt(var + layer.ln.eps)
        out.append([(x - mu) / scale * gamma[o] + beta[o] for o, x in enumerate(row)])
    return np.array(out)


@pytest.mark.unit
class TestMemory:
    def test_lookup_gathers_rows(self):
        memory = init_memory(4, 8, seed=0)
        out = memory.lookup([3, 0, 3])
        np.testing.assert_array_equal(out.data, memory.slots.data[[3, 0, 3]])

    @pytest.mark.parametrize("labels,frame,label", [([0, 4, 1], 1, 4), ([-1], 0, -1)])
    def test_out_of_range_label(self, labels, frame, label):
        with pytest.raises(SlotIndexError) as info:
            init_memory(4, 8, seed=0).lookup(labels)
        assert (info.value.frame, info.value.label) == (frame, label)

    def test_freeze_is_a_read_only_copy(self):
        memory = init_memory(4, 8, seed=1)
        frozen = memory.freeze()
        assert frozen.frozen and not memory.frozen
        np.testing.assert_array_equal(frozen.slots.data, memory.slots.data)
        frozen.slots.data[0, 0] = 99.0
        assert memory.slots.data[0, 0] != 99.0
        assert frozen.trainable_parameters() == []

    def test_frozen_slots_get_no_gradient(self):
        memory = init_memory(4, 8, seed=1).freeze()
        weight = Tensor(np.ones((8, 2)), requires_grad=True)
        leaves = backward(ops.sum(memory.lookup([0, 1]) @ weight))
        assert memory.slots not in leaves
        assert memory.slots.grad is None
        assert weight.grad is not None

    def test_unfrozen_copy_trains(self):
        memory = init_memory(4, 8, seed=1).freeze().unfrozen()
        backward(ops.sum(memory.lookup([2, 2])))
        np.testing.assert_array_equal(memory.slots.grad[2], np.full(8, 2.0))

    def test_zero_memory(self):
        memory = CompactAudioMemory.zeros(5, 8)
        assert memory.frozen and memory.num_slots == 5 and memory.dim == 8
        assert not memory.slots.data.any()

    @pytest.mark.parametrize("slots,dim", [(1, 8), (4, 7)])
    def test_init_bounds(self, slots, dim):
        with pytest.raises(ParameterError):
            init_memory(slots, dim, seed=0)

    def test_init_scale_and_determinism(self):
        a, b = init_memory(64, 16, seed=5), init_memory(64, 16, seed=5)
        np.testing.assert_array_equal(a.slots.data, b.slots.data)
        assert a.slots.data.std() == pytest.approx(0.02, rel=0.15)

    def test_slots_must_be_finite(self):
        with pytest.raises(ParameterError):
            CompactAudioMemory(Tensor([[np.inf] * 8, [0.0] * 8]))


@pytest.mark.unit
class TestAbm:
    @pytest.fixture
    def memory(self):
        return init_memory(5, 8, seed=2).freeze()

    @pytest.mark.parametrize("seed", range(100))
    def test_single_head_matches_scalar_loops(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.choice([8, 12, 16]))
        frames, slots = int(rng.integers(1, 7)), int(rng.integers(2, 9))
        d_k, d_v = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        memory = CompactAudioMemory(Tensor(rng.normal(size=(slots, d)))).freeze()
        layer = AbmLayer(rng, d, d_k, d_v, heads=1, std=0.5)
        layer.ln.gamma.data[...] = rng.uniform(0.5, 1.5, size=d)
        layer.ln.beta.data[...] = rng.normal(size=d)
        f_v = rng.normal(size=(frames, d))
        out = layer(Tensor(f_v), memory).data
        expected = _abm_by_loops(f_v, memory.slots.data, layer)
        np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("heads", [1, 2])
    def test_frame_permutation_equivariance(self, rng, memory, heads):
        stack = AbmStack(rng, 2, 8, 8, 8, heads=heads, std=0.5)
        f_v = rng.normal(size=(6, 8))
        order = rng.permutation(6)
        out = stack(Tensor(f_v), memory).data
        permuted = stack(Tensor(f_v[order]), memory).data
        np.testing.assert_allclose(permuted, out[order], atol=1e-12)

    def test_scores_are_distributions_over_slots(self, rng, memory):
        layer = AbmLayer(rng, 8, 8, 8, heads=2)
        scores = layer.attention_scores(Tensor(rng.normal(size=(4, 8))), memory).data
        assert scores.shape == (2, 4, 5)
        assert (scores >= 0).all()
        np.testing.assert_allclose(scores.sum(axis=-1), 1.0, atol=1e-12)

    def test_zero_output_projection_gives_layer_norm(self, rng, memory):
        layer = AbmLayer(rng, 8, 8, 8)
        layer.wo.data[...] = 0.0
        f_v = rng.normal(size=(3, 8))
        np.testing.assert_allclose(
            layer(Tensor(f_v), memory).data, _layer_norm(f_v, layer.ln.eps), atol=1e-12
        )

    def test_output_keeps_visual_length(self, rng, memory):
        stack = AbmStack(rng, 2, 8, 8, 8, heads=2)
        for frames in (1, 7):
            assert stack(Tensor(rng.normal(size=(frames, 8))), memory).shape == (frames, 8)

    def test_depth_zero_is_identity(self, rng, memory):
        stack = AbmStack(rng, 0, 8, 8, 8)
        f_v = Tensor(rng.normal(size=(3, 8)))
        assert stack(f_v, memory) is f_v
        assert stack.depth == 0 and stack.trace(f_v, memory) == []

    def test_layers_have_independent_weights(self, rng):
        stack = AbmStack(rng, 2, 8, 8, 8)
        names = [n for n, _ in stack.named_parameters()]
        assert "layer0.wq" in names and "layer1.wq" in names
        assert not np.array_equal(stack.layers[0].wq.data, stack.layers[1].wq.data)

    def test_trace_matches_forward(self, rng, memory):
        stack = AbmStack(rng, 2, 8, 8, 8, heads=2)
        f_v = Tensor(rng.normal(size=(3, 8)))
        trace = stack.trace(f_v, memory)
        assert len(trace) == 2 and trace[0].shape == (2, 3, 5)
        first = stack.layers[0].attention_scores(f_v, memory).data
        np.testing.assert_array_equal(trace[0], first)

    def test_gradient_flows_to_visual_not_frozen_memory(self, rng, memory):
        layer = AbmLayer(rng, 8, 8, 8)
        f_v = Tensor(rng.normal(size=(3, 8)), requires_grad=True)
        backward(ops.sum(ops.mul(layer(f_v, memory), Tensor(rng.normal(size=(3, 8))))))
        assert f_v.grad is not None and layer.wq.grad is not None
        assert memory.slots.grad is None

    def test_dimension_and_parameter_errors(self, rng, memory):
        with pytest.raises(ParameterError):
            AbmLayer(rng, 8, 6, 8, heads=4)
        with pytest.raises(ParameterError):
            AbmLayer(rng, 8, 8, 8, tau=0.0)
        with pytest.raises(ParameterError):
            AbmStack(rng, -1, 8, 8, 8)
        with pytest.raises(DimensionError):
            AbmLayer(rng, 8, 8, 8)(Tensor(np.zeros((3, 4))), memory)


@pytest.mark.unit
class TestVocab:
    def test_special_ids(self):
        vocab = Vocab(phonemes=["a", "b", "c"])
        assert (vocab.blank, vocab.bos, vocab.eos, vocab.pad) == (0, 4, 5, 6)
        assert vocab.size == 7 and vocab.ctc_size == 4

    def test_encode_decode(self):
        vocab = Vocab(phonemes=["a", "b", "c"])
        assert vocab.encode(["c", "a"]) == [3, 1]
        assert vocab.decode([3, 1]) == ["c", "a"]
        with pytest.raises(ContractError):
            vocab.encode(["z"])
        with pytest.raises(ContractError):
            vocab.decode([vocab.eos])


@pytest.mark.unit
class TestTransformer:
    def test_positions_table(self):
        table = sinusoidal_positions(4, 6)
        assert table.shape == (4, 6)
        np.testing.assert_array_equal(table[0, 0::2], 0.0)
        np.testing.assert_array_equal(table[0, 1::2], 1.0)

    def test_causal_mask(self):
        mask = causal_mask(3)
        assert mask[0, 0] == 0 and mask[2, 0] == 0
        assert mask[0, 1] < -1e29 and mask[1, 2] < -1e29

    def test_zero_layer_encoder_is_identity(self, rng):
        x = Tensor(rng.normal(size=(3, 8)))
        assert EncoderStack(rng, 8, 2, 16, 0)(x) is x

    def test_encoder_shape_and_error(self, rng):
        encoder = EncoderStack(rng, 8, 2, 16, 2)
        assert encoder(Tensor(rng.normal(size=(5, 8)))).shape == (5, 8)
        with pytest.raises(DimensionError):
            encoder(Tensor(np.zeros((5, 4))))
        assert "layer1.attn.wq" in dict(encoder.named_parameters())

    def test_encoder_without_positions_is_frame_equivariant(self, rng):
        encoder = EncoderStack(rng, 8, 2, 16, 2, std=0.3, use_positions=False)
        x = rng.normal(size=(5, 8))
        order = np.array([3, 0, 4, 1, 2])
        out = encoder(Tensor(x)).data
        np.testing.assert_allclose(encoder(Tensor(x[order])).data, out[order], atol=1e-12)
        # positions break the symmetry
        with_positions = EncoderStack(rng, 8, 2, 16, 2, std=0.3)
        assert not np.allclose(
            with_positions(Tensor(x[order])).data, with_positions(Tensor(x)).data[order]
        )

    def test_decoder_is_causal(self, rng):
        vocab = tiny_vocab(4)
        decoder = DecoderStack(rng, vocab, 8, 2, 16, 2, std=0.3)
        enc = Tensor(rng.normal(size=(4, 8)))
        a = decoder.decode([vocab.bos, 1, 2, 3], enc).data
        b = decoder.decode([vocab.bos, 1, 4, 4], enc).data
        np.testing.assert_allclose(a[:2], b[:2], atol=1e-12)
        assert not np.allclose(a[2:], b[2:])

    def test_decoder_contract(self, rng):
        vocab = tiny_vocab(2)
        decoder = DecoderStack(rng, vocab, 8, 2, 16, 1)
        enc = Tensor(np.zeros((2, 8)))
        with pytest.raises(ContractError):
            decoder.decode([], enc)
        with pytest.raises(ContractError):
            decoder.decode([1], enc)
        with pytest.raises(ParameterError):
            decoder.greedy_decode(enc, 0)

    def test_greedy_decode_only_emits_phonemes(self, rng):
        vocab = tiny_vocab(3)
        decoder = DecoderStack(rng, vocab, 8, 2, 16, 1, std=1.0)
        for _ in range(5):
            tokens = decoder.greedy_decode(Tensor(rng.normal(size=(3, 8))), max_len=6)
            assert len(tokens) <= 6
            assert all(1 <= t <= vocab.num_phonemes for t in tokens)

    def test_linear_and_state_dict(self, rng):
        layer = Linear(rng, 3, 2, std=1.0)
        other = Linear(np.random.default_rng(99), 3, 2, std=1.0)
        other.load_state_dict(layer.state_dict())
        x = Tensor(rng.normal(size=(4, 3)))
        np.testing.assert_array_equal(layer(x).data, other(x).data)
        with pytest.raises(ContractError):
            other.load_state_dict({"w": layer.w.data})
        with pytest.raises(DimensionError):
            other.load_state_dict({"w": np.zeros((2, 2)), "b": np.zeros(2)})
