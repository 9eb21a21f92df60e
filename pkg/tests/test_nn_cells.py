import numpy as np
import pytest

from src.autodiff import ops
from src.autodiff.gradcheck import grad_check
from src.autodiff.tensor import Tensor
from src.nn.attention import AttentionParams, attend, attention_param_shapes, attention_weights, context_vector
from src.nn.cells import (
    GRU_PARAM_NAMES,
    LSTM_PARAM_NAMES,
    GruCell,
    GruParams,
    LstmCell,
    LstmParams,
    LstmState,
    build_cell,
    gru_param_shapes,
    gru_step,
    init_uniform,
    lstm_param_shapes,
    lstm_step,
    unroll,
)
from src.utils.exceptions import DimensionError, UsageError

from scalar_reference import scalar_attention, scalar_gru, scalar_lstm

D_IN, D_H = 3, 4


def lstm_tensors(rng, scale=1.0):
    return {n: Tensor(a * scale) for n, a in init_uniform(rng, lstm_param_shapes(D_IN, D_H), D_H).items()}


def gru_tensors(rng, scale=1.0):
    return {n: Tensor(a * scale) for n, a in init_uniform(rng, gru_param_shapes(D_IN, D_H), D_H).items()}


class TestInit:
    def test_uniform_range(self, rng):
        arrays = init_uniform(rng, lstm_param_shapes(D_IN, D_H), D_H)
        k = 1 / np.sqrt(D_H)
        assert set(arrays) == set(LSTM_PARAM_NAMES)
        assert all(np.all(np.abs(a) <= k) for a in arrays.values())

    def test_shapes(self):
        assert lstm_param_shapes(3, 4)["U_i"] == (3, 4)
        assert lstm_param_shapes(3, 4)["W_g"] == (4, 4)
        assert gru_param_shapes(3, 4)["W_hx"] == (3, 4)
        assert set(gru_param_shapes(3, 4)) == set(GRU_PARAM_NAMES)


class TestLstm:
    def test_zero_params_halve_cell_state(self, rng):
        zeros = {n: Tensor(np.zeros(s)) for n, s in lstm_param_shapes(D_IN, D_H).items()}
        cell = LstmCell(LstmParams(**zeros))
        prev = LstmState(h=Tensor(np.ones(D_H)), c=Tensor(np.full(D_H, 2.0)))
        state, trace = cell.step(Tensor(rng.standard_normal(D_IN)), prev)
        # All gates are 0.5 and the candidate is 0: c = 0.5 * c_prev.
        np.testing.assert_allclose(state.c.data, np.ones(D_H))
        np.testing.assert_allclose(state.h.data, 0.5 * np.tanh(1.0) * np.ones(D_H))
        np.testing.assert_allclose(trace.i, 0.5)

    def test_matches_scalar_loop(self, rng):
        tensors = lstm_tensors(rng)
        arrays = {n: t.data for n, t in tensors.items()}
        for _ in range(10):
            x, h, c = rng.standard_normal(D_IN), rng.standard_normal(D_H), rng.standard_normal(D_H)
            state, _ = lstm_step(Tensor(x), LstmState(h=Tensor(h), c=Tensor(c)), LstmParams(**tensors))
            expected_h, expected_c = scalar_lstm(x, h, c, arrays)
            np.testing.assert_allclose(state.h.data, expected_h, rtol=0, atol=1e-12)
            np.testing.assert_allclose(state.c.data, expected_c, rtol=0, atol=1e-12)

    def test_saturated_forget_gate_keeps_memory(self, rng):
        tensors = {n: Tensor(np.zeros(s)) for n, s in lstm_param_shapes(D_IN, D_H).items()}
        tensors["b_f"] = Tensor(np.full(D_H, 20.0))
        tensors["b_i"] = Tensor(np.full(D_H, -20.0))
        params = LstmParams(**tensors)
        c0 = rng.uniform(-0.3, 0.3, size=D_H)
        state = LstmState(h=Tensor(np.zeros(D_H)), c=Tensor(c0))
        for _ in range(10):
            state, _ = lstm_step(Tensor(rng.standard_normal(D_IN)), state, params)
        np.testing.assert_allclose(state.c.data, c0, rtol=0, atol=1e-8)

    def test_gate_ranges(self, rng):
        cell = build_cell("lstm", lstm_tensors(rng, scale=5.0))
        _, _, traces = unroll(cell, Tensor(rng.standard_normal((6, D_IN)) * 3))
        for trace in traces:
            for gate in trace.sigmoid_gates():
                assert np.all((gate >= 0) & (gate <= 1))
            for out in trace.tanh_outputs():
                assert np.all(np.abs(out) <= 1)

    def test_wrong_input_width(self, rng):
        cell = build_cell("lstm", lstm_tensors(rng))
        with pytest.raises(DimensionError):
            cell.step(Tensor(np.ones(D_IN + 1)), cell.zero_state())

    def test_gradients(self, rng):
        names = list(LSTM_PARAM_NAMES)
        inputs = {n: t.data for n, t in lstm_tensors(rng).items()}
        inputs["xs"] = rng.standard_normal((3, D_IN))

        def program(t):
            cell = LstmCell(LstmParams(**{n: t[n] for n in names}))
            states, final, _ = unroll(cell, t["xs"])
            return ops.add(ops.sum(states), ops.sum(final.c))

        assert grad_check(program, inputs) < 1e-6


class TestGru:
    def test_zero_params_halve_hidden_state(self, rng):
        zeros = {n: Tensor(np.zeros(s)) for n, s in gru_param_shapes(D_IN, D_H).items()}
        cell = GruCell(GruParams(**zeros))
        h, trace = cell.step(Tensor(rng.standard_normal(D_IN)), Tensor(np.full(D_H, 0.8)))
        np.testing.assert_allclose(h.data, np.full(D_H, 0.4))
        np.testing.assert_allclose(trace.z, 0.5)

    def test_gradients(self, rng):
        names = list(GRU_PARAM_NAMES)
        inputs = {n: t.data for n, t in gru_tensors(rng).items()}
        inputs["xs"] = rng.standard_normal((3, D_IN))

        def program(t):
            cell = GruCell(GruParams(**{n: t[n] for n in names}))
            states, _, _ = unroll(cell, t["xs"])
            return ops.sum(ops.tanh(states))

        assert grad_check(program, inputs) < 1e-6

    def test_matches_scalar_loop(self, rng):
        tensors = gru_tensors(rng)
        arrays = {n: t.data for n, t in tensors.items()}
        for _ in range(10):
            x, h = rng.standard_normal(D_IN), rng.standard_normal(D_H)
            out, _ = gru_step(Tensor(x), Tensor(h), GruParams(**tensors))
            np.testing.assert_allclose(out.data, scalar_gru(x, h, arrays), rtol=0, atol=1e-12)

    def test_unknown_kind(self, rng):
        with pytest.raises(UsageError) as excinfo:
            build_cell("rnn", gru_tensors(rng))
        assert excinfo.value.exit_code == 1


class TestUnroll:
    @pytest.mark.parametrize("kind", ["lstm", "gru"])
    def test_causality(self, kind, rng):
        tensors = lstm_tensors(rng) if kind == "lstm" else gru_tensors(rng)
        cell = build_cell(kind, tensors)
        xs = rng.standard_normal((5, D_IN))
        changed = xs.copy()
        changed[3:] += 1.0
        a, _, _ = unroll(cell, Tensor(xs))
        b, _, _ = unroll(cell, Tensor(changed))
        np.testing.assert_array_equal(a.data[:3], b.data[:3])
        assert not np.allclose(a.data[3:], b.data[3:])

    @pytest.mark.parametrize("kind", ["lstm", "gru"])
    def test_single_row_is_one_step(self, kind, rng):
        tensors = lstm_tensors(rng) if kind == "lstm" else gru_tensors(rng)
        cell = build_cell(kind, tensors)
        x = rng.standard_normal(D_IN)
        states, final, _ = unroll(cell, Tensor(x[None, :]))
        stepped, _ = cell.step(Tensor(x), cell.zero_state())
        np.testing.assert_array_equal(states.data[0], cell.hidden(stepped).data)
        np.testing.assert_array_equal(cell.hidden(final).data, cell.hidden(stepped).data)

    def test_requires_matrix(self, rng):
        cell = build_cell("gru", gru_tensors(rng))
        with pytest.raises(DimensionError):
            unroll(cell, Tensor(np.ones(D_IN)))


def attention_params(rng, d_h=D_H, d_a=3):
    return AttentionParams(**{n: Tensor(rng.standard_normal(s)) for n, s in attention_param_shapes(d_h, d_a).items()})


class TestAttention:
    def test_weights_normalized_and_context_in_hull(self, rng):
        for _ in range(1000):
            T = int(rng.integers(1, 8))
            H = Tensor(rng.standard_normal((T, D_H)) * 3)
            s = Tensor(rng.standard_normal(D_H) * 3)
            context, weights = attend(s, H, attention_params(rng))
            assert abs(weights.sum() - 1.0) < 1e-12
            assert np.all(weights >= 0)
            assert np.all(context.data >= H.data.min(axis=0) - 1e-12)
            assert np.all(context.data <= H.data.max(axis=0) + 1e-12)

    def test_matches_scalar_loop(self, rng):
        p = attention_params(rng)
        s, H = rng.standard_normal(D_H), rng.standard_normal((5, D_H))
        context, weights = attend(Tensor(s), Tensor(H), p)
        expected_weights, expected_context = scalar_attention(s, H, p.W_dec.data, p.W_enc.data, p.v.data)
        np.testing.assert_allclose(weights, expected_weights, rtol=0, atol=1e-12)
        np.testing.assert_allclose(context.data, expected_context, rtol=0, atol=1e-12)

    def test_permutation_equivariance(self, rng):
        p = attention_params(rng)
        s, H = rng.standard_normal(D_H), rng.standard_normal((6, D_H))
        order = rng.permutation(6)
        context, weights = attend(Tensor(s), Tensor(H), p)
        shuffled_context, shuffled_weights = attend(Tensor(s), Tensor(H[order]), p)
        np.testing.assert_allclose(shuffled_weights, weights[order], rtol=0, atol=1e-12)
        np.testing.assert_allclose(shuffled_context.data, context.data, rtol=0, atol=1e-12)

    def test_zero_scorer_gives_mean(self, rng):
        p = AttentionParams(W_dec=Tensor(rng.standard_normal((D_H, 3))), W_enc=Tensor(rng.standard_normal((D_H, 3))),
                            v=Tensor(np.zeros(3)))
        H = Tensor(rng.standard_normal((4, D_H)))
        context, weights = attend(Tensor(rng.standard_normal(D_H)), H, p)
        np.testing.assert_allclose(weights, np.full(4, 0.25))
        np.testing.assert_allclose(context.data, H.data.mean(axis=0))

    def test_single_encoder_step(self, rng):
        H = Tensor(rng.standard_normal((1, D_H)))
        context, weights = attend(Tensor(rng.standard_normal(D_H)), H, attention_params(rng))
        np.testing.assert_array_equal(weights, [1.0])
        np.testing.assert_allclose(context.data, H.data[0])

    def test_shape_errors(self, rng):
        H = Tensor(rng.standard_normal((4, D_H)))
        with pytest.raises(DimensionError):
            attention_weights(Tensor(np.ones(D_H + 1)), H, attention_params(rng))
        with pytest.raises(DimensionError):
            attention_weights(Tensor(np.ones(D_H)), H, attention_params(rng, d_h=D_H + 1))

    def test_context_requires_normalized_weights(self, rng):
        with pytest.raises(UsageError):
            context_vector(Tensor([0.5, 0.6]), Tensor(rng.standard_normal((2, D_H))))

    def test_gradients(self, rng):
        p = attention_params(rng)
        inputs = {"W_dec": p.W_dec.data, "W_enc": p.W_enc.data, "v": p.v.data,
                  "s": rng.standard_normal(D_H), "H": rng.standard_normal((5, D_H))}

        def program(t):
            params = AttentionParams(W_dec=t["W_dec"], W_enc=t["W_enc"], v=t["v"])
            context, _ = attend(t["s"], t["H"], params)
            return ops.sum(ops.tanh(context))

        assert grad_check(program, inputs) < 1e-6
