"""
Forecaster building blocks: gradients, recurrent oracles and simplex checks
"""

import math

import numpy as np
import pytest

from ftbal.common.rng import RngStream
from ftbal.errors import DimensionError
from ftbal.forecast.components import (
    GRU_KEYS,
    LSTM_KEYS,
    attention,
    attention_backward,
    causal_mask,
    gate,
    gate_backward,
    gru_step,
    gru_step_backward,
    lstm_step,
    lstm_step_backward,
    variable_select,
    variable_select_backward,
)
from ftbal.nn.gradcheck import finite_diff_check
from ftbal.nn.parameter import Parameter


def _sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def gru_reference(h, x, p):
    """Scalar-loop GRU step"""
    a = list(h) + list(x)
    n_h = len(h)

    def affine(W, b, vec, j):
        return sum(vec[k] * W[k][j] for k in range(len(vec))) + b[0][j]

    z = [_sig(affine(p["W_z"], p["b_z"], a, j)) for j in range(n_h)]
    r = [_sig(affine(p["W_r"], p["b_r"], a, j)) for j in range(n_h)]
    a_h = [r[j] * h[j] for j in range(n_h)] + list(x)
    h_tilde = [math.tanh(affine(p["W_h"], p["b_h"], a_h, j)) for j in range(n_h)]
    return [(1.0 - z[j]) * h[j] + z[j] * h_tilde[j] for j in range(n_h)]


def lstm_reference(h, c, x, p):
    """Scalar-loop LSTM step"""
    a = list(h) + list(x)
    n_h = len(h)

    def affine(k, j):
        return sum(a[i] * p[f"W_{k}"][i][j] for i in range(len(a))) + p[f"b_{k}"][0][j]

    h_new, c_new = [], []
    for j in range(n_h):
        f = _sig(affine("f", j))
        i = _sig(affine("i", j))
        c_tilde = math.tanh(affine("c", j))
        o = _sig(affine("o", j))
        cj = f * c[j] + i * c_tilde
        c_new.append(cj)
        h_new.append(o * math.tanh(cj))
    return h_new, c_new


def _cell_params(keys, n_h, n_x, rng):
    params = {}
    for k in keys:
        shape = (n_h + n_x, n_h) if k.startswith("W") else (1, n_h)
        params[k] = rng.child(k).normal(0.0, 0.7, shape)
    return params


class TestRecurrentOracles:
    def test_gru_matches_scalar_reference(self):
        for case in range(100):
            rng = RngStream(case)
            p = _cell_params(GRU_KEYS, 3, 3, rng)
            h = rng.child("h").normal(size=3)
            x = rng.child("x").normal(size=3)
            out, _ = gru_step(h[None, :], x[None, :], p)
            assert np.max(np.abs(out[0] - np.array(gru_reference(h, x, p)))) < 1e-10

    def test_lstm_matches_scalar_reference(self):
        for case in range(100):
            rng = RngStream(1000 + case)
            p = _cell_params(LSTM_KEYS, 3, 3, rng)
            h = rng.child("h").normal(size=3)
            c = rng.child("c").normal(size=3)
            x = rng.child("x").normal(size=3)
            h_out, c_out, _ = lstm_step(h[None, :], c[None, :], x[None, :], p)
            h_ref, c_ref = lstm_reference(h, c, x, p)
            assert np.max(np.abs(h_out[0] - np.array(h_ref))) < 1e-10
            assert np.max(np.abs(c_out[0] - np.array(c_ref))) < 1e-10

    def test_gru_update_gate_closed_keeps_state(self, rng):
        p = _cell_params(GRU_KEYS, 3, 2, rng)
        p["W_z"][...] = 0.0
        p["b_z"][...] = -50.0
        h = rng.child("h").normal(size=(1, 3))
        out, _ = gru_step(h, rng.child("x").normal(size=(1, 2)), p)
        assert np.allclose(out, h, rtol=0.0, atol=1e-12)

    def test_gru_update_gate_open_takes_candidate(self, rng):
        p = _cell_params(GRU_KEYS, 3, 2, rng)
        p["W_z"][...] = 0.0
        p["b_z"][...] = 50.0
        h = rng.child("h").normal(size=(1, 3))
        x = rng.child("x").normal(size=(1, 2))
        out, _ = gru_step(h, x, p)
        r = 1.0 / (1.0 + np.exp(-(np.hstack([h, x]) @ p["W_r"] + p["b_r"])))
        h_tilde = np.tanh(np.hstack([r * h, x]) @ p["W_h"] + p["b_h"])
        assert np.allclose(out, h_tilde, rtol=0.0, atol=1e-12)

    def test_lstm_forget_open_input_closed_keeps_cell(self, rng):
        p = _cell_params(LSTM_KEYS, 3, 2, rng)
        p["W_f"][...] = 0.0
        p["b_f"][...] = 50.0
        p["W_i"][...] = 0.0
        p["b_i"][...] = -50.0
        c = rng.child("c").normal(size=(1, 3))
        _, c_out, _ = lstm_step(rng.child("h").normal(size=(1, 3)), c, rng.child("x").normal(size=(1, 2)), p)
        assert np.allclose(c_out, c, rtol=0.0, atol=1e-12)

    def test_lstm_forget_closed_input_open_takes_candidate(self, rng):
        p = _cell_params(LSTM_KEYS, 3, 2, rng)
        p["W_f"][...] = 0.0
        p["b_f"][...] = -50.0
        p["W_i"][...] = 0.0
        p["b_i"][...] = 50.0
        h = rng.child("h").normal(size=(1, 3))
        x = rng.child("x").normal(size=(1, 2))
        _, c_out, _ = lstm_step(h, rng.child("c").normal(size=(1, 3)), x, p)
        c_tilde = np.tanh(np.hstack([h, x]) @ p["W_c"] + p["b_c"])
        assert np.allclose(c_out, c_tilde, rtol=0.0, atol=1e-12)

    def test_gru_rejects_wrong_input_width(self):
        p = _cell_params(GRU_KEYS, 3, 3, RngStream(0))
        with pytest.raises(DimensionError):
            gru_step(np.zeros((1, 3)), np.zeros((1, 4)), p)


class TestRecurrentGradients:
    @pytest.mark.parametrize("case", range(20))
    def test_gru_step(self, case):
        rng = RngStream(50 + case)
        raw = _cell_params(GRU_KEYS, 3, 2, rng)
        params = {k: Parameter(v, name=k) for k, v in raw.items()}
        h = Parameter(rng.child("h").normal(size=(4, 3)), name="h")
        x = Parameter(rng.child("x").normal(size=(4, 2)), name="x")
        R = rng.child("r").normal(size=(4, 3))

        def f(backward):
            values = {k: p.value for k, p in params.items()}
            out, cache = gru_step(h.value, x.value, values)
            if backward:
                dh, dx, grads = gru_step_backward(R, cache, values)
                h.accumulate(dh)
                x.accumulate(dx)
                for k, g in grads.items():
                    params[k].accumulate(g)
            return float(np.sum(out * R))

        assert finite_diff_check(f, list(params.values()) + [h, x]) < 1e-4

    @pytest.mark.parametrize("case", range(20))
    def test_lstm_step(self, case):
        rng = RngStream(60 + case)
        raw = _cell_params(LSTM_KEYS, 3, 2, rng)
        params = {k: Parameter(v, name=k) for k, v in raw.items()}
        h = Parameter(rng.child("h").normal(size=(4, 3)), name="h")
        c = Parameter(rng.child("c").normal(size=(4, 3)), name="c")
        x = Parameter(rng.child("x").normal(size=(4, 2)), name="x")
        Rh = rng.child("rh").normal(size=(4, 3))
        Rc = rng.child("rc").normal(size=(4, 3))

        def f(backward):
            values = {k: p.value for k, p in params.items()}
            h_out, c_out, cache = lstm_step(h.value, c.value, x.value, values)
            if backward:
                dh, dc, dx, grads = lstm_step_backward(Rh, Rc, cache, values)
                h.accumulate(dh)
                c.accumulate(dc)
                x.accumulate(dx)
                for k, g in grads.items():
                    params[k].accumulate(g)
            return float(np.sum(h_out * Rh) + np.sum(c_out * Rc))

        assert finite_diff_check(f, list(params.values()) + [h, c, x]) < 1e-4


class TestGate:
    @pytest.mark.parametrize("case", range(20))
    def test_gradient(self, case):
        rng = RngStream(70 + case)
        x = Parameter(rng.child("x").normal(size=(5, 4)), name="x")
        W = Parameter(rng.child("W").normal(size=(4, 4)), name="W")
        b = Parameter(rng.child("b").normal(size=(1, 4)), name="b")
        R = rng.child("r").normal(size=(5, 4))

        def f(backward):
            out, cache = gate(x.value, W.value, b.value)
            if backward:
                dx, dW, db = gate_backward(R, cache, W.value)
                x.accumulate(dx)
                W.accumulate(dW)
                b.accumulate(db)
            return float(np.sum(out * R))

        assert finite_diff_check(f, [x, W, b]) < 1e-4

    def test_saturated_open_passes_input(self, rng):
        x = rng.normal(size=(4, 3))
        out, _ = gate(x, np.zeros((3, 3)), np.full((1, 3), 50.0))
        assert np.allclose(out, x, rtol=0.0, atol=1e-12)

    def test_saturated_closed_blocks_input(self, rng):
        x = rng.normal(size=(4, 3))
        out, _ = gate(x, np.zeros((3, 3)), np.full((1, 3), -50.0))
        assert np.max(np.abs(out)) < 1e-15

    def test_half_open_halves_input(self):
        out, _ = gate(np.array([[2.0]]), np.zeros((1, 1)), np.zeros((1, 1)))
        assert out[0, 0] == 1.0

    def test_output_bounded_by_input(self, rng):
        x = rng.normal(size=(6, 3))
        out, _ = gate(x, rng.normal(size=(3, 3)), np.zeros((1, 3)))
        assert np.all(np.abs(out) <= np.abs(x))


class TestVariableSelection:
    @pytest.mark.parametrize("case", range(20))
    def test_gradient(self, case):
        rng = RngStream(80 + case)
        emb = Parameter(rng.child("e").normal(size=(3, 5, 4)).reshape(15, 4), name="emb")
        w = Parameter(rng.child("w").normal(size=(4, 1)), name="w")
        offsets = Parameter(rng.child("o").normal(size=(3, 5)), name="offsets")
        R = rng.child("r").normal(size=(3, 4))

        def f(backward):
            weights, combined, cache = variable_select(emb.value.reshape(3, 5, 4), w.value, offsets.value)
            if backward:
                demb, dw, dscores = variable_select_backward(R, cache)
                emb.accumulate(demb.reshape(15, 4))
                w.accumulate(dw)
                offsets.accumulate(dscores)
            return float(np.sum(combined * R))

        assert finite_diff_check(f, [emb, w, offsets]) < 1e-4

    def test_hand_softmax(self):
        emb = np.array([[math.log(3.0)], [0.0]])
        weights, combined, _ = variable_select(emb, np.array([1.0]))
        assert weights == pytest.approx([0.75, 0.25], abs=1e-12)
        assert combined[0] == pytest.approx(0.75 * math.log(3.0), abs=1e-12)

    def test_equal_scores_give_uniform_weights(self, rng):
        weights, _, _ = variable_select(np.ones((2, 4, 3)), rng.normal(size=3))
        assert np.allclose(weights, 0.25, rtol=0.0, atol=1e-12)

    def test_dominant_score_takes_almost_all_weight(self):
        emb = np.array([[50.0], [0.0], [0.0]])
        weights, _, _ = variable_select(emb, np.array([1.0]))
        assert weights[0] > 0.999

    def test_backward_with_batch_dimensions(self, rng):
        emb = rng.normal(size=(2, 3, 4))
        weights, _, cache = variable_select(emb, rng.normal(size=4))
        demb, dw, dscores = variable_select_backward(np.ones((2, 4)), cache)
        assert demb.shape == (2, 3, 4)
        assert dscores.shape == (2, 3)
        assert dw.shape == (4, 1)
        expected = sum(dscores[b] @ emb[b] for b in range(2))
        assert np.allclose(dw[:, 0], expected, rtol=0.0, atol=1e-12)

    def test_weights_on_simplex(self, rng):
        weights, combined, _ = variable_select(rng.normal(size=(7, 6, 3)), rng.normal(size=3))
        assert np.all(weights >= 0.0)
        assert np.max(np.abs(weights.sum(axis=-1) - 1.0)) < 1e-9

    def test_single_variable_gets_all_weight(self, rng):
        emb = rng.normal(size=(4, 1, 3))
        weights, combined, _ = variable_select(emb, rng.normal(size=3))
        assert np.allclose(weights, 1.0)
        assert np.allclose(combined, emb[:, 0])

    def test_empty_feature_list(self, rng):
        with pytest.raises(DimensionError):
            variable_select(np.zeros((2, 0, 3)), rng.normal(size=3))


class TestAttention:
    @pytest.mark.parametrize("case", range(20))
    @pytest.mark.parametrize("causal", [True, False])
    def test_gradient(self, causal, case):
        rng = RngStream(90 + case)
        Q = Parameter(rng.child("q").normal(size=(3, 4)), name="Q")
        K = Parameter(rng.child("k").normal(size=(5, 4)), name="K")
        V = Parameter(rng.child("v").normal(size=(5, 2)), name="V")
        R = rng.child("r").normal(size=(3, 2))

        def f(backward):
            out, _, cache = attention(Q.value, K.value, V.value, causal)
            if backward:
                dQ, dK, dV = attention_backward(R, cache)
                Q.accumulate(dQ)
                K.accumulate(dK)
                V.accumulate(dV)
            return float(np.sum(out * R))

        assert finite_diff_check(f, [Q, K, V]) < 1e-4

    def test_single_step_returns_value(self, rng):
        V = rng.normal(size=(1, 3))
        out, weights, _ = attention(rng.normal(size=(1, 2)), rng.normal(size=(1, 2)), V)
        assert weights.tolist() == [[1.0]]
        assert np.array_equal(out, V)

    @pytest.mark.parametrize("causal", [True, False])
    def test_identical_keys_give_uniform_weights(self, rng, causal):
        K = np.tile(rng.normal(size=(1, 3)), (4, 1))
        _, weights, _ = attention(rng.normal(size=(4, 3)), K, rng.normal(size=(4, 2)), causal=causal)
        for i in range(4):
            visible = i + 1 if causal else 4
            assert np.allclose(weights[i, :visible], 1.0 / visible, rtol=0.0, atol=1e-12)

    def test_two_by_two_hand_case(self):
        eye = np.eye(2)
        _, weights, _ = attention(eye, eye, eye, causal=False)
        high = 1.0 / (1.0 + math.exp(-1.0 / math.sqrt(2.0)))
        assert weights[0] == pytest.approx([high, 1.0 - high], abs=1e-12)
        assert weights[1] == pytest.approx([1.0 - high, high], abs=1e-12)
        assert weights[0, 0] == pytest.approx(0.670, abs=1e-3)

    def test_rows_sum_to_one_and_causal_zeros(self, rng):
        x = rng.normal(size=(2, 6, 4))
        _, weights, _ = attention(x, x, x, causal=True)
        assert np.max(np.abs(weights.sum(axis=-1) - 1.0)) < 1e-9
        upper = np.triu(np.ones((6, 6), dtype=bool), k=1)
        assert np.all(weights[:, upper] == 0.0)

    def test_queries_align_with_last_keys(self):
        mask = causal_mask(2, 5)
        assert mask.tolist() == [
            [False, False, False, False, True],
            [False, False, False, False, False],
        ]

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            attention(rng.normal(size=(3, 4)), rng.normal(size=(5, 3)), rng.normal(size=(5, 2)))
