import numpy as np
import pytest

from ardlstm.errors import ShapeMismatch, TraceStale
from ardlstm.lstm import (
    GATES,
    LstmWeights,
    init_weights,
    lstm_backward,
    lstm_forward,
    mse_loss,
    sgd_step,
    train_lstm,
)


def make_weights(n_f, n_m, n_out, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    return LstmWeights(
        weights={g: scale * rng.standard_normal((n_f + n_m, n_m)) for g in GATES},
        biases={g: scale * rng.standard_normal(n_m) for g in GATES},
        w_y=scale * rng.standard_normal((1 + n_m, n_out)),
    )


def zero_weights(n_f, n_m, n_out):
    return LstmWeights(
        weights={g: np.zeros((n_f + n_m, n_m)) for g in GATES},
        biases={g: np.zeros(n_m) for g in GATES},
        w_y=np.zeros((1 + n_m, n_out)),
    )


def numerical_gradient(weights, inputs, targets, h=1e-6):
    """Central finite differences of the loss over every parameter entry."""
    def loss_of(w):
        return mse_loss(targets, lstm_forward(w, inputs).preds)

    grads = {"weights": {}, "biases": {}, "w_y": None}
    for g in GATES:
        for field, store in (("weights", grads["weights"]), ("biases", grads["biases"])):
            base = getattr(weights, field)[g]
            grad = np.zeros_like(base)
            for idx in np.ndindex(base.shape):
                w = weights.copy()
                getattr(w, field)[g][idx] = base[idx] + h
                lp = loss_of(w)
                getattr(w, field)[g][idx] = base[idx] - h
                lm = loss_of(w)
                grad[idx] = (lp - lm) / (2 * h)
            store[g] = grad
    grad = np.zeros_like(weights.w_y)
    for idx in np.ndindex(weights.w_y.shape):
        w = weights.copy()
        w.w_y[idx] = weights.w_y[idx] + h
        lp = loss_of(w)
        w.w_y[idx] = weights.w_y[idx] - h
        lm = loss_of(w)
        grad[idx] = (lp - lm) / (2 * h)
    grads["w_y"] = grad
    return grads


def assert_grads_close(analytic, numeric, rel=1e-5, abs_tol=1e-8):
    for g in GATES:
        np.testing.assert_allclose(analytic.weights[g], numeric["weights"][g],
                                   rtol=rel, atol=abs_tol)
        np.testing.assert_allclose(analytic.biases[g], numeric["biases"][g],
                                   rtol=rel, atol=abs_tol)
    np.testing.assert_allclose(analytic.w_y, numeric["w_y"], rtol=rel, atol=abs_tol)


class TestForward:
    def test_zero_weights_fixed_point(self):
        w = zero_weights(2, 3, 4)
        w.w_y[0, :] = np.array([1.0, 2.0, 3.0, 4.0])
        inputs = np.random.default_rng(0).standard_normal((5, 2, 2))
        trace = lstm_forward(w, inputs)
        for g in ("f", "z", "o"):
            assert np.all(trace.gates[g] == 0.5)
        assert np.all(trace.gates["c"] == 0.0)
        assert np.all(trace.cell == 0.0)
        assert np.all(trace.hidden == 0.0)
        assert np.array_equal(trace.preds[3, 1], [1.0, 2.0, 3.0, 4.0])

    def test_scalar_hand_evaluation(self):
        # pre-activations forced through the biases: f = z = o = sigmoid(20),
        # cell candidate = tanh(atanh(0.5)); one step from zero state gives
        # c = 0.5, h = tanh(0.5) up to sigmoid(20) saturation error
        w = zero_weights(1, 1, 1)
        for g in ("f", "z", "o"):
            w.biases[g][0] = 20.0
        w.biases["c"][0] = np.arctanh(0.5)
        trace = lstm_forward(w, np.zeros((1, 1, 1)))
        assert trace.cell[0, 0, 0] == pytest.approx(0.5, rel=1e-6)
        assert trace.hidden[0, 0, 0] == pytest.approx(np.tanh(0.5), rel=1e-6)

    def test_forget_gate_identity(self):
        # saturated forget gate and closed input gate: the cell is carried
        # through unchanged across both steps
        w = zero_weights(1, 2, 1)
        w.biases["f"][:] = 40.0
        w.biases["z"][:] = -40.0
        c0 = np.array([[0.7, -0.3]])
        trace = lstm_forward(w, np.zeros((2, 1, 1)), c0=c0)
        np.testing.assert_array_equal(trace.cell[1], trace.cell[0])
        np.testing.assert_allclose(trace.cell[0], c0, atol=1e-12)

    def test_shape_mismatch(self):
        w = make_weights(2, 3, 1)
        with pytest.raises(ShapeMismatch):
            lstm_forward(w, np.zeros((4, 2, 5)))

    def test_bounded_activations(self):
        w = make_weights(2, 4, 1, scale=2.0)
        trace = lstm_forward(w, np.random.default_rng(1).standard_normal((6, 3, 2)))
        for g in ("f", "z", "o"):
            assert np.all(trace.gates[g] > 0.0) and np.all(trace.gates[g] < 1.0)
        assert np.all(np.abs(trace.gates["c"]) < 1.0)
        assert np.all(np.isfinite(trace.cell))

    def test_saturated_activations_stay_in_closed_bounds(self):
        # float64 rounds extreme sigmoids onto the boundary, never past it
        w = make_weights(2, 4, 1, scale=50.0)
        trace = lstm_forward(w, np.random.default_rng(1).standard_normal((6, 3, 2)))
        for g in ("f", "z", "o"):
            assert np.all(trace.gates[g] >= 0.0) and np.all(trace.gates[g] <= 1.0)
        assert np.all(np.isfinite(trace.cell)) and np.all(np.isfinite(trace.hidden))


class TestLoss:
    def test_perfect_prediction(self):
        y = np.ones((3, 2, 2))
        assert mse_loss(y, y) == 0.0

    def test_definition(self):
        assert mse_loss(np.array([[[1.0]]]), np.array([[[0.0]]])) == 0.5

    def test_double_loop_oracle(self):
        rng = np.random.default_rng(2)
        y, p = rng.standard_normal((2, 4, 3, 2))
        total = 0.0
        for i in range(4):
            for b in range(3):
                for k in range(2):
                    total += 0.5 * (y[i, b, k] - p[i, b, k]) ** 2
        assert mse_loss(y, p) == pytest.approx(total, rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            mse_loss(np.zeros((2, 1, 1)), np.zeros((3, 1, 1)))


class TestBackward:
    def test_zero_residual_zero_gradients(self):
        w = make_weights(1, 2, 2, seed=3)
        inputs = np.random.default_rng(4).standard_normal((3, 2, 1))
        trace = lstm_forward(w, inputs)
        grads = lstm_backward(trace, trace.preds, w)
        for g in GATES:
            assert np.all(grads.weights[g] == 0.0)
            assert np.all(grads.biases[g] == 0.0)
        assert np.all(grads.w_y == 0.0)

    def test_finite_difference_scalar(self):
        w = make_weights(1, 1, 1, seed=5)
        rng = np.random.default_rng(6)
        inputs = rng.standard_normal((2, 1, 1))
        targets = rng.standard_normal((2, 1, 1))
        trace = lstm_forward(w, inputs)
        assert_grads_close(lstm_backward(trace, targets, w),
                           numerical_gradient(w, inputs, targets))

    @pytest.mark.parametrize("seed", range(8))
    def test_finite_difference_random(self, seed):
        rng = np.random.default_rng(seed)
        n_f = int(rng.integers(1, 3))
        n_m = int(rng.integers(1, 5))
        n_out = int(rng.integers(1, 3))
        m = int(rng.integers(1, 6))
        n_b = int(rng.integers(1, 4))
        w = make_weights(n_f, n_m, n_out, seed=seed + 100)
        inputs = rng.standard_normal((m, n_b, n_f))
        targets = rng.standard_normal((m, n_b, n_out))
        trace = lstm_forward(w, inputs)
        assert_grads_close(lstm_backward(trace, targets, w),
                           numerical_gradient(w, inputs, targets))

    def test_residual_doubling_doubles_gradients(self):
        w = make_weights(2, 2, 1, seed=9)
        rng = np.random.default_rng(10)
        inputs = rng.standard_normal((3, 2, 2))
        targets = rng.standard_normal((3, 2, 1))
        trace = lstm_forward(w, inputs)
        g1 = lstm_backward(trace, targets, w)
        doubled = trace.preds - 2.0 * (trace.preds - targets)
        g2 = lstm_backward(trace, doubled, w)
        for g in GATES:
            np.testing.assert_allclose(g2.weights[g], 2.0 * g1.weights[g], rtol=1e-12)
        np.testing.assert_allclose(g2.w_y, 2.0 * g1.w_y, rtol=1e-12)

    def test_stale_trace_rejected(self):
        w = make_weights(2, 2, 1)
        trace = lstm_forward(w, np.zeros((2, 1, 2)))
        other = make_weights(2, 3, 1)
        with pytest.raises(TraceStale):
            lstm_backward(trace, np.zeros((2, 1, 1)), other)


class TestSgd:
    def test_zero_gradient_no_change(self):
        w = make_weights(1, 2, 1)
        trace = lstm_forward(w, np.zeros((1, 1, 1)))
        grads = lstm_backward(trace, trace.preds, w)
        w2 = sgd_step(w, grads, 0.1)
        for g in GATES:
            assert np.array_equal(w2.weights[g], w.weights[g])
        assert np.array_equal(w2.w_y, w.w_y)

    def test_definition(self):
        w = zero_weights(1, 1, 1)
        w.weights["f"][:] = 1.0
        trace = lstm_forward(w, np.zeros((1, 1, 1)))
        grads = lstm_backward(trace, trace.preds, w)
        grads.weights["f"][:] = 0.25
        w2 = sgd_step(w, grads, 1.0)
        assert np.all(w2.weights["f"] == 0.75)

    def test_two_half_steps_equal_one(self):
        w = make_weights(1, 2, 1, seed=11)
        inputs = np.random.default_rng(12).standard_normal((2, 1, 1))
        targets = np.random.default_rng(13).standard_normal((2, 1, 1))
        grads = lstm_backward(lstm_forward(w, inputs), targets, w)
        one = sgd_step(w, grads, 0.2)
        two = sgd_step(sgd_step(w, grads, 0.1), grads, 0.1)
        for g in GATES:
            np.testing.assert_allclose(two.weights[g], one.weights[g], rtol=1e-12)
        np.testing.assert_allclose(two.w_y, one.w_y, rtol=1e-12)


class TestTraining:
    def test_loss_non_increasing_small_lr(self):
        # with a small enough rate the full-batch loss should not increase;
        # tolerate one unlucky seed out of twenty
        bad = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            w = init_weights(2, 3, 2, rng)
            inputs = rng.uniform(-1, 1, (4, 3, 2))
            targets = rng.uniform(-1, 1, (4, 3, 2))
            for _ in range(50):
                trace = lstm_forward(w, inputs)
                loss_before = mse_loss(targets, trace.preds)
                w = sgd_step(w, lstm_backward(trace, targets, w), 1e-3)
                loss_after = mse_loss(targets, lstm_forward(w, inputs).preds)
                if loss_after > loss_before + 1e-12:
                    bad += 1
                    break
        assert bad <= 1

    def test_train_lstm_learns(self):
        rng = np.random.default_rng(21)
        w = init_weights(1, 4, 1, rng)
        t = np.linspace(0, 1, 10)
        inputs = np.tile(t[:, None, None], (1, 2, 1))
        targets = np.sin(2 * np.pi * inputs)
        trained, history = train_lstm(w, inputs, targets, epochs=300, lr=0.02)
        assert history[-1] < 0.05 * history[0]
