import numpy as np
import pytest

from ardlstm.ard_lstm import ArdLstm, ArdLstmConfig
from ardlstm.data import BendingSurrogateConfig, generate_bending_like
from ardlstm.errors import NotTrained, ShapeMismatch, ZeroVariance
from ardlstm.evaluation import (
    SweepResult,
    expected_improvement,
    r_squared,
    uncertainty_sweep,
    write_sweep_csv,
)


class TestRSquared:
    def test_perfect_prediction(self):
        y = np.random.default_rng(0).standard_normal((3, 4, 2))
        assert r_squared(y, y) == 1.0

    def test_batch_mean_prediction_scores_zero(self):
        y = np.random.default_rng(1).standard_normal((5, 3, 2))
        mean = np.broadcast_to(y.mean(axis=0, keepdims=True), y.shape)
        assert r_squared(y, mean) == pytest.approx(0.0, abs=1e-12)

    def test_hand_sum(self):
        # residuals 0.5 each squared -> SS_res = 0.5; batch mean 1 -> SS_tot = 2
        y = np.array([0.0, 2.0]).reshape(2, 1, 1)
        pred = np.array([0.5, 1.5]).reshape(2, 1, 1)
        assert r_squared(y, pred) == pytest.approx(0.75)

    def test_never_exceeds_one(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            y = rng.standard_normal((4, 3, 2))
            p = rng.standard_normal((4, 3, 2))
            assert r_squared(y, p) <= 1.0

    def test_constant_targets_rejected(self):
        with pytest.raises(ZeroVariance):
            r_squared(np.ones((3, 2, 1)), np.zeros((3, 2, 1)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            r_squared(np.zeros((2, 2, 1)), np.zeros((2, 3, 1)))


class TestExpectedImprovement:
    def test_at_observed_with_unit_spread(self):
        # gap 0: EI = std * pdf(0) = 1 / sqrt(2 pi)
        assert expected_improvement(1.0, 1.0, 1.0) == pytest.approx(
            1.0 / np.sqrt(2 * np.pi))

    def test_zero_spread_no_gain(self):
        assert expected_improvement(0.5, 0.0, 1.0) == 0.0
        assert expected_improvement(1.0, 0.0, 1.0) == 0.0

    def test_zero_spread_positive_gap(self):
        assert expected_improvement(2.0, 0.0, 0.5) == pytest.approx(1.5)

    def test_monotone_in_spread(self):
        # grid oracle: EI never decreases as the spread grows
        for gap in (-1.0, -0.2, 0.0, 0.4, 2.0):
            values = [expected_improvement(gap, s, 0.0) for s in np.linspace(0, 3, 40)]
            assert np.all(np.diff(values) >= -1e-12)

    def test_continuous_at_zero_spread(self):
        for gap in (-0.5, 0.0, 0.7):
            at_zero = expected_improvement(gap, 0.0, 0.0)
            near_zero = expected_improvement(gap, 1e-9, 0.0)
            assert near_zero == pytest.approx(at_zero, abs=1e-8)

    def test_nonnegative(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            val = expected_improvement(rng.normal(), abs(rng.normal()), rng.normal())
            assert val >= 0.0

    def test_min_direction_mirrors(self):
        a = expected_improvement(2.0, 0.5, 1.0, direction="max")
        b = expected_improvement(-2.0, 0.5, -1.0, direction="min")
        assert a == pytest.approx(b)

    def test_vectorized(self):
        out = expected_improvement(np.array([0.0, 1.0]), np.array([1.0, 0.0]), 0.0)
        assert out.shape == (2,)
        assert out[1] == pytest.approx(1.0)

    def test_negative_spread_rejected(self):
        with pytest.raises(ShapeMismatch):
            expected_improvement(0.0, -1.0, 0.0)


class TestSweepCsv:
    def test_columns_and_rows(self, tmp_path):
        res = SweepResult(eps=np.array([-1.0, 0.0]), sigma_norm=np.array([0.1, 0.2]),
                          ei=np.array([0.01, 0.02]),
                          extrapolation=np.array([True, False]))
        path = tmp_path / "sweep.csv"
        write_sweep_csv(res, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "eps,sigma_norm,ei,extrapolation_flag"
        assert len(lines) == 3
        assert lines[1].split(",")[3] == "1"


@pytest.fixture(scope="module")
def tiny_trained():
    ds = generate_bending_like(BendingSurrogateConfig(n_nodes=3),
                               designs=(-40.0, 0.0, 40.0), m=7)
    model = ArdLstm(ArdLstmConfig(2, 3, ds.n_outputs, mc_samples=10))
    model.fit(ds, max_epochs=5, seed=0)
    return model, ds


class TestUncertaintySweep:
    def test_empty_grid(self, tiny_trained):
        model, ds = tiny_trained
        result = uncertainty_sweep(model, [], ds)
        assert len(result) == 0

    def test_not_trained_rejected(self, tiny_trained):
        _, ds = tiny_trained
        fresh = ArdLstm(ArdLstmConfig(2, 3, ds.n_outputs))
        with pytest.raises(NotTrained):
            uncertainty_sweep(fresh, [0.0], ds)

    def test_grid_order_invariance(self, tiny_trained):
        model, ds = tiny_trained
        grid = [-50.0, 0.0, 25.0, -10.0]
        a = uncertainty_sweep(model, grid, ds, mode="mean")
        b = uncertainty_sweep(model, sorted(grid), ds, mode="mean")
        np.testing.assert_array_equal(a.eps, b.eps)
        np.testing.assert_array_equal(a.sigma_norm, b.sigma_norm)
        np.testing.assert_array_equal(a.ei, b.ei)
        assert np.all(np.diff(a.eps) > 0)

    def test_extrapolation_flags(self, tiny_trained):
        model, ds = tiny_trained
        result = uncertainty_sweep(model, [-60.0, 0.0, 60.0], ds, mode="mean")
        assert result.extrapolation.tolist() == [True, False, True]

    def test_sigma_nonnegative_and_ei_nonnegative(self, tiny_trained):
        model, ds = tiny_trained
        result = uncertainty_sweep(model, np.linspace(-50, 50, 7), ds, mode="mean")
        assert np.all(result.sigma_norm >= 0)
        assert np.all(result.ei >= 0)
