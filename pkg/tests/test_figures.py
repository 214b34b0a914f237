import numpy as np

from ardlstm import figures
from ardlstm.evaluation import SweepResult


def test_likelihood_history_render(tmp_path):
    path = tmp_path / "hist.png"
    figures.plot_likelihood_history([-100.0, -50.0, -10.0, -9.5], path)
    assert path.stat().st_size > 0


def test_loss_history_render(tmp_path):
    path = tmp_path / "loss.png"
    figures.plot_loss_history([10.0, 5.0, 1.0], path)
    assert path.stat().st_size > 0


def test_sparsity_render(tmp_path):
    history = [{"f": 1.0, "z": 1.0, "c": 1.0, "o": 1.0, "gates": 1.0,
                "output": 1.0, "total": 1.0},
               {"f": 0.4, "z": 0.3, "c": 0.2, "o": 0.5, "gates": 0.35,
                "output": 0.2, "total": 0.3}]
    path = tmp_path / "sparsity.png"
    figures.plot_sparsity(history, path)
    assert path.stat().st_size > 0


def test_sweep_render(tmp_path):
    result = SweepResult(eps=np.linspace(-70, 70, 15),
                         sigma_norm=np.abs(np.sin(np.linspace(0, 3, 15))) + 0.01,
                         ei=np.abs(np.cos(np.linspace(0, 3, 15))),
                         extrapolation=np.abs(np.linspace(-70, 70, 15)) > 60)
    path = tmp_path / "sweep.png"
    figures.plot_sweep(result, path, train_designs=[-60, 0, 60])
    assert path.stat().st_size > 0


def test_hidden_posterior_render(tmp_path):
    samples = np.random.default_rng(0).normal(0.3, 0.05, 500)
    path = tmp_path / "hidden.png"
    figures.plot_hidden_posterior(samples, 0.31, path)
    assert path.stat().st_size > 0


def test_fit_overview_render(tmp_path):
    rng = np.random.default_rng(1)
    time = np.linspace(0, 20, 12)
    targets = rng.standard_normal((3, 12, 4))
    preds = targets + 0.1 * rng.standard_normal((3, 12, 4))
    variances = np.full((3, 12, 4), 0.01)
    path = tmp_path / "fit.png"
    figures.plot_fit_overview(time, targets, preds, variances, path)
    assert path.stat().st_size > 0
