"""Report figures rendered to files next to the delimited outputs.

All plotting uses the Agg backend so the CLI works headless; every function
takes data plus a path and writes one PNG.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _new_axes(width=6.4, height=4.0):
    fig, ax = plt.subplots(figsize=(width, height))
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_likelihood_history(history, path, label="negative log likelihood"):
    """Optimization trace; the likelihood is plotted negated, log-scaled."""
    fig, ax = _new_axes()
    values = -np.asarray(history, dtype=np.float64)
    ax.plot(np.arange(1, len(values) + 1), values, lw=1.2)
    if np.all(values > 0):
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel(label)
    _save(fig, path)


def plot_loss_history(history, path):
    plot_likelihood_history(-np.asarray(history), path, label="squared-error loss")


def plot_sparsity(sparsity_history, path):
    """Per-gate and output-layer pruned fraction over epochs."""
    fig, ax = _new_axes()
    epochs = np.arange(len(sparsity_history))
    for key, label in (("f", "forget gate"), ("z", "input gate"),
                       ("c", "cell candidate"), ("o", "output gate"),
                       ("output", "output layer")):
        ax.plot(epochs, [100.0 * s[key] for s in sparsity_history], lw=1.2,
                label=label)
    ax.plot(epochs, [100.0 * s["total"] for s in sparsity_history], "k--",
            lw=1.5, label="total")
    ax.set_xlabel("epoch")
    ax.set_ylabel("sparsity [%]")
    ax.set_ylim(-2, 102)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_sweep(result, path, train_designs=None):
    """Normalized max predictive std and expected improvement over the grid."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
    for ax in (ax1, ax2):
        ax.grid(True, alpha=0.3)
    inter = ~result.extrapolation
    ax1.plot(result.eps, result.sigma_norm, "-", lw=1.2, color="C0")
    ax1.plot(result.eps[inter], result.sigma_norm[inter], "o", ms=3, color="C0")
    if result.extrapolation.any():
        ax1.plot(result.eps[~inter], result.sigma_norm[~inter], "x", ms=4,
                 color="C3", label="extrapolation")
        ax1.legend(fontsize=8)
    ax1.set_ylabel("max normalized std")
    ax2.plot(result.eps, result.ei, "-o", lw=1.2, ms=3, color="C1")
    ax2.set_ylabel("expected improvement")
    ax2.set_xlabel("design value")
    if train_designs is not None:
        for ax in (ax1, ax2):
            for eps in train_designs:
                ax.axvline(eps, color="gray", alpha=0.35, lw=0.8)
    _save(fig, path)


def plot_hidden_posterior(samples, mean_based_value, path):
    """Histogram of sampled hidden-state values with the mean-based estimate."""
    samples = np.asarray(samples, dtype=np.float64)
    fig, ax = _new_axes(4.8, 3.6)
    ax.hist(samples, bins=40, density=True, alpha=0.65, color="C0")
    mu, sd = samples.mean(), samples.std()
    if sd > 0:
        grid = np.linspace(samples.min(), samples.max(), 200)
        ax.plot(grid, np.exp(-0.5 * ((grid - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi)),
                "C1", lw=1.5, label="fitted Gaussian")
    ax.axvline(mean_based_value, color="k", ls="--", lw=1.5, label="mean-based")
    ax.set_xlabel("hidden state value")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_fit_overview(time, targets, predictions, variances, path, channel=None):
    """Worst-fit channel trajectories per design with a 2-sigma band."""
    targets = np.asarray(targets)
    predictions = np.asarray(predictions)
    if channel is None:
        channel = int(np.argmax(np.sum((targets - predictions) ** 2, axis=(0, 1))))
    fig, ax = _new_axes()
    for b in range(targets.shape[0]):
        ax.plot(time, targets[b, :, channel], "k-", lw=0.8, alpha=0.6)
        ax.plot(time, predictions[b, :, channel], "C0-", lw=1.0)
        sd = np.sqrt(np.clip(variances[b, :, channel], 0, None))
        ax.fill_between(time, predictions[b, :, channel] - 2 * sd,
                        predictions[b, :, channel] + 2 * sd, color="C0", alpha=0.15)
    ax.set_xlabel("time")
    ax.set_ylabel(f"normalized output (channel {channel})")
    _save(fig, path)
