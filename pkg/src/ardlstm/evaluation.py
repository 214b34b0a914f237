"""Fit metrics and acquisition utilities for trained surrogates.

The coefficient of determination measures global fit quality over designs,
time steps and output channels. The design-parameter sweep walks a grid of
punch positions through a trained model and records where predictive
uncertainty concentrates, plus the expected-improvement acquisition value
that tells where a new design would help the surrogate most.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .data import SequenceDataset
from .errors import NotTrained, ShapeMismatch, ZeroVariance


def r_squared(targets: np.ndarray, predictions: np.ndarray) -> float:
    """1 - SS_res / SS_tot over a (n_b, m, n_out) block.

    The total sum of squares centers each (step, channel) on its mean over
    the design batch.
    """
    targets = np.asarray(targets, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    if targets.shape != predictions.shape:
        raise ShapeMismatch(f"targets {targets.shape} vs predictions {predictions.shape}")
    batch_mean = targets.mean(axis=0, keepdims=True)
    ss_tot = float(np.sum((targets - batch_mean) ** 2))
    if ss_tot == 0.0:
        raise ZeroVariance("targets are constant across designs")
    ss_res = float(np.sum((targets - predictions) ** 2))
    return 1.0 - ss_res / ss_tot


def expected_improvement(pred_mean, pred_std, observed, direction: str = "max"):
    """Expected improvement of the predictive over the observed response.

    (mean - observed) cdf(u) + std pdf(u) with u = (mean - observed) / std;
    at zero predictive spread this degenerates to max(mean - observed, 0).
    ``direction="min"`` scores improvement downwards instead.
    """
    if direction not in ("max", "min"):
        raise ShapeMismatch(f"direction must be 'max' or 'min', got {direction!r}")
    mean = np.asarray(pred_mean, dtype=np.float64)
    std = np.asarray(pred_std, dtype=np.float64)
    best = np.asarray(observed, dtype=np.float64)
    if np.any(std < 0):
        raise ShapeMismatch("predictive standard deviation must be nonnegative")
    gap = (mean - best) if direction == "max" else (best - mean)
    scalar = gap.ndim == 0 and std.ndim == 0
    gap, std = np.broadcast_arrays(np.atleast_1d(gap), np.atleast_1d(std))
    out = np.maximum(gap, 0.0)
    live = std > 0.0
    if np.any(live):
        u = gap[live] / std[live]
        pdf = np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)
        out[live] = gap[live] * ndtr(u) + std[live] * pdf
    return float(out[0]) if scalar else out


@dataclass
class SweepResult:
    """Per-design-value uncertainty summary over a trained model."""

    eps: np.ndarray            # strictly increasing design values
    sigma_norm: np.ndarray     # max normalized predictive std over time/outputs
    ei: np.ndarray             # expected improvement at each design value
    extrapolation: np.ndarray  # bool, outside the training design hull

    def __len__(self) -> int:
        return self.eps.shape[0]


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("eps,sigma_norm,ei,extrapolation_flag\n")
        for e, s, a, x in zip(result.eps, result.sigma_norm, result.ei,
                              result.extrapolation):
            fh.write(f"{float(e)!r},{float(s)!r},{float(a)!r},{int(x)}\n")


def _interpolated_response(reference: SequenceDataset, normalizer,
                           eps_grid: np.ndarray) -> np.ndarray:
    """Reference targets linearly interpolated over the design value.

    Returns (len(eps_grid), m, n_out) in the given normalized space; grid
    values outside the reference hull clamp to the nearest design.
    """
    order = np.argsort(reference.designs)
    xs = reference.designs[order]
    ys = normalizer.normalize(reference.targets)[order]
    if xs.size == 1:
        return np.broadcast_to(ys, (eps_grid.size, *ys.shape[1:])).copy()
    idx = np.clip(np.searchsorted(xs, eps_grid) - 1, 0, xs.size - 2)
    w = np.clip((eps_grid - xs[idx]) / (xs[idx + 1] - xs[idx]), 0.0, 1.0)
    return (1.0 - w)[:, None, None] * ys[idx] + w[:, None, None] * ys[idx + 1]


def uncertainty_sweep(model, eps_grid, dataset: SequenceDataset,
                      mode: str | None = None, seed: int = 0,
                      direction: str = "max",
                      reference: SequenceDataset | None = None) -> SweepResult:
    """Evaluate predictive uncertainty and acquisition over design values.

    For each grid value the inputs replicate the training time grid at that
    punch position. ``sigma_norm`` is the maximum predictive standard
    deviation over time steps and output channels, in normalized units. The
    acquisition value is the total expected improvement: the closed form
    evaluated per step and channel against the interpolated response of
    ``reference`` (the training dataset itself by default; a validation
    study can pass the full dataset instead) and summed. Grid values beyond
    the training design hull are flagged as extrapolation.
    """
    if not getattr(model, "fitted", False):
        raise NotTrained("sweep requires a fitted model")
    reference = reference if reference is not None else dataset
    if reference.n_outputs != dataset.n_outputs or reference.n_steps != dataset.n_steps:
        raise ShapeMismatch("reference dataset shape does not match")
    eps_grid = np.sort(np.unique(np.asarray(eps_grid, dtype=np.float64)))
    if eps_grid.size == 0:
        return SweepResult(eps=eps_grid, sigma_norm=np.empty(0), ei=np.empty(0),
                           extrapolation=np.empty(0, dtype=bool))

    # feature 0 carries the design parameter; the remaining features (the
    # time grid) are replicated from the first training design
    inputs = np.tile(dataset.inputs[0], (eps_grid.size, 1, 1))
    inputs[:, :, 0] = eps_grid[:, None]
    pred = model.predict(inputs, mode=mode, seed=seed)
    std = np.sqrt(np.clip(pred.variance, 0.0, None))

    ref = _interpolated_response(reference, dataset.target_norm, eps_grid)
    sigma_norm = std.reshape(eps_grid.size, -1).max(axis=1)
    ei = np.empty(eps_grid.size)
    for k in range(eps_grid.size):
        ei[k] = float(np.sum(expected_improvement(
            pred.mean[k].ravel(), std[k].ravel(), ref[k].ravel(), direction)))
    lo, hi = dataset.designs.min(), dataset.designs.max()
    return SweepResult(eps=eps_grid, sigma_norm=sigma_norm, ei=ei,
                       extrapolation=(eps_grid < lo) | (eps_grid > hi))
