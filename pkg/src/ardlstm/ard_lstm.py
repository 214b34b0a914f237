"""Recurrent relevance determination: a sparse Bayesian LSTM trainer.

Every gate unit and every output unit is one independent linear regression
(:mod:`ardlstm.ard`) whose targets are the gate pre-activations. Training
alternates a sampled forward pass (gate outputs drawn from their predictive
Gaussians and pushed through the activations) with a backward pass that
moves the pre-activation targets along the likelihood gradient, re-estimates
the hyperparameters, refreshes the posteriors and prunes by relevance.

Layouts: regression banks are (T, U, D) with T = 1 when weights are shared
over time and T = m for per-step posteriors. The gate bank stacks the four
gates into U = 4 * n_units columns ordered [f, z, c, o].
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import ard
from .adam import AdamState
from .data import Normalizer, SequenceDataset
from .errors import Divergence, NotTrained, ShapeMismatch
from .linalg import sigmoid, spd_inverse_batched, stream
from .lstm import GATES

SIGMOID_CLIP = 9.0
TANH_CLIP = 5.0

# stream keys for seed threading
_STREAM_INIT = 1
_STREAM_EPOCH = 2
_STREAM_PREDICT = 3


@dataclass
class ArdLstmConfig:
    """Dimensions and training constants of the sparse recurrent model."""

    n_features: int
    n_units: int
    n_outputs: int
    mc_samples: int = 100          # K
    target_rate: float = 0.005     # lambda
    prune_tau: float = 1e-4
    max_epochs: int = 4000
    alpha_bounds: tuple[float, float] = ard.ALPHA_BOUNDS
    beta_bounds: tuple[float, float] = ard.BETA_BOUNDS
    alpha_init: tuple[float, float] = ard.ALPHA_BOUNDS
    beta_init: tuple[float, float] = ard.BETA_INIT
    share_weights_over_time: bool = True
    mode: str = "sampled"          # "sampled" | "mean"
    spread_stat: str = "mad"       # "mad" | "std"
    convergence_tol: float = 2e-2
    convergence_window: int = 20

    def __post_init__(self):
        if self.mode not in ("sampled", "mean"):
            raise ShapeMismatch(f"mode must be 'sampled' or 'mean', got {self.mode!r}")
        if self.spread_stat not in ("mad", "std"):
            raise ShapeMismatch(f"spread_stat must be 'mad' or 'std', got {self.spread_stat!r}")
        if self.mc_samples < 1:
            raise ShapeMismatch("mc_samples must be >= 1")

    @property
    def gate_dim(self) -> int:
        return 1 + self.n_features + self.n_units

    @property
    def out_dim(self) -> int:
        return 1 + self.n_units


@dataclass
class RegressionBank:
    """Hyperparameters, posteriors and masks for a (T, U) grid of regressions."""

    alpha: np.ndarray   # (T, U, D)
    beta: np.ndarray    # (T, U)
    mu: np.ndarray      # (T, U, D)
    sigma: np.ndarray   # (T, U, D, D)
    gamma: np.ndarray   # (T, U, D)
    mask: np.ndarray    # (T, U, D) bool

    @classmethod
    def initialize(cls, t: int, u: int, d: int, cfg: ArdLstmConfig,
                   rng: np.random.Generator, tau: float) -> "RegressionBank":
        alpha = ard.log_uniform(*cfg.alpha_init, size=(t, u, d), rng=rng)
        beta = ard.log_uniform(*cfg.beta_init, size=(t, u), rng=rng)
        sigma = np.zeros((t, u, d, d))
        idx = np.arange(d)
        sigma[..., idx, idx] = 1.0 / alpha
        # the first forward pass predicts with means sampled from the prior,
        # even though the prior-dominated relevance marks everything pruned
        mu = rng.standard_normal((t, u, d)) / np.sqrt(alpha)
        gamma = 1.0 - alpha * sigma[..., idx, idx]
        return cls(alpha=alpha, beta=beta, mu=mu, sigma=sigma, gamma=gamma,
                   mask=gamma <= tau)

    @property
    def n_weights(self) -> int:
        return self.mask.size

    def sparsity(self) -> float:
        return float(self.mask.mean())


@dataclass
class EpochTrace:
    """Per-step quantities one forward sweep produces for the backward pass.

    Sample statistics have the batch layout (m, n_b, ...); sample tensors
    are only kept on request and carry the Monte-Carlo axis first.
    """

    phi: np.ndarray               # (m, n_b, 1 + n_f + n_m)
    psi: np.ndarray               # (m, n_b, 1 + n_m)
    pre_mean: np.ndarray          # (m, n_b, 4 n_m) analytic gate pre-activation mean
    pre_sample_mean: np.ndarray   # (m, n_b, 4 n_m) Monte-Carlo mean of drawn pre-activations
    gate_out_mean: np.ndarray     # (m, n_b, 4 n_m)
    gate_out_mad: np.ndarray      # (m, n_b, 4 n_m)
    gate_out_std: np.ndarray      # (m, n_b, 4 n_m)
    cell_mean: np.ndarray         # (m, n_b, n_m)
    hidden_mp: np.ndarray         # (m, n_b, n_m)
    hidden_mad: np.ndarray        # (m, n_b, n_m)
    hidden_std: np.ndarray        # (m, n_b, n_m)
    y_mean: np.ndarray            # (m, n_b, N)
    y_var: np.ndarray             # (m, n_b, N)
    hidden_samples: np.ndarray | None = field(default=None, repr=False)


@dataclass
class Prediction:
    """Model outputs in normalized space, batch-major (n_b, m, ...)."""

    mean: np.ndarray
    variance: np.ndarray
    hidden_mean: np.ndarray
    hidden_spread: np.ndarray
    hidden_std: np.ndarray
    mode: str
    mc_samples: int


@dataclass
class ConvergenceReport:
    epochs_used: int
    converged: bool
    final_loglik: float
    loglik_history: list[float]
    sparsity_history: list[dict]
    wall_time_s: float
    time_per_epoch_s: float


class ConvergenceRule:
    """Stop once the likelihood moved at most ``tol`` over ``window`` epochs, twice.

    After a hit the next comparison happens a full window later, so the two
    qualifying windows never overlap: a history that is flat from the start
    stops at epoch 2 * window + 1.
    """

    def __init__(self, tol: float = 2e-2, window: int = 20, required_hits: int = 2):
        self.tol = tol
        self.window = window
        self.required_hits = required_hits
        self.history: list[float] = []
        self.hits = 0
        self._next_check = window + 1

    def update(self, value: float) -> bool:
        self.history.append(value)
        n = len(self.history)
        if n == self._next_check:
            if abs(self.history[n - self.window - 1] - value) <= self.tol:
                self.hits += 1
                self._next_check = n + self.window
                if self.hits >= self.required_hits:
                    return True
            else:
                self._next_check = n + 1
        return False


def likelihood_grad_design(phi: np.ndarray, targets: np.ndarray, alpha: np.ndarray,
                           beta: np.ndarray) -> np.ndarray:
    """Gradient of the summed per-unit log evidence w.r.t. the design rows.

    phi (n, d), targets (n, u), alpha (u, d), beta (u). For each unit
    C = beta^-1 I + phi A^-1 phi^T and the gradient contribution is
    (C^-1 t t^T C^-1 - C^-1) phi A^-1; the result sums over units to (n, d).
    """
    phi = np.asarray(phi, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = phi.shape[0]
    a_inv = 1.0 / np.asarray(alpha, dtype=np.float64)
    c = np.einsum("nd,ud,md->unm", phi, a_inv, phi)
    idx = np.arange(n)
    c[:, idx, idx] += 1.0 / np.asarray(beta, dtype=np.float64)[:, None]
    c_inv = spd_inverse_batched(c)
    ct = np.einsum("unm,mu->un", c_inv, targets)
    phi_ct = np.einsum("un,nd->ud", ct, phi)
    term = np.einsum("un,ud->und", ct, phi_ct) - np.einsum("unm,md->und", c_inv, phi)
    return np.einsum("und,ud->nd", term, a_inv)


class ArdLstm:
    """Sparse Bayesian LSTM: fit by recurrent relevance determination."""

    def __init__(self, config: ArdLstmConfig):
        self.config = config
        self.gates: RegressionBank | None = None
        self.output: RegressionBank | None = None
        self.input_norm: Normalizer | None = None
        self.target_norm: Normalizer | None = None
        self.train_designs: np.ndarray | None = None
        self.loglik_history: list[float] = []
        self.sparsity_history: list[dict] = []
        self.n_steps_trained: int | None = None
        self._targets: np.ndarray | None = None
        self._adam: AdamState | None = None
        self._packed: dict | None = None

    # ------------------------------------------------------------------ setup

    @property
    def fitted(self) -> bool:
        return self.gates is not None and self.input_norm is not None

    def init_params(self, n_steps: int, seed: int) -> None:
        cfg = self.config
        t = 1 if cfg.share_weights_over_time else n_steps
        rng = stream(seed, _STREAM_INIT)
        self.gates = RegressionBank.initialize(t, 4 * cfg.n_units, cfg.gate_dim,
                                               cfg, rng, cfg.prune_tau)
        self.output = RegressionBank.initialize(t, cfg.n_outputs, cfg.out_dim,
                                                cfg, rng, cfg.prune_tau)
        self.n_steps_trained = n_steps
        self._targets = None
        self._adam = None
        self.loglik_history = []
        self.sparsity_history = []
        self._repack()

    def _repack(self) -> None:
        """Contiguous per-gate weight matrices for the forward matmuls."""
        cfg = self.config
        n_m = cfg.n_units
        gate_w = {}
        for k, g in enumerate(GATES):
            block = self.gates.mu[:, k * n_m:(k + 1) * n_m, :]    # (T, n_m, D)
            gate_w[g] = np.ascontiguousarray(np.swapaxes(block, 1, 2))  # (T, D, n_m)
        out_w = np.ascontiguousarray(np.swapaxes(self.output.mu, 1, 2))  # (T, Dy, N)
        self._packed = {"gate_w": gate_w, "out_w": out_w}

    def _bank_time(self, i: int) -> int:
        return 0 if self.config.share_weights_over_time else i

    # ---------------------------------------------------------------- forward

    def forward_epoch(self, x_tm: np.ndarray, rng: np.random.Generator,
                      mode: str | None = None, mc_samples: int | None = None,
                      keep_samples: bool = False) -> EpochTrace:
        """Propagate the whole sequence, sampling gate outputs when requested.

        ``x_tm`` is the normalized time-major input (m, n_b, n_f). In
        "sampled" mode each gate pre-activation is drawn K times from its
        predictive Gaussian (epistemic part only) and the cell state is
        carried forward in samples; the hidden state collapses to its mean
        before it feeds the output layer and the next step.
        """
        cfg = self.config
        mode = mode or cfg.mode
        k = 1 if mode == "mean" else (mc_samples or cfg.mc_samples)
        x_tm = np.asarray(x_tm, dtype=np.float64)
        m, n_b, n_f = x_tm.shape
        if n_f != cfg.n_features:
            raise ShapeMismatch(f"inputs have {n_f} features, config says {cfg.n_features}")
        if not cfg.share_weights_over_time and m != self.n_steps_trained:
            raise ShapeMismatch("per-step posteriors only support the trained sequence length")
        n_m = cfg.n_units
        gate_w = self._packed["gate_w"]
        out_w = self._packed["out_w"]

        ones = np.ones((n_b, 1))
        trace = EpochTrace(
            phi=np.empty((m, n_b, cfg.gate_dim)),
            psi=np.empty((m, n_b, cfg.out_dim)),
            pre_mean=np.empty((m, n_b, 4 * n_m)),
            pre_sample_mean=np.empty((m, n_b, 4 * n_m)),
            gate_out_mean=np.empty((m, n_b, 4 * n_m)),
            gate_out_mad=np.empty((m, n_b, 4 * n_m)),
            gate_out_std=np.empty((m, n_b, 4 * n_m)),
            cell_mean=np.empty((m, n_b, n_m)),
            hidden_mp=np.empty((m, n_b, n_m)),
            hidden_mad=np.empty((m, n_b, n_m)),
            hidden_std=np.empty((m, n_b, n_m)),
            y_mean=np.empty((m, n_b, cfg.n_outputs)),
            y_var=np.empty((m, n_b, cfg.n_outputs)),
            hidden_samples=np.empty((k, m, n_b, n_m)) if keep_samples else None,
        )

        h_mp = np.zeros((n_b, n_m))
        c_samples = np.zeros((k, n_b, n_m))
        collapsed = True
        for i in range(m):
            t = self._bank_time(i)
            phi = np.concatenate([ones, x_tm[i], h_mp], axis=1)
            trace.phi[i] = phi
            pre = np.concatenate([phi @ gate_w[g][t] for g in GATES], axis=1)
            trace.pre_mean[i] = pre
            if mode == "sampled":
                var = np.einsum("und,nd->nu", phi @ self.gates.sigma[t], phi)
                np.clip(var, 0.0, None, out=var)
                samples = pre + np.sqrt(var) * rng.standard_normal((k, n_b, 4 * n_m))
                step_collapsed = not var.any()
            else:
                samples = pre[None]
                step_collapsed = True
            collapsed = collapsed and step_collapsed

            acts = np.empty_like(samples)
            acts[..., :2 * n_m] = sigmoid(samples[..., :2 * n_m])
            acts[..., 2 * n_m:3 * n_m] = np.tanh(samples[..., 2 * n_m:3 * n_m])
            acts[..., 3 * n_m:] = sigmoid(samples[..., 3 * n_m:])

            c_samples = acts[..., :n_m] * c_samples + acts[..., n_m:2 * n_m] * acts[..., 2 * n_m:3 * n_m]
            h_samples = acts[..., 3 * n_m:] * np.tanh(c_samples)
            if collapsed:
                h_mp = h_samples[0].copy()
                trace.pre_sample_mean[i] = samples[0]
                trace.gate_out_mean[i] = acts[0]
                trace.gate_out_mad[i] = 0.0
                trace.gate_out_std[i] = 0.0
                trace.cell_mean[i] = c_samples[0]
                trace.hidden_mad[i] = 0.0
                trace.hidden_std[i] = 0.0
            else:
                h_mp = h_samples.mean(axis=0)
                trace.pre_sample_mean[i] = samples.mean(axis=0)
                g_mean = acts.mean(axis=0)
                trace.gate_out_mean[i] = g_mean
                trace.gate_out_mad[i] = np.abs(acts - g_mean).mean(axis=0)
                trace.gate_out_std[i] = acts.std(axis=0)
                trace.cell_mean[i] = c_samples.mean(axis=0)
                trace.hidden_mad[i] = np.abs(h_samples - h_mp).mean(axis=0)
                trace.hidden_std[i] = h_samples.std(axis=0)
            trace.hidden_mp[i] = h_mp
            if keep_samples:
                trace.hidden_samples[:, i] = h_samples

            psi = np.concatenate([ones, h_mp], axis=1)
            trace.psi[i] = psi
            trace.y_mean[i] = psi @ out_w[t]
            out_var = np.einsum("und,nd->nu", psi @ self.output.sigma[t], psi)
            trace.y_var[i] = np.clip(out_var, 0.0, None) + 1.0 / self.output.beta[t]
        return trace

    # --------------------------------------------------------------- backward

    def _grouped(self, arr: np.ndarray) -> np.ndarray:
        """(m, n_b, c) -> (T, rows, c) matching the bank layout."""
        m, n_b, c = arr.shape
        if self.config.share_weights_over_time:
            return arr.reshape(1, m * n_b, c)
        return arr

    def backward_epoch(self, trace: EpochTrace, y_tm: np.ndarray) -> float:
        """Steps 1-7 of one optimization epoch; returns the output log evidence.

        Likelihood gradients to the design rows are evaluated in closed form
        for every regression at once, then chained backwards through the
        cell equations: each step's hidden gradient collects the output
        likelihood at that step, the mean-based recurrent gradient and the
        gate likelihood contribution of the following step. Targets move by
        a stabilized rate-limited step and are clipped; hyperparameters,
        posteriors and relevance masks are re-estimated afterwards.
        """
        cfg = self.config
        m, n_b, n_m = trace.hidden_mp.shape
        n_f = cfg.n_features
        y_tm = np.asarray(y_tm, dtype=np.float64)
        if y_tm.shape != (m, n_b, cfg.n_outputs):
            raise ShapeMismatch(f"targets {y_tm.shape} do not match trace/config")

        if self._targets is None:
            self._targets = trace.pre_sample_mean.copy()
        if self._adam is None:
            self._adam = AdamState.like(self._targets)

        # exact posteriors at the current hyperparameters; basis for the
        # likelihood gradients and for the subsequent fixed-point updates
        phi_g = self._grouped(trace.phi)
        s_g = self._grouped(self._targets)
        psi_g = self._grouped(trace.psi)
        y_g = self._grouped(y_tm)
        mu_g, sigma_g, _ = ard.posterior_moments_grouped(
            phi_g, s_g, self.gates.alpha, self.gates.beta)
        mu_y, sigma_y, _ = ard.posterior_moments_grouped(
            psi_g, y_g, self.output.alpha, self.output.beta)
        grad_psi = ard.evidence_grad_design_grouped(
            psi_g, y_g, self.output.alpha, self.output.beta, mu_y, sigma_y)
        grad_phi = ard.evidence_grad_design_grouped(
            phi_g, s_g, self.gates.alpha, self.gates.beta, mu_g, sigma_g)
        grad_h_out = grad_psi.reshape(m, n_b, cfg.out_dim)[:, :, 1:]
        grad_h_gates = grad_phi.reshape(m, n_b, cfg.gate_dim)[:, :, 1 + n_f:]

        # recurrent weight blocks from the current posterior means
        rec = {g: np.ascontiguousarray(self._packed["gate_w"][g][:, 1 + n_f:, :])
               for g in GATES}

        d_gate = np.empty((m, n_b, 4 * n_m))
        d_cell_next = np.zeros((n_b, n_m))
        for i in reversed(range(m)):
            dh = grad_h_out[i].copy()
            if i < m - 1:
                t1 = self._bank_time(i + 1)
                for k, g in enumerate(GATES):
                    dh += d_gate[i + 1][:, k * n_m:(k + 1) * n_m] @ rec[g][t1].T
                dh += grad_h_gates[i + 1]
                f_next = trace.gate_out_mean[i + 1][:, :n_m]
            else:
                f_next = np.zeros((n_b, n_m))

            f_i = trace.gate_out_mean[i][:, :n_m]
            z_i = trace.gate_out_mean[i][:, n_m:2 * n_m]
            c_tilde = trace.gate_out_mean[i][:, 2 * n_m:3 * n_m]
            o_i = trace.gate_out_mean[i][:, 3 * n_m:]
            tanh_c = np.tanh(trace.cell_mean[i])
            c_prev = trace.cell_mean[i - 1] if i > 0 else np.zeros((n_b, n_m))

            d_cell = dh * o_i * (1.0 - tanh_c ** 2) + d_cell_next * f_next
            d_gate[i, :, :n_m] = d_cell * c_prev * f_i * (1.0 - f_i)
            d_gate[i, :, n_m:2 * n_m] = d_cell * c_tilde * z_i * (1.0 - z_i)
            d_gate[i, :, 2 * n_m:3 * n_m] = d_cell * z_i * (1.0 - c_tilde ** 2)
            d_gate[i, :, 3 * n_m:] = dh * tanh_c * o_i * (1.0 - o_i)
            d_cell_next = d_cell

        # target update: Monte-Carlo mean plus a rate-limited ascent step
        targets = trace.pre_sample_mean + cfg.target_rate * self._adam.step(d_gate)
        np.clip(targets[..., :2 * n_m], -SIGMOID_CLIP, SIGMOID_CLIP,
                out=targets[..., :2 * n_m])
        np.clip(targets[..., 2 * n_m:3 * n_m], -TANH_CLIP, TANH_CLIP,
                out=targets[..., 2 * n_m:3 * n_m])
        np.clip(targets[..., 3 * n_m:], -SIGMOID_CLIP, SIGMOID_CLIP,
                out=targets[..., 3 * n_m:])
        self._targets = targets

        self._update_bank(self.gates, phi_g, self._grouped(targets), mu_g, sigma_g)
        ll_y = self._update_bank(self.output, psi_g, y_g, mu_y, sigma_y)
        self._repack()
        return ll_y

    def _update_bank(self, bank: RegressionBank, phi_g: np.ndarray, s_g: np.ndarray,
                     mu_cur: np.ndarray, sigma_cur: np.ndarray) -> float:
        """Fixed-point hyperparameters, fresh posterior, relevance pruning.

        ``mu_cur``/``sigma_cur`` are the exact posterior moments at the
        incoming hyperparameters; the precision re-estimates read them.
        """
        cfg = self.config
        sigma_diag = ard.diag_grouped(sigma_cur)
        alpha_new = np.clip(1.0 / np.maximum(mu_cur ** 2 + sigma_diag, 1e-300),
                            *cfg.alpha_bounds)
        gamma_old = 1.0 - bank.alpha * sigma_diag
        beta_new = ard.update_beta_grouped(phi_g, s_g, mu_cur, gamma_old,
                                           cfg.beta_bounds)
        mu, sigma, logdet = ard.posterior_moments_grouped(phi_g, s_g, alpha_new, beta_new)
        ll = float(np.sum(ard.evidence_grouped(phi_g, s_g, alpha_new, beta_new,
                                               mu, logdet)))
        gamma = 1.0 - alpha_new * ard.diag_grouped(sigma)
        mask = gamma <= cfg.prune_tau
        bank.alpha = alpha_new
        bank.beta = beta_new
        bank.mu = np.where(mask, 0.0, mu)
        bank.sigma = sigma
        bank.gamma = gamma
        bank.mask = mask
        return ll

    # -------------------------------------------------------------------- fit

    def fit(self, dataset: SequenceDataset, max_epochs: int | None = None,
            seed: int = 0) -> ConvergenceReport:
        """Alternate forward and backward epochs until converged or capped."""
        cfg = self.config
        if (dataset.n_features, dataset.n_outputs) != (cfg.n_features, cfg.n_outputs):
            raise ShapeMismatch("dataset dimensions do not match the model config")
        max_epochs = cfg.max_epochs if max_epochs is None else max_epochs
        self.init_params(dataset.n_steps, seed)
        self.input_norm = dataset.input_norm
        self.target_norm = dataset.target_norm
        self.train_designs = dataset.designs.copy()

        x_tm = dataset.inputs_time_major()
        y_tm = dataset.targets_time_major()
        rule = ConvergenceRule(cfg.convergence_tol, cfg.convergence_window)
        self.sparsity_history = [self.sparsity_report()]
        started = _time.perf_counter()
        converged = False
        epoch = 0
        for epoch in range(1, max_epochs + 1):
            rng = stream(seed, _STREAM_EPOCH, epoch)
            trace = self.forward_epoch(x_tm, rng)
            ll_y = self.backward_epoch(trace, y_tm)
            if not np.isfinite(ll_y):
                raise Divergence(epoch)
            self.loglik_history.append(ll_y)
            self.sparsity_history.append(self.sparsity_report())
            if rule.update(ll_y):
                converged = True
                break
        wall = _time.perf_counter() - started
        return ConvergenceReport(
            epochs_used=epoch, converged=converged,
            final_loglik=self.loglik_history[-1] if self.loglik_history else np.nan,
            loglik_history=list(self.loglik_history),
            sparsity_history=list(self.sparsity_history),
            wall_time_s=wall, time_per_epoch_s=wall / max(epoch, 1))

    # ---------------------------------------------------------------- predict

    def predict(self, inputs, mode: str | None = None, mc_samples: int | None = None,
                seed: int = 0) -> Prediction:
        """Predictive mean and variance for raw (physical-unit) inputs.

        ``inputs`` is a SequenceDataset or an (n_b, m, n_f) array; it is
        normalized with the training normalizer. Results are normalized and
        batch-major. "sampled" mode propagates Monte-Carlo gate draws,
        "mean" pushes the means through the activations with no sampling.
        """
        if not self.fitted:
            raise NotTrained("fit or load a checkpoint before predicting")
        raw = inputs.inputs if isinstance(inputs, SequenceDataset) else np.asarray(inputs)
        if raw.ndim != 3:
            raise ShapeMismatch(f"inputs must be (n_b, m, n_f), got {raw.shape}")
        x_tm = np.swapaxes(self.input_norm.normalize(raw), 0, 1).copy()
        mode = mode or self.config.mode
        rng = stream(seed, _STREAM_PREDICT)
        trace = self.forward_epoch(x_tm, rng, mode=mode, mc_samples=mc_samples)
        spread = trace.hidden_mad if self.config.spread_stat == "mad" else trace.hidden_std
        k = 1 if mode == "mean" else (mc_samples or self.config.mc_samples)

        def swap(a):
            return np.swapaxes(a, 0, 1).copy()

        return Prediction(
            mean=swap(trace.y_mean), variance=swap(trace.y_var),
            hidden_mean=swap(trace.hidden_mp), hidden_spread=swap(spread),
            hidden_std=swap(trace.hidden_std), mode=mode, mc_samples=k)

    # ------------------------------------------------------------------ misc

    def sparsity_report(self) -> dict:
        """Pruned fraction per gate, for the output layer, and overall."""
        if self.gates is None:
            raise NotTrained("model has no parameters yet")
        n_m = self.config.n_units
        report = {}
        for k, g in enumerate(GATES):
            report[g] = float(self.gates.mask[:, k * n_m:(k + 1) * n_m, :].mean())
        report["gates"] = self.gates.sparsity()
        report["output"] = self.output.sparsity()
        total = self.gates.mask.sum() + self.output.mask.sum()
        report["total"] = float(total / (self.gates.n_weights + self.output.n_weights))
        return report
