"""Point-estimate LSTM baseline.

Single-cell LSTM with a linear readout, trained full-batch on fixed-length
sequences. Arrays are time-major: inputs ``(m, n_b, n_f)``, targets
``(m, n_b, n_out)``. Weights are shared across time steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adam import AdamState
from .errors import ShapeMismatch, TraceStale
from .linalg import sigmoid

GATES = ("f", "z", "c", "o")

#: activation applied to each gate's pre-activation
GATE_ACTIVATION = {"f": "sigmoid", "z": "sigmoid", "c": "tanh", "o": "sigmoid"}


def gate_activation(name: str, x: np.ndarray) -> np.ndarray:
    return np.tanh(x) if GATE_ACTIVATION[name] == "tanh" else sigmoid(x)


@dataclass
class LstmWeights:
    """Per-gate weight matrices/biases plus the linear output layer.

    weights[g] has shape (n_f + n_m, n_m), biases[g] shape (n_m,), and
    w_y shape (1 + n_m, n_out) with row 0 acting as the output bias.
    """

    weights: dict[str, np.ndarray]
    biases: dict[str, np.ndarray]
    w_y: np.ndarray

    @property
    def n_units(self) -> int:
        return self.weights["f"].shape[1]

    @property
    def n_features(self) -> int:
        return self.weights["f"].shape[0] - self.n_units

    @property
    def n_outputs(self) -> int:
        return self.w_y.shape[1]

    def augmented(self, gate: str) -> np.ndarray:
        """Bias-augmented gate matrix: row 0 is the bias."""
        return np.vstack([self.biases[gate][None, :], self.weights[gate]])

    def copy(self) -> "LstmWeights":
        return LstmWeights(
            weights={g: w.copy() for g, w in self.weights.items()},
            biases={g: b.copy() for g, b in self.biases.items()},
            w_y=self.w_y.copy(),
        )


@dataclass
class CellTrace:
    """Everything the backward pass needs from one forward sweep."""

    phi: np.ndarray          # (m, n_b, n_f + n_m), [x_i, h_{i-1}]
    gates: dict[str, np.ndarray]   # each (m, n_b, n_m)
    cell: np.ndarray         # (m, n_b, n_m)
    hidden: np.ndarray       # (m, n_b, n_m)
    preds: np.ndarray        # (m, n_b, n_out)
    c0: np.ndarray = field(repr=False, default=None)


def init_weights(n_features: int, n_units: int, n_outputs: int,
                 rng: np.random.Generator,
                 alpha_range: tuple[float, float] = (1e1, 1e6)) -> LstmWeights:
    """Random initial weights drawn the same way the sparse prior samples its means.

    Each entry gets a precision drawn log-uniform on ``alpha_range`` and a
    value from the corresponding zero-mean Gaussian, so initial weights are
    small and heavily clustered around zero.
    """
    lo, hi = np.log(alpha_range[0]), np.log(alpha_range[1])

    def draw(shape):
        alpha = np.exp(rng.uniform(lo, hi, size=shape))
        return rng.standard_normal(shape) / np.sqrt(alpha)

    d_in = n_features + n_units
    return LstmWeights(
        weights={g: draw((d_in, n_units)) for g in GATES},
        biases={g: draw((n_units,)) for g in GATES},
        w_y=draw((1 + n_units, n_outputs)),
    )


def lstm_forward(weights: LstmWeights, inputs: np.ndarray,
                 h0: np.ndarray | None = None,
                 c0: np.ndarray | None = None) -> CellTrace:
    """Run the cell over all time steps and apply the linear readout.

    Gate pre-activations are computed as one bias-augmented matmul
    ``[1, x_i, h_{i-1}] @ [b_g; w_g]`` per gate.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3:
        raise ShapeMismatch(f"inputs must be (m, n_b, n_f), got {inputs.shape}")
    m, n_b, n_f = inputs.shape
    if n_f != weights.n_features:
        raise ShapeMismatch(f"inputs have {n_f} features, weights expect {weights.n_features}")
    n_m = weights.n_units

    h = np.zeros((n_b, n_m)) if h0 is None else np.asarray(h0, dtype=np.float64)
    c = np.zeros((n_b, n_m)) if c0 is None else np.asarray(c0, dtype=np.float64)
    if h.shape != (n_b, n_m) or c.shape != (n_b, n_m):
        raise ShapeMismatch("h0/c0 must be (n_b, n_units)")
    c_init = c.copy()

    aug = {g: weights.augmented(g) for g in GATES}
    ones = np.ones((n_b, 1))
    phi = np.empty((m, n_b, n_f + n_m))
    gates = {g: np.empty((m, n_b, n_m)) for g in GATES}
    cell = np.empty((m, n_b, n_m))
    hidden = np.empty((m, n_b, n_m))
    preds = np.empty((m, n_b, weights.n_outputs))

    for i in range(m):
        phi_aug = np.concatenate([ones, inputs[i], h], axis=1)
        phi[i] = phi_aug[:, 1:]
        acts = {g: gate_activation(g, phi_aug @ aug[g]) for g in GATES}
        c = acts["f"] * c + acts["z"] * acts["c"]
        h = acts["o"] * np.tanh(c)
        for g in GATES:
            gates[g][i] = acts[g]
        cell[i] = c
        hidden[i] = h
        preds[i] = np.concatenate([ones, h], axis=1) @ weights.w_y

    return CellTrace(phi=phi, gates=gates, cell=cell, hidden=hidden,
                     preds=preds, c0=c_init)


def mse_loss(targets: np.ndarray, preds: np.ndarray) -> float:
    """Half squared error summed over time, batch and outputs."""
    targets = np.asarray(targets, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    if targets.shape != preds.shape:
        raise ShapeMismatch(f"targets {targets.shape} vs predictions {preds.shape}")
    diff = targets - preds
    return 0.5 * float(np.sum(diff * diff))


@dataclass
class LstmGradients:
    weights: dict[str, np.ndarray]
    biases: dict[str, np.ndarray]
    w_y: np.ndarray


def lstm_backward(trace: CellTrace, targets: np.ndarray,
                  weights: LstmWeights) -> LstmGradients:
    """Backpropagation through time for the half-squared-error loss.

    Terminal recurrent terms are zero: no hidden gradient flows into the
    last step from beyond the sequence and the cell gradient past the end
    is zero.
    """
    targets = np.asarray(targets, dtype=np.float64)
    m, n_b, n_m = trace.hidden.shape
    n_f = weights.n_features
    if trace.phi.shape[2] != n_f + n_m or n_m != weights.n_units:
        raise TraceStale("trace shapes disagree with weights")
    if targets.shape != trace.preds.shape:
        raise ShapeMismatch(f"targets {targets.shape} vs predictions {trace.preds.shape}")

    res = trace.preds - targets                     # dJ/d(prediction)
    rec = {g: weights.weights[g][n_f:, :] for g in GATES}

    grad_w = {g: np.zeros_like(weights.weights[g]) for g in GATES}
    grad_b = {g: np.zeros_like(weights.biases[g]) for g in GATES}
    grad_wy = np.zeros_like(weights.w_y)
    ones = np.ones((n_b, 1))

    d_gate_next: dict[str, np.ndarray] | None = None
    d_cell_next = np.zeros((n_b, n_m))
    f_next = np.zeros((n_b, n_m))

    for i in reversed(range(m)):
        psi = np.concatenate([ones, trace.hidden[i]], axis=1)
        grad_wy += psi.T @ res[i]

        dh = res[i] @ weights.w_y[1:, :].T
        if d_gate_next is not None:
            for g in GATES:
                dh += d_gate_next[g] @ rec[g].T

        f_i, z_i, c_tilde, o_i = (trace.gates[g][i] for g in GATES)
        tanh_c = np.tanh(trace.cell[i])
        c_prev = trace.cell[i - 1] if i > 0 else trace.c0

        d_cell = dh * o_i * (1.0 - tanh_c ** 2) + d_cell_next * f_next
        d_gate = {
            "c": d_cell * z_i * (1.0 - c_tilde ** 2),
            "z": d_cell * c_tilde * z_i * (1.0 - z_i),
            "f": d_cell * c_prev * f_i * (1.0 - f_i),
            "o": dh * tanh_c * o_i * (1.0 - o_i),
        }
        for g in GATES:
            grad_w[g] += trace.phi[i].T @ d_gate[g]
            grad_b[g] += d_gate[g].sum(axis=0)

        d_gate_next = d_gate
        d_cell_next = d_cell
        f_next = f_i

    return LstmGradients(weights=grad_w, biases=grad_b, w_y=grad_wy)


def sgd_step(weights: LstmWeights, grads: LstmGradients, lr: float) -> LstmWeights:
    """Plain gradient-descent update of every gate and output weight."""
    return LstmWeights(
        weights={g: weights.weights[g] - lr * grads.weights[g] for g in GATES},
        biases={g: weights.biases[g] - lr * grads.biases[g] for g in GATES},
        w_y=weights.w_y - lr * grads.w_y,
    )


@dataclass
class PointLstm:
    """A trained point-estimate LSTM bundled with its normalizers."""

    weights: LstmWeights
    input_norm: object
    target_norm: object
    loss_history: list[float]
    train_designs: np.ndarray

    @classmethod
    def train(cls, dataset, n_units: int, epochs: int, lr: float, seed: int = 0,
              optimizer: str = "adam") -> "PointLstm":
        rng = np.random.default_rng(seed)
        weights = init_weights(dataset.n_features, n_units, dataset.n_outputs, rng)
        weights, history = train_lstm(weights, dataset.inputs_time_major(),
                                      dataset.targets_time_major(), epochs, lr,
                                      optimizer)
        return cls(weights=weights, input_norm=dataset.input_norm,
                   target_norm=dataset.target_norm, loss_history=history,
                   train_designs=dataset.designs.copy())

    def predict(self, inputs) -> np.ndarray:
        """Deterministic predictions in normalized space, (n_b, m, n_out)."""
        raw = inputs.inputs if hasattr(inputs, "inputs") else np.asarray(inputs)
        x_tm = np.swapaxes(self.input_norm.normalize(raw), 0, 1).copy()
        trace = lstm_forward(self.weights, x_tm)
        return np.swapaxes(trace.preds, 0, 1).copy()


def train_lstm(weights: LstmWeights, inputs: np.ndarray, targets: np.ndarray,
               epochs: int, lr: float, optimizer: str = "adam") -> tuple[LstmWeights, list[float]]:
    """Full-batch training loop; returns final weights and the loss history.

    ``optimizer`` is "adam" (default, used by the CLI) or "sgd" (the plain
    update rule).
    """
    if optimizer not in ("adam", "sgd"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    adam: dict[str, AdamState] = {}
    if optimizer == "adam":
        adam = {g: AdamState.like(weights.weights[g]) for g in GATES}
        adam |= {f"b_{g}": AdamState.like(weights.biases[g]) for g in GATES}
        adam["w_y"] = AdamState.like(weights.w_y)

    history = []
    for _ in range(epochs):
        trace = lstm_forward(weights, inputs)
        history.append(mse_loss(targets, trace.preds))
        grads = lstm_backward(trace, targets, weights)
        if optimizer == "sgd":
            weights = sgd_step(weights, grads, lr)
        else:
            weights = LstmWeights(
                weights={g: weights.weights[g] - lr * adam[g].step(grads.weights[g])
                         for g in GATES},
                biases={g: weights.biases[g] - lr * adam[f"b_{g}"].step(grads.biases[g])
                        for g in GATES},
                w_y=weights.w_y - lr * adam["w_y"].step(grads.w_y),
            )
    return weights, history
