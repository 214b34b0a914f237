"""Sparse Bayesian LSTM toolkit.

A recurrent surrogate model whose gate weights are inferred by automatic
relevance determination, next to a point-estimate LSTM baseline, synthetic
sequence data generation, and uncertainty-aware evaluation utilities.
"""

from .ard import ArdRegression, HyperpriorConfig
from .ard_lstm import ArdLstm, ArdLstmConfig, ConvergenceReport, Prediction
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    BendingSurrogateConfig,
    CsvSchema,
    Normalizer,
    SequenceDataset,
    generate_bending_like,
    load_csv,
    write_csv,
)
from .evaluation import SweepResult, expected_improvement, r_squared, uncertainty_sweep
from .lstm import (
    LstmWeights,
    PointLstm,
    lstm_backward,
    lstm_forward,
    mse_loss,
    sgd_step,
    train_lstm,
)

__version__ = "0.1.0"

__all__ = [
    "ArdLstm",
    "ArdLstmConfig",
    "ArdRegression",
    "BendingSurrogateConfig",
    "ConvergenceReport",
    "CsvSchema",
    "HyperpriorConfig",
    "LstmWeights",
    "Normalizer",
    "PointLstm",
    "Prediction",
    "SequenceDataset",
    "SweepResult",
    "__version__",
    "expected_improvement",
    "generate_bending_like",
    "load_checkpoint",
    "load_csv",
    "lstm_backward",
    "lstm_forward",
    "mse_loss",
    "r_squared",
    "save_checkpoint",
    "sgd_step",
    "train_lstm",
    "uncertainty_sweep",
    "write_csv",
]
