"""Exception types shared across the package.

Every error carries a stable ``code`` (the class name) so the CLI can emit
machine-parseable one-line failures.
"""


class ArdLstmError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class ShapeMismatch(ArdLstmError):
    """Array arguments disagree on their documented shapes."""


class NonSPD(ArdLstmError):
    """Matrix is not positive definite even after maximum diagonal jitter."""


class TraceStale(ArdLstmError):
    """A cached forward trace does not match the weights it is used with."""


class Divergence(ArdLstmError):
    """Training produced a non-finite likelihood."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"non-finite likelihood at epoch {epoch}")


class NotTrained(ArdLstmError):
    """Prediction requested from a model that was never fitted."""


class ZeroVariance(ArdLstmError):
    """Targets are constant; the requested statistic is undefined."""


class DomainError(ArdLstmError):
    """Scalar argument outside the mathematical domain of the function."""


class ParseError(ArdLstmError):
    """CSV cell could not be parsed; carries 1-based row and column."""

    def __init__(self, row: int, column: str, detail: str = ""):
        self.row = row
        self.column = column
        msg = f"row {row}, column {column!r}: not a valid number"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class MissingColumn(ArdLstmError):
    """CSV header lacks a required column."""


class NonMonotoneTime(ArdLstmError):
    """Time values within one design are not strictly increasing."""


class RaggedSequence(ArdLstmError):
    """Designs have differing sequence lengths; fixed length is required."""


class UnfittedNormalizer(ArdLstmError):
    """Normalizer used before fitting."""


class MissingCheckpoint(ArdLstmError):
    """Checkpoint path does not exist or is not a checkpoint archive."""


class ConfigError(ArdLstmError):
    """Run configuration value is missing, malformed or out of range."""
