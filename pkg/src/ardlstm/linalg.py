"""Dense linear algebra and Gaussian sampling substrate.

Everything operates on float64 numpy arrays. All routines are pure given
their inputs plus an explicit ``numpy.random.Generator``, so callers can
parallelize over disjoint data without shared state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

from .errors import NonSPD, ShapeMismatch

# Escalating diagonal jitter used when a Cholesky factorization fails.
# Near-singular Hessians are expected once many precisions hit their
# upper bound, so the solver must degrade gracefully before giving up.
JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite float64 2-d array, raising ShapeMismatch otherwise."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-d, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeMismatch(f"{name} contains non-finite entries")
    return a


def cholesky_spd(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of ``a`` with escalating diagonal jitter.

    Raises NonSPD if the factorization still fails at the largest jitter;
    callers must surface that, it signals genuine ill-conditioning.
    """
    a = np.asarray(a, dtype=np.float64)
    eye = np.eye(a.shape[-1])
    for jitter in JITTERS:
        try:
            return np.linalg.cholesky(a + jitter * eye)
        except np.linalg.LinAlgError:
            continue
    raise NonSPD(f"matrix of dim {a.shape[-1]} not positive definite after jitter {JITTERS[-1]:g}")


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``.

    Uses a jittered Cholesky factorization; the relative residual of the
    returned solution is at the level of machine precision for
    well-conditioned systems.
    """
    a = as_matrix(a, "a")
    b1 = np.asarray(b, dtype=np.float64)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"a must be square, got {a.shape}")
    if b1.shape[0] != a.shape[0]:
        raise ShapeMismatch(f"b has {b1.shape[0]} rows, expected {a.shape[0]}")
    lower = cholesky_spd(a)
    y = scipy.linalg.solve_triangular(lower, b1, lower=True)
    return scipy.linalg.solve_triangular(lower.T, y, lower=False)


def spd_inverse_batched(a: np.ndarray) -> np.ndarray:
    """Inverses of a batch ``(..., d, d)`` of SPD matrices."""
    return spd_inverse_and_logdet_batched(a)[0]


def spd_inverse_and_logdet_batched(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse and log determinant for a batch ``(..., d, d)`` of SPD matrices.

    The whole batch gets the same jitter level: escalation restarts from
    scratch whenever any member fails, keeping results independent of
    batch order.
    """
    a = np.asarray(a, dtype=np.float64)
    eye = np.eye(a.shape[-1])
    for jitter in JITTERS:
        try:
            lower = np.linalg.cholesky(a + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        logdet = 2.0 * np.sum(np.log(np.diagonal(lower, axis1=-2, axis2=-1)), axis=-1)
        return np.linalg.inv(a + jitter * eye), logdet
    raise NonSPD(f"batch of dim {a.shape[-1]} matrices not positive definite after max jitter")


def logdet_spd(a: np.ndarray) -> float:
    """log determinant of an SPD matrix via its Cholesky factor."""
    lower = cholesky_spd(a)
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


@dataclass
class GaussianSpec:
    """A multivariate Gaussian given by mean and covariance.

    ``covariance`` is either a full symmetric PSD matrix or a 1-d vector of
    per-coordinate variances (diagonal covariance).
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.covariance = np.asarray(self.covariance, dtype=np.float64)
        d = self.mean.shape[0]
        if self.covariance.ndim == 1:
            if self.covariance.shape[0] != d:
                raise ShapeMismatch("diagonal covariance length must match mean")
            if np.any(self.covariance < 0):
                raise ShapeMismatch("variances must be nonnegative")
        elif self.covariance.ndim == 2:
            if self.covariance.shape != (d, d):
                raise ShapeMismatch("covariance must be square and match mean")
            scale = max(1.0, float(np.max(np.abs(self.covariance))))
            if np.max(np.abs(self.covariance - self.covariance.T)) > 1e-10 * scale:
                raise ShapeMismatch("covariance must be symmetric")
            if np.any(np.diag(self.covariance) < 0):
                raise ShapeMismatch("covariance diagonal must be nonnegative")
        else:
            raise ShapeMismatch("covariance must be 1-d or 2-d")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """A matrix F with F @ F.T = cov, tolerating semi-definite inputs."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def sample_gaussian(spec: GaussianSpec, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``k`` i.i.d. rows from the given Gaussian. Deterministic per rng state."""
    if k < 1:
        raise ShapeMismatch("k must be >= 1")
    z = rng.standard_normal((k, spec.dim))
    if spec.covariance.ndim == 1:
        return spec.mean + z * np.sqrt(spec.covariance)
    return spec.mean + z @ _psd_factor(spec.covariance).T


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key...); same arguments, same stream."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def sigmoid(x: np.ndarray) -> np.ndarray:
    return scipy.special.expit(x)
