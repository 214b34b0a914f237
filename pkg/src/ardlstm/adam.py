"""Minimal ADAM moment tracker used for stabilized update directions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamState:
    """First/second moment accumulators for one array of update targets.

    ``step`` returns the bias-corrected update direction; the caller applies
    its own rate. Standard constants: decay 0.9 / 0.999, eps 1e-8.
    """

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, array: np.ndarray, **kwargs) -> "AdamState":
        return cls(m=np.zeros_like(array, dtype=np.float64),
                   v=np.zeros_like(array, dtype=np.float64), **kwargs)

    def step(self, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return m_hat / (np.sqrt(v_hat) + self.eps)
