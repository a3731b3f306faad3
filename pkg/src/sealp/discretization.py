"""Zero-order-hold discretization of the continuous actuator model.

Both inputs (motor current and net output force) are held constant over each
step, so the exact discrete pair comes from a single augmented matrix
exponential.  An aliasing check warns when the sampling rate cannot represent
the fastest continuous mode; that is the failure mode the pseudo-mass exists
to prevent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .actuator import ContinuousActuatorModel, max_eigenvalue_frequency


class AliasingWarning(UserWarning):
    """The fastest continuous mode exceeds the Nyquist rate of the step."""


def matrix_exponential(M: np.ndarray) -> np.ndarray:
    """exp(M) for a square matrix via scaling-and-squaring Pade."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix exponential needs a square matrix, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix exponential needs finite entries")
    return scipy.linalg.expm(M)


@dataclass(frozen=True)
class DiscreteActuatorModel:
    """Exact ZOH discretization of a continuous actuator model."""

    A: np.ndarray  # (nx, nx)
    B: np.ndarray  # (nx, 2p), columns ordered [current | force]
    dt: float

    @property
    def B_u(self) -> np.ndarray:
        return self.B[:, : self.B.shape[1] // 2]

    @property
    def B_f(self) -> np.ndarray:
        return self.B[:, self.B.shape[1] // 2:]


def zoh_discretize(model: ContinuousActuatorModel, dt: float,
                   warn_aliasing: bool = True) -> DiscreteActuatorModel:
    """Discretize the actuator model with both inputs held over each step.

    The pair (A, B) is read off the augmented exponential
    exp([[Ac, Bc], [0, 0]] dt), which is exact for LTI dynamics.
    """
    if dt <= 0:
        raise ValueError(f"step length must be positive, got {dt}")
    nx = model.nx
    nu = model.B.shape[1]
    aug = np.zeros((nx + nu, nx + nu))
    aug[:nx, :nx] = model.A
    aug[:nx, nx:] = model.B
    M = matrix_exponential(aug * dt)
    if warn_aliasing:
        w_max = max_eigenvalue_frequency(model)
        if w_max * dt > np.pi:
            warnings.warn(
                f"fastest continuous mode ({w_max:.1f} rad/s) exceeds the "
                f"Nyquist rate for dt={dt} s; the discrete model will alias. "
                f"Increase the pseudo-mass or reduce the step.",
                AliasingWarning,
                stacklevel=2,
            )
    return DiscreteActuatorModel(A=M[:nx, :nx], B=M[:nx, nx:], dt=dt)
