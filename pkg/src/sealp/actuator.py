"""Continuous-time series elastic actuator models.

Each joint is driven by an SEA modeled as three second-order subsystems
(spring, motor, load) coupled through a mechanical differential, so the total
actuator length is the sum of spring displacement and motor displacement.
A fictitious pseudo-mass is lumped with the load to slow the fastest mode of
the linear model, which keeps the model accurate when discretized at large
time steps.  A rigid variant drops the spring subsystem entirely.

Multi-joint models are block diagonal: one independent actuator block per
joint, coupled to the robot only through the output force channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag


class ModelConstructionError(ValueError):
    """Raised when actuator parameters cannot produce a well-posed model."""


@dataclass(frozen=True)
class ActuatorParams:
    """Physical constants of one series elastic actuator, in linear units.

    The motor subsystem is reflected through its transmission, so masses are
    kg, dampings N*s/m, stiffness N/m, and the motor constant N/A.
    """

    M_s: float  # spring-system mass (kg)
    k: float  # spring constant (N/m)
    beta_s: float  # spring damping (N*s/m)
    M_m: float  # reflected motor mass (kg)
    beta_m: float  # motor damping (N*s/m)
    k_m: float  # reflected motor constant (N/A)
    M_L: float = 0.0  # load mass (kg)
    beta_L: float = 0.0  # load damping (N*s/m)
    M_p: float = 0.0  # pseudo-mass (kg)

    def __post_init__(self):
        if self.M_s <= 0 or self.M_m <= 0:
            raise ModelConstructionError(
                f"spring/motor masses must be positive, got M_s={self.M_s}, "
                f"M_m={self.M_m}"
            )
        if self.M_L < 0 or self.M_p < 0:
            raise ModelConstructionError("load mass and pseudo-mass must be >= 0")
        if min(self.beta_s, self.beta_m, self.beta_L) < 0:
            raise ModelConstructionError("damping coefficients must be >= 0")
        if self.k < 0:
            raise ModelConstructionError(f"spring constant must be >= 0, got {self.k}")


@dataclass(frozen=True)
class ActuatorState:
    """State of a single compliant actuator."""

    delta: float  # spring displacement (m)
    delta_dot: float  # spring velocity (m/s)
    y: float  # motor displacement (m)
    y_dot: float  # motor velocity (m/s)

    @property
    def z(self) -> float:
        """Total actuator length, the differential constraint delta + y."""
        return self.delta + self.y

    @property
    def z_dot(self) -> float:
        return self.delta_dot + self.y_dot

    def as_vector(self) -> np.ndarray:
        return np.array([self.delta, self.delta_dot, self.y, self.y_dot])


def _compliant_blocks(par: ActuatorParams):
    """Per-joint (E, A, B_u, B_f) descriptor blocks with state (d, dd, y, yd)."""
    ml = par.M_L + par.M_p
    E = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, par.M_s + ml, 0.0, ml],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, ml, 0.0, par.M_m + ml],
        ]
    )
    A = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-par.k, -(par.beta_s + par.beta_L), 0.0, -par.beta_L],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, -par.beta_L, 0.0, -(par.beta_L + par.beta_m)],
        ]
    )
    B_u = np.array([[0.0], [0.0], [0.0], [par.k_m]])
    B_f = np.array([[0.0], [-1.0], [0.0], [-1.0]])
    return E, A, B_u, B_f


def _rigid_blocks(par: ActuatorParams):
    """Per-joint blocks with the spring removed: state (y, yd), z == y."""
    E = np.array([[1.0, 0.0], [0.0, par.M_m + par.M_L + par.M_p]])
    A = np.array([[0.0, 1.0], [0.0, -(par.beta_m + par.beta_L)]])
    B_u = np.array([[0.0], [par.k_m]])
    B_f = np.array([[0.0], [-1.0]])
    return E, A, B_u, B_f


@dataclass(frozen=True)
class ContinuousActuatorModel:
    """Block-diagonal continuous LTI actuator dynamics for p joints.

    xdot = A x + B_u u + B_f F', where u is motor current per joint and F' is
    the actuator output force net of the pseudo-mass inertial term.  Selector
    matrices recover per-joint quantities from the stacked state:

      - ``S``: actuator acceleration, so zdd = S (A x + B_u u + B_f F')
      - ``Z_sel`` / ``Zdot_sel``: actuator length / velocity
      - ``delta_sel`` / ``ydot_sel``: spring displacement / motor velocity

    For the rigid variant the spring rows vanish and z coincides with the
    motor displacement.
    """

    params: tuple[ActuatorParams, ...]
    compliant: bool
    A: np.ndarray
    B_u: np.ndarray
    B_f: np.ndarray
    E: np.ndarray  # descriptor mass matrix, E @ A = raw dynamics block
    S: np.ndarray
    Z_sel: np.ndarray
    Zdot_sel: np.ndarray
    delta_sel: np.ndarray
    deltadot_sel: np.ndarray
    y_sel: np.ndarray
    ydot_sel: np.ndarray

    @property
    def p(self) -> int:
        return len(self.params)

    @property
    def nx_per_joint(self) -> int:
        return 4 if self.compliant else 2

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def B(self) -> np.ndarray:
        """Concatenated input matrix, columns ordered [current | force]."""
        return np.hstack([self.B_u, self.B_f])

    def state_from_lengths(self, z: np.ndarray, z_dot=None, delta=None,
                           delta_dot=None) -> np.ndarray:
        """Assemble a stacked state vector from per-joint lengths.

        Spring displacement defaults to zero; the motor displacement absorbs
        the remainder of the length so that z = delta + y holds exactly.
        """
        p = self.p
        z = np.asarray(z, dtype=float)
        z_dot = np.zeros(p) if z_dot is None else np.asarray(z_dot, dtype=float)
        delta = np.zeros(p) if delta is None else np.asarray(delta, dtype=float)
        delta_dot = (np.zeros(p) if delta_dot is None
                     else np.asarray(delta_dot, dtype=float))
        x = np.zeros(self.nx)
        for i in range(p):
            if self.compliant:
                x[4 * i: 4 * i + 4] = [delta[i], delta_dot[i],
                                       z[i] - delta[i], z_dot[i] - delta_dot[i]]
            else:
                x[2 * i: 2 * i + 2] = [z[i], z_dot[i]]
        return x

    def differential_force(self, x: np.ndarray, u: np.ndarray,
                           F_prime: np.ndarray) -> np.ndarray:
        """Diagnostic: internal back force of the differential per joint.

        Reconstructed from the motor force balance, f = k_m u - M_m ydd
        - beta_m yd.  Not a constrained quantity anywhere in the optimizer.
        """
        xdot = self.A @ x + self.B_u @ u + self.B_f @ F_prime
        f = np.zeros(self.p)
        nb = self.nx_per_joint
        for i, par in enumerate(self.params):
            yd = x[nb * i + (3 if self.compliant else 1)]
            ydd = xdot[nb * i + (3 if self.compliant else 1)]
            f[i] = par.k_m * u[i] - par.M_m * ydd - par.beta_m * yd
        return f


def _assemble(params, block_fn, compliant: bool) -> ContinuousActuatorModel:
    params = tuple(params)
    if not params:
        raise ModelConstructionError("at least one joint is required")
    E_blocks, A_blocks, Bu_blocks, Bf_blocks = [], [], [], []
    for j, par in enumerate(params):
        E, A, B_u, B_f = block_fn(par)
        if abs(np.linalg.det(E)) < 1e-12:
            raise ModelConstructionError(f"degenerate mass matrix for joint {j}")
        E_blocks.append(E)
        A_blocks.append(A)
        Bu_blocks.append(B_u)
        Bf_blocks.append(B_f)
    E = block_diag(*E_blocks)
    A_raw = block_diag(*A_blocks)
    B_u_raw = block_diag(*Bu_blocks)
    B_f_raw = block_diag(*Bf_blocks)
    E_inv = np.linalg.inv(E)
    p = len(params)
    nb = 4 if compliant else 2
    if compliant:
        z_row = np.array([1.0, 0.0, 1.0, 0.0])
        zd_row = np.array([0.0, 1.0, 0.0, 1.0])
        d_row = np.array([1.0, 0.0, 0.0, 0.0])
        dd_row = np.array([0.0, 1.0, 0.0, 0.0])
        y_row = np.array([0.0, 0.0, 1.0, 0.0])
        yd_row = np.array([0.0, 0.0, 0.0, 1.0])
    else:
        z_row = np.array([1.0, 0.0])
        zd_row = np.array([0.0, 1.0])
        d_row = np.zeros(2)
        dd_row = np.zeros(2)
        y_row = np.array([1.0, 0.0])
        yd_row = np.array([0.0, 1.0])
    eye = np.eye(p)
    return ContinuousActuatorModel(
        params=params,
        compliant=compliant,
        A=E_inv @ A_raw,
        B_u=E_inv @ B_u_raw,
        B_f=E_inv @ B_f_raw,
        E=E,
        S=np.kron(eye, zd_row.reshape(1, nb)),
        Z_sel=np.kron(eye, z_row.reshape(1, nb)),
        Zdot_sel=np.kron(eye, zd_row.reshape(1, nb)),
        delta_sel=np.kron(eye, d_row.reshape(1, nb)),
        deltadot_sel=np.kron(eye, dd_row.reshape(1, nb)),
        y_sel=np.kron(eye, y_row.reshape(1, nb)),
        ydot_sel=np.kron(eye, yd_row.reshape(1, nb)),
    )


def build_continuous_model(params) -> ContinuousActuatorModel:
    """Build the compliant (fourth order per joint) actuator model."""
    return _assemble(params, _compliant_blocks, compliant=True)


def rigid_variant(params) -> ContinuousActuatorModel:
    """Build the rigid (second order per joint) model with no spring states."""
    return _assemble(params, _rigid_blocks, compliant=False)


def max_eigenvalue_frequency(model: ContinuousActuatorModel,
                             A: np.ndarray | None = None) -> float:
    """Fastest mode frequency of a continuous system, in rad/s.

    Returns the largest imaginary part over the spectrum when oscillatory
    modes exist, otherwise the largest eigenvalue magnitude.  Used to align
    the pseudo-mass with the true coupled dynamics and to detect sampling
    rates that would alias the spring mode.
    """
    eigs = np.linalg.eigvals(model.A if A is None else A)
    imag = np.abs(eigs.imag)
    if imag.max() > 1e-9:
        return float(imag.max())
    return float(np.abs(eigs).max())
