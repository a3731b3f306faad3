"""Nonlinear robot impedance behind the actuator-length/force port.

The robot side of the coupled system maps motion to force: rigid-body
dynamics expressed in joint space, projected through configuration-dependent
moment arms into actuator-length space.  Plants implement :class:`RobotPort`;
the shipped two-link leg and single degree-of-freedom arm live in
:mod:`sealp.plants`.

Ground contact is parameterized by nonnegative intensities on friction-cone
basis vectors at a toe and a heel point; :func:`contact_constraint_rows`
emits the planar Newton-Euler balance as rows linear in the optimization
variables, with configuration-dependent matrices frozen at the baseline
trajectory.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

GRAVITY = 9.81


class KinematicsError(ValueError):
    """Configuration or actuator length outside the transmission's range."""


class ImpedanceError(ValueError):
    """Robot impedance is not evaluable at this configuration."""


class RobotPort(abc.ABC):
    """Interface the optimizer needs from any robot plant.

    All quantities are in SI units; ``p`` joints, each driven by one
    actuator through a (possibly nonlinear) transmission with diagonal
    moment-arm Jacobian L(q), so L(q) qdot = zdot.
    """

    p: int

    @abc.abstractmethod
    def mass_matrix(self, q: np.ndarray) -> np.ndarray:
        """Joint-space inertia matrix M(q), (p, p), symmetric PD."""

    @abc.abstractmethod
    def coriolis(self, q: np.ndarray, q_dot: np.ndarray) -> np.ndarray:
        """Coriolis/centrifugal torque vector C(q, qdot), (p,)."""

    @abc.abstractmethod
    def gravity(self, q: np.ndarray) -> np.ndarray:
        """Gravity torque vector G(q), (p,)."""

    @abc.abstractmethod
    def moment_arm(self, q: np.ndarray) -> np.ndarray:
        """Transmission Jacobian L(q), (p, p) diagonal, m/rad."""

    @abc.abstractmethod
    def moment_arm_rate(self, q: np.ndarray, q_dot: np.ndarray) -> np.ndarray:
        """Time derivative dL/dt along (q, qdot), (p, p)."""

    @abc.abstractmethod
    def length_from_joint(self, q: np.ndarray) -> np.ndarray:
        """Actuator lengths z(q), (p,)."""

    @abc.abstractmethod
    def joint_from_length(self, z: np.ndarray) -> np.ndarray:
        """Joint angles q(z), inverse of :meth:`length_from_joint`."""

    # Center-of-mass kinematics are required only by plants used with
    # contact constraints or COM-velocity objectives.
    def com_position(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no COM kinematics")

    def com_jacobian(self, q: np.ndarray) -> np.ndarray:
        """d(COM position)/dq, (2, p): rows are x and y components."""
        raise NotImplementedError(f"{type(self).__name__} has no COM kinematics")

    def angular_momentum_matrix(self, q: np.ndarray) -> np.ndarray:
        """Row mapping qdot to angular momentum about the COM, (p,)."""
        raise NotImplementedError(f"{type(self).__name__} has no momentum map")

    @property
    def total_mass(self) -> float:
        raise NotImplementedError(f"{type(self).__name__} has no mass total")


@dataclass(frozen=True)
class ImpedanceTerms:
    """Robot impedance at the actuator port, frozen at one (q, qdot).

    ``reflected_inertia`` is the joint inertia reflected through the
    transmission minus the pseudo-mass; ``bias_b`` collects gravity,
    Coriolis, and moment-arm-rate forces in actuator coordinates.
    """

    reflected_inertia: np.ndarray  # (p, p)
    bias_b: np.ndarray  # (p,)


def impedance_terms(plant: RobotPort, q: np.ndarray, q_dot: np.ndarray,
                    M_p: float | np.ndarray) -> ImpedanceTerms:
    """Evaluate the robot impedance F' = R zdd + b at one state.

    R = L^-T M L^-1 - M_p I and b = L^-T (C + G - M L^-1 Ldot qdot).
    """
    q = np.asarray(q, dtype=float)
    q_dot = np.asarray(q_dot, dtype=float)
    L = plant.moment_arm(q)
    if abs(np.linalg.det(L)) < 1e-12:
        raise ImpedanceError(f"singular moment arm at q={q}")
    L_inv = np.linalg.inv(L)
    M = plant.mass_matrix(q)
    L_dot = plant.moment_arm_rate(q, q_dot)
    R = L_inv.T @ M @ L_inv - np.diag(np.broadcast_to(M_p, plant.p))
    b = L_inv.T @ (plant.coriolis(q, q_dot) + plant.gravity(q)
                   - M @ L_inv @ L_dot @ q_dot)
    return ImpedanceTerms(reflected_inertia=R, bias_b=b)


@dataclass(frozen=True)
class ContactModel:
    """Point contacts with static Coulomb friction at toe and heel.

    Each point carries two friction-cone basis vectors (mu, 1) and (-mu, 1);
    the contact wrench is the nonnegative combination of the four basis
    forces, so feasibility implies a zero-moment-point condition.
    """

    mu: float
    toe_x: float = 0.15  # foot-frame x offset of the toe point (m)
    heel_x: float = -0.05  # foot-frame x offset of the heel point (m)

    phi_count = 4

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"friction coefficient must be positive, got {self.mu}")

    @property
    def basis(self) -> np.ndarray:
        """(2, 4) force basis; columns are [toe+, toe-, heel+, heel-]."""
        mu = self.mu
        return np.array([[mu, -mu, mu, -mu], [1.0, 1.0, 1.0, 1.0]])

    @property
    def point_x(self) -> np.ndarray:
        """Ground x position of each basis force's application point."""
        return np.array([self.toe_x, self.toe_x, self.heel_x, self.heel_x])


@dataclass(frozen=True)
class ContactRows:
    """Planar Newton-Euler balance rows, linear in (x_n, u_n, Phi_n).

    Rows are [x force, y force, moment about the COM]; each row reads
    C_x x + C_u u + C_phi Phi = rhs.
    """

    C_x: np.ndarray  # (3, nx)
    C_u: np.ndarray  # (3, p)
    C_phi: np.ndarray  # (3, 4)
    rhs: np.ndarray  # (3,)


def _fd_rate(fn, q, q_dot, eps=1e-6):
    """Central-difference directional derivative of fn(q) along q_dot."""
    return (fn(q + eps * q_dot) - fn(q - eps * q_dot)) / (2 * eps)


def contact_constraint_rows(plant: RobotPort, contact: ContactModel,
                            q: np.ndarray, q_dot: np.ndarray,
                            zdd_gain_x: np.ndarray, zdd_gain_u: np.ndarray,
                            zdd_bias: np.ndarray) -> ContactRows:
    """Emit stance-phase force/moment balance rows for one time step.

    The actuator acceleration map zdd = Gx x + Gu u + g0 (from the
    per-iteration linearization) is pushed through the frozen kinematics to
    express COM acceleration and centroidal angular momentum rate as affine
    functions of the LP variables; the contact intensities must supply the
    matching wrench.
    """
    q = np.asarray(q, dtype=float)
    q_dot = np.asarray(q_dot, dtype=float)
    m = plant.total_mass
    L_inv = np.linalg.inv(plant.moment_arm(q))
    L_dot = plant.moment_arm_rate(q, q_dot)
    # qdd = L^-1 (zdd - Ldot qdot), affine in (x, u)
    qdd_gain_x = L_inv @ zdd_gain_x
    qdd_gain_u = L_inv @ zdd_gain_u
    qdd_bias = L_inv @ (zdd_bias - L_dot @ q_dot)

    J = plant.com_jacobian(q)
    Jdot_qd = _fd_rate(plant.com_jacobian, q, q_dot) @ q_dot
    # a_com = J qdd + Jdot qdot
    acc_gain_x = J @ qdd_gain_x
    acc_gain_u = J @ qdd_gain_u
    acc_bias = J @ qdd_bias + Jdot_qd

    A_G = plant.angular_momentum_matrix(q)
    AGdot_qd = _fd_rate(plant.angular_momentum_matrix, q, q_dot) @ q_dot
    hdot_gain_x = A_G @ qdd_gain_x
    hdot_gain_u = A_G @ qdd_gain_u
    hdot_bias = A_G @ qdd_bias + AGdot_qd

    com = plant.com_position(q)
    basis = contact.basis
    # Torque of each basis force about the (frozen) COM: in 2D,
    # tau = (r - c) x f with contact points on the ground (y = 0).
    tau = (contact.point_x - com[0]) * basis[1] + com[1] * basis[0]

    # Rows: x force balance, y force balance, moment balance about the COM.
    C_x = np.vstack([m * acc_gain_x, hdot_gain_x[None, :]])
    C_u = np.vstack([m * acc_gain_u, hdot_gain_u[None, :]])
    C_phi = -np.vstack([basis, tau[None, :]])
    rhs = np.array([
        -m * acc_bias[0],
        -m * acc_bias[1] - m * GRAVITY,
        -hdot_bias,
    ])
    return ContactRows(C_x=C_x, C_u=C_u, C_phi=C_phi, rhs=rhs)
