"""Shipped robot plants and actuator-to-joint transmissions.

Two plants mirror the study hardware: a planar two-link jumping leg driven
through nonlinear linkage transmissions at the ankle and knee, and a single
degree-of-freedom arm.  A constant-coefficient plant is included for LTI
sanity scenarios and tests.

The linkage closed forms for the leg are not published; the lever
transmission here is a law-of-cosines model calibrated so its length range
matches the documented actuator stroke.  A quadratic surrogate with a
polynomial moment arm is available as an alternative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .robot import GRAVITY, KinematicsError, RobotPort


@dataclass(frozen=True)
class LeverTransmission:
    """Crank/lever linkage: actuator spans a triangle with sides a and b.

    The included angle is theta = gain * q - offset, so the length is
    z = sqrt(a^2 + b^2 - 2 a b cos(theta)).  Valid for theta in (0, pi);
    the moment arm vanishes at the ends of the stroke.
    """

    a: float
    b: float
    gain: float = 1.0
    offset: float = 0.0

    def _theta(self, q: float) -> float:
        return self.gain * q - self.offset

    def length(self, q: float) -> float:
        th = self._theta(q)
        if not 0.0 <= th <= np.pi:
            raise KinematicsError(
                f"joint angle {q} outside lever range (theta={th:.3f})")
        return float(np.sqrt(self.a**2 + self.b**2
                             - 2 * self.a * self.b * np.cos(th)))

    def angle(self, z: float) -> float:
        c = (self.a**2 + self.b**2 - z**2) / (2 * self.a * self.b)
        if not -1.0 <= c <= 1.0:
            raise KinematicsError(f"length {z} outside lever stroke")
        return (np.arccos(c) + self.offset) / self.gain

    def moment_arm(self, q: float) -> float:
        th = self._theta(q)
        return float(self.a * self.b * self.gain * np.sin(th) / self.length(q))

    def moment_arm_slope(self, q: float, eps: float = 1e-7) -> float:
        return (self.moment_arm(q + eps) - self.moment_arm(q - eps)) / (2 * eps)


@dataclass(frozen=True)
class AffineTransmission:
    """Constant moment arm: z = z_ref + ratio * (q - q_ref)."""

    ratio: float
    z_ref: float = 0.0
    q_ref: float = 0.0

    def length(self, q: float) -> float:
        return self.z_ref + self.ratio * (q - self.q_ref)

    def angle(self, z: float) -> float:
        return self.q_ref + (z - self.z_ref) / self.ratio

    def moment_arm(self, q: float) -> float:
        return self.ratio

    def moment_arm_slope(self, q: float) -> float:
        return 0.0


@dataclass(frozen=True)
class QuadraticTransmission:
    """Smooth surrogate with a linearly varying moment arm.

    L(q) = c0 + c1 (q - q_ref), so z is quadratic in q.  Requires L > 0 on
    the working range.
    """

    c0: float
    c1: float
    z_ref: float = 0.0
    q_ref: float = 0.0

    def length(self, q: float) -> float:
        dq = q - self.q_ref
        return self.z_ref + self.c0 * dq + 0.5 * self.c1 * dq**2

    def angle(self, z: float) -> float:
        if self.c1 == 0.0:
            dq = (z - self.z_ref) / self.c0
        else:
            disc = self.c0**2 + 2 * self.c1 * (z - self.z_ref)
            if disc < 0:
                raise KinematicsError(f"length {z} outside surrogate stroke")
            dq = (-self.c0 + np.sqrt(disc)) / self.c1
        return self.q_ref + dq

    def moment_arm(self, q: float) -> float:
        L = self.c0 + self.c1 * (q - self.q_ref)
        if L <= 0:
            raise KinematicsError(f"surrogate moment arm nonpositive at q={q}")
        return L

    def moment_arm_slope(self, q: float) -> float:
        return self.c1


class _TransmissionSet:
    """Diagonal moment-arm plumbing shared by the shipped plants."""

    def __init__(self, transmissions):
        self.transmissions = tuple(transmissions)
        self.p = len(self.transmissions)

    def moment_arm(self, q):
        return np.diag([t.moment_arm(qi)
                        for t, qi in zip(self.transmissions, q)])

    def moment_arm_rate(self, q, q_dot):
        return np.diag([t.moment_arm_slope(qi) * qdi
                        for t, qi, qdi in zip(self.transmissions, q, q_dot)])

    def length_from_joint(self, q):
        return np.array([t.length(qi)
                         for t, qi in zip(self.transmissions, q)])

    def joint_from_length(self, z):
        return np.array([t.angle(zi)
                         for t, zi in zip(self.transmissions, z)])


class TwoLinkLeg(RobotPort):
    """Planar two-link leg pinned at the ankle, standing on a flat foot.

    Joint 1 is the absolute shank angle from the ground plane (+x axis);
    joint 2 is the knee angle relative to the shank.  Link centers of mass
    sit at mid-link unless overridden.  Gravity acts in -y.
    """

    def __init__(self, m1, m2, I1, I2, l1, l2, transmissions,
                 lc1=None, lc2=None, gravity=GRAVITY):
        self.m1, self.m2 = float(m1), float(m2)
        self.I1, self.I2 = float(I1), float(I2)
        self.l1, self.l2 = float(l1), float(l2)
        self.lc1 = self.l1 / 2 if lc1 is None else float(lc1)
        self.lc2 = self.l2 / 2 if lc2 is None else float(lc2)
        self.g = float(gravity)
        self._trans = _TransmissionSet(transmissions)
        if self._trans.p != 2:
            raise ValueError("two-link leg needs exactly two transmissions")
        self.p = 2

    @property
    def total_mass(self) -> float:
        return self.m1 + self.m2

    def mass_matrix(self, q):
        c2 = np.cos(q[1])
        m2, l1, lc1, lc2 = self.m2, self.l1, self.lc1, self.lc2
        m11 = (self.I1 + self.I2 + self.m1 * lc1**2
               + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * c2))
        m12 = self.I2 + m2 * (lc2**2 + l1 * lc2 * c2)
        m22 = self.I2 + m2 * lc2**2
        return np.array([[m11, m12], [m12, m22]])

    def coriolis(self, q, q_dot):
        h = self.m2 * self.l1 * self.lc2 * np.sin(q[1])
        qd1, qd2 = q_dot
        return np.array([-h * qd2 * (2 * qd1 + qd2), h * qd1**2])

    def gravity(self, q):
        c1 = np.cos(q[0])
        c12 = np.cos(q[0] + q[1])
        g1 = self.g * ((self.m1 * self.lc1 + self.m2 * self.l1) * c1
                       + self.m2 * self.lc2 * c12)
        g2 = self.g * self.m2 * self.lc2 * c12
        return np.array([g1, g2])

    def moment_arm(self, q):
        return self._trans.moment_arm(q)

    def moment_arm_rate(self, q, q_dot):
        return self._trans.moment_arm_rate(q, q_dot)

    def length_from_joint(self, q):
        return self._trans.length_from_joint(q)

    def joint_from_length(self, z):
        return self._trans.joint_from_length(z)

    def _link_coms(self, q):
        c1, s1 = np.cos(q[0]), np.sin(q[0])
        c12, s12 = np.cos(q[0] + q[1]), np.sin(q[0] + q[1])
        p1 = np.array([self.lc1 * c1, self.lc1 * s1])
        p2 = np.array([self.l1 * c1 + self.lc2 * c12,
                       self.l1 * s1 + self.lc2 * s12])
        return p1, p2

    def com_position(self, q):
        p1, p2 = self._link_coms(q)
        return (self.m1 * p1 + self.m2 * p2) / self.total_mass

    def _link_jacobians(self, q):
        c1, s1 = np.cos(q[0]), np.sin(q[0])
        c12, s12 = np.cos(q[0] + q[1]), np.sin(q[0] + q[1])
        J1 = np.array([[-self.lc1 * s1, 0.0], [self.lc1 * c1, 0.0]])
        J2 = np.array([[-self.l1 * s1 - self.lc2 * s12, -self.lc2 * s12],
                       [self.l1 * c1 + self.lc2 * c12, self.lc2 * c12]])
        return J1, J2

    def com_jacobian(self, q):
        J1, J2 = self._link_jacobians(q)
        return (self.m1 * J1 + self.m2 * J2) / self.total_mass

    def angular_momentum_matrix(self, q):
        p1, p2 = self._link_coms(q)
        J1, J2 = self._link_jacobians(q)
        c = self.com_position(q)
        row = np.array([self.I1 + self.I2, self.I2])

        def cross_row(r, J):
            return r[0] * J[1, :] - r[1] * J[0, :]

        row = row + self.m1 * cross_row(p1 - c, J1)
        row = row + self.m2 * cross_row(p2 - c, J2)
        return row


class SingleDofArm(RobotPort):
    """Pendulum arm on one SEA-driven joint; q = 0 points straight down.

    The joint inertia is constant, but the inertia reflected to the actuator
    varies with angle through the nonlinear transmission.
    """

    def __init__(self, mass, com_radius, transmission, inertia_com=0.0,
                 gravity=GRAVITY):
        self.m = float(mass)
        self.r = float(com_radius)
        self.I_pivot = float(inertia_com) + self.m * self.r**2
        self.g = float(gravity)
        self._trans = _TransmissionSet([transmission])
        self.p = 1

    @property
    def total_mass(self) -> float:
        return self.m

    def mass_matrix(self, q):
        return np.array([[self.I_pivot]])

    def coriolis(self, q, q_dot):
        return np.zeros(1)

    def gravity(self, q):
        return np.array([self.m * self.g * self.r * np.sin(q[0])])

    def moment_arm(self, q):
        return self._trans.moment_arm(q)

    def moment_arm_rate(self, q, q_dot):
        return self._trans.moment_arm_rate(q, q_dot)

    def length_from_joint(self, q):
        return self._trans.length_from_joint(q)

    def joint_from_length(self, z):
        return self._trans.joint_from_length(z)

    def com_position(self, q):
        return np.array([self.r * np.sin(q[0]), -self.r * np.cos(q[0])])

    def com_jacobian(self, q):
        return np.array([[self.r * np.cos(q[0])], [self.r * np.sin(q[0])]])


class ConstantPlant(RobotPort):
    """Constant-inertia, constant-moment-arm plant for LTI scenarios."""

    def __init__(self, inertia, moment_arm, gravity_torque=None,
                 z_ref=None, q_ref=None):
        inertia = np.atleast_1d(np.asarray(inertia, dtype=float))
        arm = np.atleast_1d(np.asarray(moment_arm, dtype=float))
        self.p = inertia.size
        self._M = np.diag(inertia)
        self._L = np.diag(arm)
        self._G = (np.zeros(self.p) if gravity_torque is None
                   else np.atleast_1d(np.asarray(gravity_torque, dtype=float)))
        self._z_ref = (np.zeros(self.p) if z_ref is None
                       else np.atleast_1d(np.asarray(z_ref, dtype=float)))
        self._q_ref = (np.zeros(self.p) if q_ref is None
                       else np.atleast_1d(np.asarray(q_ref, dtype=float)))

    @property
    def total_mass(self) -> float:
        return float(np.trace(self._M))

    def mass_matrix(self, q):
        return self._M

    def coriolis(self, q, q_dot):
        return np.zeros(self.p)

    def gravity(self, q):
        return self._G

    def moment_arm(self, q):
        return self._L

    def moment_arm_rate(self, q, q_dot):
        return np.zeros((self.p, self.p))

    def length_from_joint(self, q):
        return self._z_ref + np.diag(self._L) * (np.asarray(q) - self._q_ref)

    def joint_from_length(self, z):
        return self._q_ref + (np.asarray(z) - self._z_ref) / np.diag(self._L)
