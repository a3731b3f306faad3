"""Per-time-step affine dynamics built around a baseline length trajectory.

The actuator dynamics are linear; only the robot impedance is nonlinear.
Freezing the impedance at the baseline trajectory lets the net output force
be eliminated as an affine function of state and input, which folds into the
exact ZOH discrete update as a per-step (A_lin, B_lin, bias) triple.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .actuator import ContinuousActuatorModel
from .discretization import zoh_discretize
from .robot import ImpedanceTerms, RobotPort, impedance_terms

logger = logging.getLogger(__name__)

BRACKET_CONDITION_LIMIT = 1e8


class EliminationError(ValueError):
    """Force elimination failed; carries the step index when known."""


@dataclass(frozen=True)
class ForceMap:
    """Affine map F' = G_x x + G_u u + g at one frozen (q, qdot)."""

    G_x: np.ndarray  # (p, nx)
    G_u: np.ndarray  # (p, p)
    g: np.ndarray  # (p,)
    condition: float  # condition number of the eliminated bracket


@dataclass(frozen=True)
class LinearizedStep:
    """Discrete affine update x_{n+1} = A_lin x_n + B_lin u_n + bias.

    Also carries the frozen baseline kinematics and the continuous actuator
    acceleration map zdd = Zx x + Zu u + z0 needed by contact constraints.
    """

    A_lin: np.ndarray  # (nx, nx)
    B_lin: np.ndarray  # (nx, p)
    bias: np.ndarray  # (nx,)
    force: ForceMap
    q: np.ndarray  # (p,)
    q_dot: np.ndarray  # (p,)
    z_base: np.ndarray  # (p,)
    zdd_gain_x: np.ndarray  # (p, nx)
    zdd_gain_u: np.ndarray  # (p, p)
    zdd_bias: np.ndarray  # (p,)
    ill_conditioned: bool = False


def eliminate_F_prime(model: ContinuousActuatorModel,
                      imp: ImpedanceTerms) -> ForceMap:
    """Solve the port coupling for the net output force.

    Substituting the actuator admittance zdd = S (A x + B_u u + B_f F')
    into the robot impedance F' = R zdd + b and solving for F' yields an
    affine state/input map with gain W = (I - R S B_f)^-1.
    """
    R = imp.reflected_inertia
    p = R.shape[0]
    bracket = np.eye(p) - R @ model.S @ model.B_f
    cond = float(np.linalg.cond(bracket))
    if not np.isfinite(cond) or cond > 1e14:
        raise EliminationError(
            f"force elimination bracket is singular (condition {cond:.3g})")
    W = np.linalg.inv(bracket)
    return ForceMap(
        G_x=W @ R @ model.S @ model.A,
        G_u=W @ R @ model.S @ model.B_u,
        g=W @ imp.bias_b,
        condition=cond,
    )


def baseline_joint_rates(plant: RobotPort, Z_base: np.ndarray, dt: float,
                         Z_dot_base: np.ndarray | None = None
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Recover (q, qdot) along a baseline length trajectory.

    Length rates come from the baseline velocity states when available
    (later iterations reuse the optimizer's own velocity trajectory),
    otherwise from central differences (one-sided at the ends).  Rates map
    to joint rates through the moment arm.
    """
    Z_base = np.asarray(Z_base, dtype=float)
    N = Z_base.shape[0]
    if Z_dot_base is not None:
        Z_dot = np.asarray(Z_dot_base, dtype=float)
    else:
        Z_dot = (np.gradient(Z_base, dt, axis=0) if N > 1
                 else np.zeros_like(Z_base))
    q = np.array([plant.joint_from_length(Z_base[n]) for n in range(N)])
    q_dot = np.array([
        np.linalg.solve(plant.moment_arm(q[n]), Z_dot[n]) for n in range(N)
    ])
    return q, q_dot


def linearize_trajectory(model: ContinuousActuatorModel, plant: RobotPort,
                         Z_base: np.ndarray, dt: float, M_p,
                         Z_dot_base: np.ndarray | None = None
                         ) -> list[LinearizedStep]:
    """Build the N-1 discrete affine steps about a baseline trajectory.

    The ZOH pair is time invariant and computed once; only the force
    elimination varies along the trajectory.
    """
    Z_base = np.asarray(Z_base, dtype=float)
    N = Z_base.shape[0]
    if N < 2:
        raise ValueError("baseline trajectory needs at least two points")
    disc = zoh_discretize(model, dt)
    try:
        q, q_dot = baseline_joint_rates(plant, Z_base, dt, Z_dot_base)
    except Exception as exc:
        raise EliminationError(f"baseline kinematics failed: {exc}") from exc

    steps = []
    for n in range(N - 1):
        try:
            imp = impedance_terms(plant, q[n], q_dot[n], M_p)
            fmap = eliminate_F_prime(model, imp)
        except Exception as exc:
            raise EliminationError(f"linearization failed at step {n}: {exc}"
                                   ) from exc
        ill = fmap.condition > BRACKET_CONDITION_LIMIT
        if ill:
            logger.warning("step %d: elimination bracket condition %.3g",
                           n, fmap.condition)
        SB_f = model.S @ model.B_f
        steps.append(LinearizedStep(
            A_lin=disc.A + disc.B_f @ fmap.G_x,
            B_lin=disc.B_u + disc.B_f @ fmap.G_u,
            bias=disc.B_f @ fmap.g,
            force=fmap,
            q=q[n],
            q_dot=q_dot[n],
            z_base=Z_base[n],
            zdd_gain_x=model.S @ model.A + SB_f @ fmap.G_x,
            zdd_gain_u=model.S @ model.B_u + SB_f @ fmap.G_u,
            zdd_bias=SB_f @ fmap.g,
            ill_conditioned=ill,
        ))
    return steps
