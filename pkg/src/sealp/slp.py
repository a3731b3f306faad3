"""Sequential linear programming outer loop.

Each iteration freezes the nonlinear robot impedance along the current
baseline length trajectory, solves the resulting LP for new state and input
trajectories, and adopts the optimized lengths as the next baseline.  The
loop stops when the 2-norm of the change in the optimal state trajectory
falls below tolerance.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .actuator import (ActuatorParams, ContinuousActuatorModel,
                       build_continuous_model, rigid_variant)
from .linearization import linearize_trajectory
from .lp import (ConstraintSet, CostSpec, LPInfeasibleError, build_subproblem,
                 solve_lp)
from .robot import ContactModel, RobotPort


@dataclass(frozen=True)
class SLPConfig:
    """Outer-loop settings."""

    N: int  # number of trajectory points
    dt: float  # step length (s)
    tol: float = 1e-3  # 2-norm trajectory-change tolerance
    max_iter: int = 40
    backend: str = "highs"
    infeasibility_retry: bool = False  # halve trust radius up to 3 times

    def __post_init__(self):
        if self.N < 2 or self.dt <= 0:
            raise ValueError("need N >= 2 and dt > 0")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("need tol > 0 and max_iter >= 1")


@dataclass(frozen=True)
class Scenario:
    """A complete optimization problem, independent of actuator variant."""

    name: str
    actuator_params: tuple[ActuatorParams, ...]
    plant: RobotPort
    config: SLPConfig
    q_init: np.ndarray
    z_min: np.ndarray
    z_max: np.ndarray
    ydot_bar: float
    u_bar: float
    dz_bar: float
    q_final: np.ndarray | None = None
    delta_bar: float | None = None
    contact: ContactModel | None = None
    com_x_velocity_zero: bool = False
    cost: CostSpec = field(default_factory=CostSpec)

    @property
    def pseudo_masses(self) -> np.ndarray:
        return np.array([par.M_p for par in self.actuator_params])

    def build_model(self, variant: str) -> ContinuousActuatorModel:
        if variant == "compliant":
            return build_continuous_model(self.actuator_params)
        if variant == "rigid":
            return rigid_variant(self.actuator_params)
        raise ValueError(f"unknown actuator variant {variant!r}")


def static_equilibrium(model: ContinuousActuatorModel, plant: RobotPort,
                       q: np.ndarray):
    """State and holding current that keep the plant at rest at pose q.

    The springs carry the static load: the output force balances gravity
    through the moment arms, the spring deflects against it, and the motor
    current holds the differential in balance.  Returns (x, u, z).
    """
    q = np.asarray(q, dtype=float)
    z = plant.length_from_joint(q)
    L = plant.moment_arm(q)
    F = np.linalg.solve(L.T, plant.gravity(q))
    delta = np.array([
        -F[i] / par.k if model.compliant else 0.0
        for i, par in enumerate(model.params)
    ])
    u = np.array([F[i] / par.k_m for i, par in enumerate(model.params)])
    x = model.state_from_lengths(z, delta=delta)
    return x, u, z


@dataclass
class OptimizationResult:
    """Converged (or partial) trajectory plus per-iteration diagnostics."""

    variant: str
    success: bool
    converged: bool
    iterations: int
    X: np.ndarray | None  # (N, nx)
    U: np.ndarray | None  # (N-1, p)
    Z: np.ndarray | None  # (N, p)
    U_abs: np.ndarray | None
    Phi: np.ndarray | None
    objective: float | None
    terminal_velocity: float | None  # COM y-velocity or actuator velocity
    residuals: list = field(default_factory=list)  # from iteration 2 on
    objectives: list = field(default_factory=list)
    linearize_times: list = field(default_factory=list)
    solve_times: list = field(default_factory=list)
    failure_iteration: int | None = None
    failure_families: tuple = ()
    U_baseline: np.ndarray | None = None
    x_init: np.ndarray | None = None
    z_fin: np.ndarray | None = None

    @property
    def total_time(self) -> float:
        return sum(self.linearize_times) + sum(self.solve_times)


def optimize(scenario: Scenario, variant: str = "compliant",
             progress=None, tol: float | None = None,
             max_iter: int | None = None) -> OptimizationResult:
    """Run the SLP loop for one actuator variant of a scenario.

    ``progress`` may be a writable stream; one JSON line per iteration is
    emitted with residual, objective, and timing fields.
    """
    cfg = scenario.config
    tol = cfg.tol if tol is None else tol
    max_iter = cfg.max_iter if max_iter is None else max_iter
    model = scenario.build_model(variant)
    plant = scenario.plant
    x_init, u_eq, z_init = static_equilibrium(model, plant, scenario.q_init)
    z_fin = (plant.length_from_joint(scenario.q_final)
             if scenario.q_final is not None else None)
    cons = ConstraintSet(
        z_min=np.asarray(scenario.z_min, dtype=float),
        z_max=np.asarray(scenario.z_max, dtype=float),
        ydot_bar=scenario.ydot_bar, u_bar=scenario.u_bar,
        dz_bar=scenario.dz_bar, x_init=x_init, z_fin=z_fin,
        delta_bar=scenario.delta_bar,
        com_x_velocity_zero=scenario.com_x_velocity_zero,
    )
    cost = scenario.cost
    if cost.U_baseline is None:
        U_base = np.tile(u_eq, (cfg.N - 1, 1))
        cost = CostSpec(objective=cost.objective, alpha=cost.alpha,
                        gamma=cost.gamma, sigma=cost.sigma, U_baseline=U_base)

    result = OptimizationResult(
        variant=variant, success=False, converged=False, iterations=0,
        X=None, U=None, Z=None, U_abs=None, Phi=None, objective=None,
        terminal_velocity=None, U_baseline=cost.U_baseline, x_init=x_init,
        z_fin=z_fin)

    Z_base = np.tile(z_init, (cfg.N, 1))
    Z_dot_base = None
    X_prev = None
    dz_bar = scenario.dz_bar
    sol = None
    prob = None

    for j in range(1, max_iter + 1):
        t0 = time.perf_counter()
        steps = linearize_trajectory(model, plant, Z_base, cfg.dt,
                                     scenario.pseudo_masses,
                                     Z_dot_base=Z_dot_base)
        t_lin = time.perf_counter() - t0
        cons_j = cons if dz_bar == scenario.dz_bar else ConstraintSet(
            z_min=cons.z_min, z_max=cons.z_max, ydot_bar=cons.ydot_bar,
            u_bar=cons.u_bar, dz_bar=dz_bar, x_init=cons.x_init,
            z_fin=cons.z_fin, delta_bar=cons.delta_bar,
            com_x_velocity_zero=cons.com_x_velocity_zero)
        prob = build_subproblem(model, steps, plant, scenario.contact,
                                cons_j, cost, Z_base)
        t0 = time.perf_counter()
        try:
            sol = solve_lp(prob, backend=cfg.backend)
        except LPInfeasibleError as exc:
            retries_left = scenario.dz_bar / dz_bar < 8
            if cfg.infeasibility_retry and retries_left:
                dz_bar /= 2
                continue
            result.failure_iteration = j
            result.failure_families = exc.violated_families
            result.iterations = j
            return result
        t_solve = time.perf_counter() - t0

        result.iterations = j
        result.linearize_times.append(t_lin)
        result.solve_times.append(t_solve)
        result.objectives.append(sol.objective)
        residual = (float(np.linalg.norm(sol.X - X_prev))
                    if X_prev is not None else None)
        if residual is not None:
            result.residuals.append(residual)
        if progress is not None:
            progress.write(json.dumps({
                "iteration": j, "residual": residual,
                "objective": sol.objective, "linearize_s": round(t_lin, 6),
                "solve_s": round(t_solve, 6)}) + "\n")
        X_prev = sol.X
        Z_base = sol.X @ model.Z_sel.T
        Z_dot_base = sol.X @ model.Zdot_sel.T
        if residual is not None and residual < tol:
            result.converged = True
            break

    result.success = sol is not None
    result.X = sol.X
    result.U = sol.U
    result.U_abs = sol.U_abs
    result.Phi = sol.Phi
    result.Z = sol.X @ model.Z_sel.T
    result.objective = sol.objective
    result.terminal_velocity = float(
        prob.terminal_velocity_row @ sol.X[-1])
    return result


@dataclass(frozen=True)
class ComparisonResult:
    """Paired compliant/rigid runs with the terminal-velocity gain."""

    compliant: OptimizationResult
    rigid: OptimizationResult
    gain: float  # compliant terminal velocity / rigid terminal velocity


def compare_rigid_compliant(scenario: Scenario,
                            progress=None) -> ComparisonResult:
    """Optimize the same task with and without the spring subsystem."""
    compliant = optimize(scenario, "compliant", progress=progress)
    rigid = optimize(scenario, "rigid", progress=progress)
    gain = np.nan
    if (compliant.terminal_velocity is not None
            and rigid.terminal_velocity not in (None, 0.0)):
        gain = compliant.terminal_velocity / rigid.terminal_velocity
    return ComparisonResult(compliant=compliant, rigid=rigid,
                            gain=float(gain))
