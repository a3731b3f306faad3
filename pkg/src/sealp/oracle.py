"""Ground-truth nonlinear simulation and validation instruments.

The coupled actuator/robot ODE is integrated with a fixed-step fourth-order
Runge-Kutta scheme, eliminating the port force exactly at every evaluation,
so no pseudo-mass approximation enters: the physical dynamics are recovered
regardless of the pseudo-mass in the model parameters.  Work and dissipation
integrals ride along as augmented states, so the energy balance closes to
integrator accuracy.

Also here: the pseudo-mass tuning sweep, which compares the fastest mode of
the tunable linear actuator model against the true coupled dynamics and
measures the rollout error of the discrete linearized model.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .actuator import (ContinuousActuatorModel, build_continuous_model,
                       max_eigenvalue_frequency)
from .linearization import linearize_trajectory
from .robot import GRAVITY, KinematicsError, RobotPort, impedance_terms


def _pseudo_masses(model: ContinuousActuatorModel) -> np.ndarray:
    return np.array([par.M_p for par in model.params])


def port_force(model: ContinuousActuatorModel, plant: RobotPort,
               x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Exact net output force at the current state (continuous coupling)."""
    z = model.Z_sel @ x
    q = plant.joint_from_length(z)
    q_dot = np.linalg.solve(plant.moment_arm(q), model.Zdot_sel @ x)
    imp = impedance_terms(plant, q, q_dot, _pseudo_masses(model))
    R = imp.reflected_inertia
    W = np.linalg.inv(np.eye(model.p) - R @ model.S @ model.B_f)
    return W @ (imp.bias_b + R @ model.S @ (model.A @ x + model.B_u @ u))


def coupled_rhs(model: ContinuousActuatorModel, plant: RobotPort,
                x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """State derivative of the coupled actuator + robot system."""
    F = port_force(model, plant, x, u)
    return model.A @ x + model.B_u @ u + model.B_f @ F


def potential_energy(plant: RobotPort, q: np.ndarray) -> float:
    """Gravitational potential of the plant.

    Uses the COM height when the plant provides COM kinematics, otherwise
    integrates a configuration-independent gravity torque.
    """
    try:
        return plant.total_mass * GRAVITY * plant.com_position(q)[1]
    except NotImplementedError:
        return float(plant.gravity(q) @ q)


def mechanical_energy(model: ContinuousActuatorModel, plant: RobotPort,
                      x: np.ndarray) -> dict:
    """Energy components at one state: kinetic, spring, gravity."""
    z = model.Z_sel @ x
    z_dot = model.Zdot_sel @ x
    q = plant.joint_from_length(z)
    q_dot = np.linalg.solve(plant.moment_arm(q), z_dot)
    delta = model.delta_sel @ x
    delta_dot = model.deltadot_sel @ x
    y_dot = model.ydot_sel @ x
    ke = 0.5 * float(q_dot @ plant.mass_matrix(q) @ q_dot)
    spring = 0.0
    for i, par in enumerate(model.params):
        ke += 0.5 * (par.M_s * delta_dot[i]**2 + par.M_m * y_dot[i]**2
                     + par.M_L * z_dot[i]**2)
        spring += 0.5 * par.k * delta[i]**2
    return {
        "kinetic": ke,
        "spring": spring,
        "gravity": potential_energy(plant, q),
    }


def _power_terms(model, x, u):
    """Instantaneous (input power, dissipation power)."""
    delta_dot = model.deltadot_sel @ x
    y_dot = model.ydot_sel @ x
    z_dot = model.Zdot_sel @ x
    p_in, p_diss = 0.0, 0.0
    for i, par in enumerate(model.params):
        p_in += par.k_m * u[i] * y_dot[i]
        p_diss += (par.beta_s * delta_dot[i]**2 + par.beta_m * y_dot[i]**2
                   + par.beta_L * z_dot[i]**2)
    return p_in, p_diss


@dataclass(frozen=True)
class SimTrace:
    """Fine-grid trajectory of the coupled system with energy bookkeeping."""

    t: np.ndarray  # (M,)
    X: np.ndarray  # (M, nx) actuator states
    q: np.ndarray  # (M, p)
    q_dot: np.ndarray  # (M, p)
    kinetic: np.ndarray
    spring: np.ndarray
    gravity: np.ndarray
    input_work: np.ndarray
    dissipated: np.ndarray
    exit_flag: str  # "ok" or "range_exit"

    @property
    def mechanical(self) -> np.ndarray:
        return self.kinetic + self.spring + self.gravity


def simulate_nonlinear(model: ContinuousActuatorModel, plant: RobotPort,
                       x0: np.ndarray, U: np.ndarray, dt: float,
                       dt_fine: float | None = None) -> SimTrace:
    """Integrate the coupled ODE with currents held over each coarse step.

    ``U`` has one row per coarse step; an empty ``U`` produces a static,
    single-point trace.  The fine step defaults to dt/20 and is rounded so
    an integer number of fine steps tiles each coarse step.  If the
    trajectory exits the transmission range the trace is truncated and
    flagged.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.size == 0:
        U = np.zeros((0, model.p))
    if dt_fine is None:
        dt_fine = dt / 20
    substeps = max(1, int(np.ceil(dt / dt_fine - 1e-12)))
    h = dt / substeps

    states = [np.asarray(x0, dtype=float)]
    works, diss = [0.0], [0.0]
    times = [0.0]
    exit_flag = "ok"
    x = np.concatenate([states[0], [0.0, 0.0]])  # augmented: work, dissipation

    def rhs(xa, u):
        xs = xa[:-2]
        dx = coupled_rhs(model, plant, xs, u)
        p_in, p_diss = _power_terms(model, xs, u)
        return np.concatenate([dx, [p_in, p_diss]])

    t = 0.0
    try:
        for n in range(U.shape[0]):
            u = U[n]
            for _ in range(substeps):
                k1 = rhs(x, u)
                k2 = rhs(x + 0.5 * h * k1, u)
                k3 = rhs(x + 0.5 * h * k2, u)
                k4 = rhs(x + h * k3, u)
                x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
                t += h
                states.append(x[:-2].copy())
                works.append(x[-2])
                diss.append(x[-1])
                times.append(t)
    except KinematicsError:
        exit_flag = "range_exit"

    X = np.array(states)
    M = X.shape[0]
    q = np.zeros((M, model.p))
    q_dot = np.zeros((M, model.p))
    ke = np.zeros(M)
    spring = np.zeros(M)
    grav = np.zeros(M)
    for m in range(M):
        z = model.Z_sel @ X[m]
        q[m] = plant.joint_from_length(z)
        q_dot[m] = np.linalg.solve(plant.moment_arm(q[m]),
                                   model.Zdot_sel @ X[m])
        e = mechanical_energy(model, plant, X[m])
        ke[m], spring[m], grav[m] = e["kinetic"], e["spring"], e["gravity"]
    return SimTrace(t=np.array(times), X=X, q=q, q_dot=q_dot, kinetic=ke,
                    spring=spring, gravity=grav,
                    input_work=np.array(works), dissipated=np.array(diss),
                    exit_flag=exit_flag)


def energy_scale(trace_or_components) -> float:
    """Reference scale for relative energy errors.

    The largest energy excursion among the components: peak kinetic, peak
    spring storage, and peak-to-peak gravitational potential.  Falls back to
    1 J for traces with no energy exchange at all.
    """
    tr = trace_or_components
    scale = max(tr.kinetic.max(initial=0.0), tr.spring.max(initial=0.0),
                float(np.ptp(tr.gravity)) if tr.gravity.size else 0.0,
                tr.dissipated.max(initial=0.0),
                np.abs(tr.input_work).max(initial=0.0))
    return scale if scale > 0 else 1.0


def energy_audit(trace: SimTrace) -> float:
    """Worst relative defect of the energy balance along the trace.

    Checks E(t) - E(0) = W_in(t) - D(t) with E the mechanical energy;
    the defect is normalized by the largest energy excursion.
    """
    E = trace.mechanical
    defect = np.abs(E - E[0] - trace.input_work + trace.dissipated)
    return float(defect.max() / energy_scale(trace))


def discrete_plan_energy(model: ContinuousActuatorModel, plant: RobotPort,
                         X: np.ndarray) -> np.ndarray:
    """Mechanical energy at each state of a discrete plan (N, nx)."""
    E = np.zeros(X.shape[0])
    for n in range(X.shape[0]):
        e = mechanical_energy(model, plant, X[n])
        E[n] = e["kinetic"] + e["spring"] + e["gravity"]
    return E


def discrete_energy_variation(model: ContinuousActuatorModel,
                              plant: RobotPort, X: np.ndarray) -> float:
    """Peak-to-peak mechanical energy of a discrete plan, relative.

    Normalized by the largest energy excursion along the plan; measures how
    well the discretized linear model preserves the physics it approximates.
    """
    ke = np.zeros(X.shape[0])
    spring = np.zeros(X.shape[0])
    grav = np.zeros(X.shape[0])
    for n in range(X.shape[0]):
        e = mechanical_energy(model, plant, X[n])
        ke[n], spring[n], grav[n] = e["kinetic"], e["spring"], e["gravity"]
    scale = max(ke.max(), spring.max(), float(np.ptp(grav)))
    scale = scale if scale > 0 else 1.0
    E = ke + spring + grav
    return float(np.ptp(E) / scale)


def linearized_rollout(model: ContinuousActuatorModel, plant: RobotPort,
                       Z_base: np.ndarray, x0: np.ndarray, U: np.ndarray,
                       dt: float) -> np.ndarray:
    """Roll the discrete linearized model forward; returns states (N, nx)."""
    steps = linearize_trajectory(model, plant, Z_base, dt,
                                 _pseudo_masses(model))
    X = np.zeros((len(steps) + 1, model.nx))
    X[0] = x0
    for n, st in enumerate(steps):
        X[n + 1] = st.A_lin @ X[n] + st.B_lin @ U[n] + st.bias
    return X


def coupled_linearization_frequency(model: ContinuousActuatorModel,
                                    plant: RobotPort, x_op: np.ndarray,
                                    u_op: np.ndarray,
                                    eps: float = 1e-6) -> float:
    """Fastest mode of the true coupled dynamics linearized at a state.

    The Jacobian is taken by central differences of the coupled right-hand
    side; this is independent of the pseudo-mass, which cancels exactly in
    the coupled equations.
    """
    n = x_op.size
    J = np.zeros((n, n))
    for j in range(n):
        dx = np.zeros(n)
        dx[j] = eps
        J[:, j] = (coupled_rhs(model, plant, x_op + dx, u_op)
                   - coupled_rhs(model, plant, x_op - dx, u_op)) / (2 * eps)
    return max_eigenvalue_frequency(model, A=J)


@dataclass(frozen=True)
class PseudoMassReport:
    """Eigenvalue alignment and rollout-error sweep over pseudo-mass."""

    M_p_grid: np.ndarray  # (G,), sorted (kg)
    model_frequency: np.ndarray  # (G,) fastest actuator-model mode (rad/s)
    continuous_frequency: np.ndarray  # per operating point (rad/s)
    sigma_z_sq: np.ndarray  # (G,) mean squared length error (m^2)

    @property
    def best_M_p(self) -> float:
        return float(self.M_p_grid[int(np.argmin(self.sigma_z_sq))])


def tune_pseudomass(base_params, plant: RobotPort, operating_points,
                    M_p_grid, test_input: np.ndarray, dt: float,
                    x0: np.ndarray, dt_fine: float | None = None
                    ) -> PseudoMassReport:
    """Sweep pseudo-mass candidates for a plant.

    For each candidate: the fastest mode of the tunable linear actuator
    model, and the mean squared error between the discrete linearized
    rollout and the true nonlinear simulation under a fixed test current
    trajectory.  The true coupled frequencies at the given operating points
    provide the alignment target.
    """
    M_p_grid = np.sort(np.asarray(M_p_grid, dtype=float))
    base_params = tuple(base_params)
    base_model = build_continuous_model(base_params)

    cont_freq = []
    for q_op in operating_points:
        z_op = plant.length_from_joint(np.atleast_1d(q_op))
        x_op = base_model.state_from_lengths(z_op)
        cont_freq.append(coupled_linearization_frequency(
            base_model, plant, x_op, np.zeros(base_model.p)))

    trace = simulate_nonlinear(base_model, plant, x0, test_input, dt, dt_fine)
    if trace.exit_flag != "ok":
        raise KinematicsError("test input drives the plant out of its "
                              "transmission range")
    sub = (trace.t.size - 1) // test_input.shape[0]
    coarse = np.arange(0, trace.t.size, sub)
    Z_true = trace.X[coarse] @ base_model.Z_sel.T

    model_freq, sigma = [], []
    for M_p in M_p_grid:
        params = tuple(dataclasses.replace(par, M_p=float(M_p))
                       for par in base_params)
        model = build_continuous_model(params)
        model_freq.append(max_eigenvalue_frequency(model))
        # Aliasing warnings are expected for the low end of the sweep.
        with np.errstate(over="ignore", invalid="ignore"), \
                warnings.catch_warnings():
            warnings.simplefilter("ignore")
            X_lin = linearized_rollout(model, plant, Z_true, x0,
                                       test_input, dt)
        Z_lin = X_lin @ model.Z_sel.T
        err = Z_lin - Z_true
        err = err[np.all(np.isfinite(err), axis=1)]
        sigma.append(float(np.mean(err**2)) if err.size else np.inf)

    return PseudoMassReport(
        M_p_grid=M_p_grid,
        model_frequency=np.array(model_freq),
        continuous_frequency=np.array(cont_freq),
        sigma_z_sq=np.array(sigma),
    )
