"""Nonlinear simulation oracle tests.

The simulator is itself the referee for the optimizer, so it gets checked
against first principles: energy bookkeeping, equilibrium invariance, and
exact agreement with the linear model on a genuinely linear plant.
"""

import numpy as np
import pytest

from sealp import (ActuatorParams, ConstantPlant, LeverTransmission,
                   SingleDofArm, build_continuous_model, coupled_rhs,
                   coupled_linearization_frequency, discrete_energy_variation,
                   discrete_plan_energy, energy_audit, linearized_rollout,
                   mechanical_energy, simulate_nonlinear, static_equilibrium)
from sealp.robot import KinematicsError


def p170_setup(beta_m=5885.0, M_p=220.0):
    par = ActuatorParams(M_s=1.0, k=698600.0, beta_s=500.0, M_m=250.0,
                         beta_m=beta_m, k_m=175.0, M_L=0.227, M_p=M_p)
    arm = SingleDofArm(mass=2.5, com_radius=0.315, inertia_com=0.02,
                       transmission=LeverTransmission(a=0.10, b=0.04,
                                                      gain=1.0,
                                                      offset=-0.234))
    return build_continuous_model([par]), arm


def test_equilibrium_is_a_fixed_point():
    model, arm = p170_setup()
    x_eq, u_eq, z_eq = static_equilibrium(model, arm, np.array([1.57]))
    assert np.allclose(coupled_rhs(model, arm, x_eq, u_eq), 0.0, atol=1e-10)
    U = np.tile(u_eq, (40, 1))
    trace = simulate_nonlinear(model, arm, x_eq, U, 0.005)
    assert trace.exit_flag == "ok"
    assert np.abs(trace.X - x_eq).max() < 1e-9
    assert np.isclose((model.Z_sel @ x_eq)[0], z_eq[0])


def test_undamped_swing_conserves_energy():
    model, arm = p170_setup(beta_m=0.0)
    # beta_s still dissipates, so remove it too for a conservative system
    par = ActuatorParams(M_s=1.0, k=698600.0, beta_s=0.0, M_m=250.0,
                         beta_m=0.0, k_m=175.0, M_L=0.227, M_p=220.0)
    model = build_continuous_model([par])
    z0 = arm.length_from_joint(np.array([1.3]))  # off equilibrium
    x0 = model.state_from_lengths(z0)
    U = np.zeros((60, 1))
    trace = simulate_nonlinear(model, arm, x0, U, 0.005, dt_fine=0.005 / 50)
    assert trace.exit_flag == "ok"
    assert np.allclose(trace.input_work, 0.0)
    assert np.allclose(trace.dissipated, 0.0)
    assert energy_audit(trace) < 1e-7
    # the arm actually moves; this is not a trivial conservation
    assert np.ptp(trace.q[:, 0]) > 0.05


def test_damped_swing_balances_books():
    model, arm = p170_setup()
    z0 = arm.length_from_joint(np.array([1.4]))
    x0 = model.state_from_lengths(z0)
    U = np.zeros((40, 1))
    trace = simulate_nonlinear(model, arm, x0, U, 0.005)
    assert trace.dissipated[-1] > 0.0
    assert energy_audit(trace) < 1e-6


def test_range_exit_truncates_trace():
    model, arm = p170_setup()
    x0 = model.state_from_lengths(arm.length_from_joint(np.array([1.57])))
    U = np.full((200, 1), 60.0)  # far beyond anything the lever can track
    trace = simulate_nonlinear(model, arm, x0, U, 0.005)
    assert trace.exit_flag == "range_exit"
    assert trace.t.size < 200 * 20 + 1


def test_mechanical_energy_components():
    model, arm = p170_setup()
    x_eq, _, _ = static_equilibrium(model, arm, np.array([1.57]))
    e = mechanical_energy(model, arm, x_eq)
    assert e["kinetic"] == pytest.approx(0.0, abs=1e-12)
    assert e["spring"] > 0.0  # preloaded against gravity


def test_linearized_rollout_exact_on_constant_plant():
    par = ActuatorParams(M_s=1.5, k=2e4, beta_s=0.0, M_m=100.0, beta_m=40.0,
                         k_m=50.0, M_L=0.5, M_p=800.0)
    plant = ConstantPlant(inertia=2.0, moment_arm=0.05, gravity_torque=0.4,
                          z_ref=0.30, q_ref=0.0)
    model = build_continuous_model([par])
    dt = 0.01
    x0, u_eq, _ = static_equilibrium(model, plant, np.zeros(1))
    rng = np.random.default_rng(3)
    U = u_eq + rng.normal(scale=2.0, size=(25, 1))
    trace = simulate_nonlinear(model, plant, x0, U, dt, dt_fine=dt / 200)
    sub = (trace.t.size - 1) // 25
    Z_base = trace.X[::sub] @ model.Z_sel.T
    X_lin = linearized_rollout(model, plant, Z_base, x0, U, dt)
    scale = np.abs(trace.X).max()
    assert np.abs(X_lin - trace.X[::sub]).max() < 1e-8 * scale


def test_coupled_frequency_independent_of_pseudomass():
    """The pseudo-mass cancels in the true coupled equations: it is added to
    the actuator model and subtracted from the reflected robot inertia.  The
    physical spectrum therefore must not move when it changes."""
    freqs = []
    for M_p in (0.0, 220.0, 2200.0):
        model, arm = p170_setup(M_p=M_p)
        x_op = model.state_from_lengths(arm.length_from_joint(
            np.array([1.57])))
        freqs.append(coupled_linearization_frequency(model, arm, x_op,
                                                     np.zeros(1)))
    assert np.allclose(freqs, freqs[0], rtol=1e-5)


def test_discrete_plan_energy_static():
    model, arm = p170_setup()
    x_eq, _, _ = static_equilibrium(model, arm, np.array([1.57]))
    X = np.tile(x_eq, (10, 1))
    E = discrete_plan_energy(model, arm, X)
    assert E.shape == (10,)
    assert np.ptp(E) < 1e-12
    assert discrete_energy_variation(model, arm, X) < 1e-9
