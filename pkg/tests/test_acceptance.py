"""Acceptance gate: one test per headline criterion.

Each test prints a single PASS/FAIL line (run with -s or read the captured
output) and asserts the same condition, so the suite is the gate.
"""

import sys

import numpy as np

import sealp
from lp_oracle import vertex_optimum
from test_lp import toy_problem


def report(num, label, ok, detail):
    # write past pytest's capture so the gate always shows one line per
    # criterion, whatever flags the suite runs with
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num} ({label}): {detail}",
          file=sys.__stdout__)
    assert ok, f"criterion {num} ({label}): {detail}"


def decreasing_after_burn_in(residuals):
    """Strict decrease from the third iteration on.

    residuals[0] is measured at iteration 2, so indices >= 1 cover
    iterations 3, 4, ...
    """
    tail = residuals[1:]
    return all(a > b for a, b in zip(tail, tail[1:]))


def test_criterion_1_jump_velocity_gain(jump_comparison):
    comp, elapsed = jump_comparison
    c, r = comp.compliant.terminal_velocity, comp.rigid.terminal_velocity
    ok = (comp.compliant.converged and comp.rigid.converged
          and comp.gain >= 1.10 and elapsed < 120.0)
    report(1, "jump gain", ok,
           f"compliant {c:.3f} m/s, rigid {r:.3f} m/s, gain {comp.gain:.3f} "
           f"(>= 1.10), runtime {elapsed:.1f} s (< 120 s)")


def test_criterion_2_convergence_behavior(jump_comparison, drop_result):
    comp, _ = jump_comparison
    runs = [("compliant jump", comp.compliant, 30),
            ("rigid jump", comp.rigid, 35),
            ("zero-input drop", drop_result, 20)]
    ok = True
    parts = []
    for label, res, limit in runs:
        mono = decreasing_after_burn_in(res.residuals)
        ok = ok and res.converged and res.iterations <= limit and mono
        parts.append(f"{label} {res.iterations} its (<= {limit}), "
                     f"monotone={mono}")
    report(2, "convergence", ok, "; ".join(parts))


def test_criterion_3_arm_velocity_ratio(p170_comparison):
    comp = p170_comparison
    c = comp.compliant.terminal_velocity
    r = comp.rigid.terminal_velocity
    ref = 0.07671
    ok = (comp.compliant.converged and comp.rigid.converged
          and comp.gain >= 1.30
          and abs(c - ref) <= 0.15 * ref
          and comp.compliant.iterations <= 10
          and comp.rigid.iterations <= 10)
    report(3, "arm ratio", ok,
           f"compliant {c:.5f} m/s (ref {ref} +- 15%), rigid {r:.5f} m/s, "
           f"ratio {comp.gain:.3f} (>= 1.30), iterations "
           f"{comp.compliant.iterations}/{comp.rigid.iterations} (<= 10)")


def test_criterion_4_pseudomass_tuning(draco_sweep, p170_sweep):
    ok = True
    parts = []
    for label, rep, best in (("leg", draco_sweep, 580.0),
                             ("arm", p170_sweep, 220.0)):
        s = dict(zip(rep.M_p_grid, rep.sigma_z_sq))
        cup = s[0.0] > s[best] and s[10 * best] > s[best]
        ok = ok and cup and rep.best_M_p == best
        parts.append(f"{label} sigma: {s[0.0]:.2e} > {s[best]:.2e} < "
                     f"{s[10 * best]:.2e}")
    i580 = int(np.flatnonzero(draco_sweep.M_p_grid == 580.0)[0])
    freq = float(draco_sweep.model_frequency[i580])
    freq_ok = abs(freq - 35.0) <= 0.10 * 35.0
    ok = ok and freq_ok
    parts.append(f"leg model mode {freq:.2f} rad/s (35 +- 10%)")
    report(4, "pseudo-mass tuning", ok, "; ".join(parts))


def test_criterion_5_drop_energy(drop_result, draco_drop):
    sc = draco_drop.scenario
    model = sc.build_model("compliant")
    var = sealp.discrete_energy_variation(model, sc.plant, drop_result.X)
    trace = sealp.simulate_nonlinear(model, sc.plant, drop_result.x_init,
                                     np.zeros_like(drop_result.U),
                                     sc.config.dt,
                                     dt_fine=sc.config.dt / 100)
    audit = sealp.energy_audit(trace)
    ok = (trace.exit_flag == "ok" and var <= 0.05 and audit <= 1e-3)
    report(5, "drop energy", ok,
           f"discrete-plan variation {var:.4f} (<= 0.05), fine-grid "
           f"balance defect {audit:.2e} (<= 1e-3)")


def test_criterion_6_discretization(draco_jump):
    sc = draco_jump.scenario
    model = sc.build_model("compliant")
    dt = sc.config.dt

    # exact ZOH identities
    A1 = sealp.zoh_discretize(model, dt / 2).A
    A2 = sealp.zoh_discretize(model, dt).A
    semi = np.abs(A1 @ A1 - A2).max()

    lam_c = np.linalg.eigvals(model.A)
    lam_d = np.linalg.eigvals(A2)
    eig_err = np.abs(np.sort(np.abs(np.exp(lam_c * dt)))
                     - np.sort(np.abs(lam_d))).max()

    a, b = -7.0, 3.0
    M = sealp.matrix_exponential(np.array([[a, b], [0.0, 0.0]]) * dt)
    scalar = max(abs(M[0, 0] - np.exp(a * dt)),
                 abs(M[0, 1] - (np.exp(a * dt) - 1) * b / a))

    # one-step prediction of the frozen-impedance model against the
    # nonlinear oracle near the jump starting pose
    x0, u_eq, z0 = sealp.static_equilibrium(model, sc.plant, sc.q_init)
    steps = sealp.linearize_trajectory(model, sc.plant,
                                       np.tile(z0, (2, 1)), dt, 580.0)
    u = u_eq + np.array([0.5, -0.5])
    x1 = steps[0].A_lin @ x0 + steps[0].B_lin @ u + steps[0].bias
    trace = sealp.simulate_nonlinear(model, sc.plant, x0, u[None, :], dt,
                                     dt_fine=dt / 200)
    rel = (np.linalg.norm(x1 - trace.X[-1])
           / np.linalg.norm(trace.X[-1]))

    ok = semi < 1e-9 and eig_err < 1e-9 and scalar < 1e-9 and rel < 1e-3
    report(6, "discretization", ok,
           f"semigroup {semi:.1e}, eigenvalue map {eig_err:.1e}, scalar "
           f"closed form {scalar:.1e} (all < 1e-9); one-step prediction "
           f"{rel:.2e} relative (< 1e-3)")


def test_criterion_7_lp_integrity():
    _, prob = toy_problem()
    sol = sealp.solve_lp(prob)
    worst = max(sealp.validate_solution(prob, sol.vector).values())
    best_obj, best_v = vertex_optimum(prob)
    vertex_gap = abs(sol.objective - best_obj)
    ok = worst < 1e-6 and best_v is not None and vertex_gap < 1e-9
    report(7, "LP integrity", ok,
           f"worst row residual {worst:.1e} (< 1e-6), vertex-enumeration "
           f"objective gap {vertex_gap:.1e} (< 1e-9)")


def test_criterion_8_lti_exactness(lti_result, lti):
    res = lti_result
    sc = lti.scenario
    model = sc.build_model("compliant")
    trace = sealp.simulate_nonlinear(model, sc.plant, res.x_init, res.U,
                                     sc.config.dt,
                                     dt_fine=sc.config.dt / 200)
    sub = (trace.t.size - 1) // res.U.shape[0]
    rel = np.abs(trace.X[::sub] - res.X).max() / np.abs(res.X).max()
    resid = res.residuals[0] if res.residuals else np.inf
    ok = (res.converged and res.iterations == 2 and resid < 1e-10
          and rel < 1e-8)
    report(8, "LTI exactness", ok,
           f"{res.iterations} iterations (== 2), residual {resid:.1e} "
           f"(< 1e-10), oracle mismatch {rel:.1e} relative (< 1e-8)")
