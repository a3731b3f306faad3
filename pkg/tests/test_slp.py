"""SLP driver tests on the shipped scenarios."""

import dataclasses

import numpy as np
import pytest

import sealp


def test_lti_two_iteration_convergence(lti_result, lti):
    """On an exactly linear plant the first LP is already the optimum; the
    second pass only confirms it."""
    res = lti_result
    assert res.success and res.converged
    assert res.iterations == 2
    assert len(res.residuals) == 1
    assert res.residuals[0] < 1e-10


def test_lti_matches_simulation(lti_result, lti):
    sc = lti.scenario
    model = sc.build_model("compliant")
    res = lti_result
    trace = sealp.simulate_nonlinear(model, sc.plant, res.x_init, res.U,
                                     sc.config.dt)
    sub = (trace.t.size - 1) // res.U.shape[0]
    scale = np.abs(res.X).max()
    assert np.abs(trace.X[::sub] - res.X).max() < 1e-8 * scale


@pytest.mark.filterwarnings("ignore::sealp.AliasingWarning")
def test_stiff_spring_limit_recovers_rigid():
    """As the spring constant grows the compliant optimum collapses onto the
    rigid one, so the comparison gain goes to 1.  The near-rigid spring mode
    is far beyond Nyquist, hence the suppressed aliasing warning."""
    sf = sealp.load_scenario(
        __file__.rsplit("/", 2)[0] + "/scenarios/lti_toy.toml")
    sc = sf.scenario
    stiff = tuple(dataclasses.replace(p, k=1e9) for p in sc.actuator_params)
    sc_stiff = dataclasses.replace(sc, actuator_params=stiff)
    comp = sealp.compare_rigid_compliant(sc_stiff)
    assert comp.compliant.converged and comp.rigid.converged
    assert comp.gain == pytest.approx(1.0, abs=2e-2)


def test_static_equilibrium_balances_forces(p170):
    sc = p170.scenario
    model = sc.build_model("compliant")
    x, u, z = sealp.static_equilibrium(model, sc.plant, sc.q_init)
    assert np.allclose(sealp.coupled_rhs(model, sc.plant, x, u), 0.0,
                       atol=1e-9)
    assert np.allclose(model.Z_sel @ x, z)
    # spring carries the static load
    assert np.any(np.abs(model.delta_sel @ x) > 1e-6)


def test_solution_respects_bounds(p170_comparison, p170):
    sc = p170.scenario
    tol = 1e-6
    for res in (p170_comparison.compliant, p170_comparison.rigid):
        assert res.converged
        assert np.all(res.Z >= sc.z_min - tol)
        assert np.all(res.Z <= sc.z_max + tol)
        assert np.all(np.abs(res.U) <= sc.u_bar + tol)
    model = sc.build_model("compliant")
    Ydot = p170_comparison.compliant.X @ model.ydot_sel.T
    assert np.all(np.abs(Ydot) <= sc.ydot_bar + tol)


def test_compliant_beats_rigid_on_p170(p170_comparison):
    assert p170_comparison.gain > 1.0


def test_zero_current_drop_uses_no_input(drop_result, draco_drop):
    res = drop_result
    assert res.converged
    assert np.allclose(res.U, 0.0, atol=1e-9)
    # the leg actually falls: lengths move away from the start
    assert np.ptp(res.Z, axis=0).max() > 0.005


def test_progress_stream_and_result_metadata(lti):
    import io
    import json

    buf = io.StringIO()
    res = sealp.optimize(lti.scenario, "compliant", progress=buf)
    lines = [json.loads(l) for l in buf.getvalue().splitlines()]
    assert len(lines) == res.iterations
    assert {"iteration", "objective"} <= set(lines[0])
    assert len(res.solve_times) == res.iterations
    assert res.variant == "compliant"


def test_invalid_variant_rejected(lti):
    with pytest.raises(ValueError):
        lti.scenario.build_model("floppy")
