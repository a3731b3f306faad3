"""Shared fixtures: scenario files and (expensive) optimization runs.

The optimizer fixtures are session scoped so the acceptance tests and the
unit tests can share one run of each scenario.
"""

import pathlib
import time

import numpy as np
import pytest
from scipy.signal import chirp

import sealp

SCENARIO_DIR = pathlib.Path(__file__).resolve().parent.parent / "scenarios"


def load(name):
    return sealp.load_scenario(SCENARIO_DIR / f"{name}.toml")


@pytest.fixture(scope="session")
def draco_jump():
    return load("draco_jump")


@pytest.fixture(scope="session")
def draco_drop():
    return load("draco_zero_input")


@pytest.fixture(scope="session")
def p170():
    return load("p170_max_vel")


@pytest.fixture(scope="session")
def lti():
    return load("lti_toy")


@pytest.fixture(scope="session")
def jump_comparison(draco_jump):
    """(ComparisonResult, wall seconds) for the two-link jump."""
    t0 = time.perf_counter()
    comp = sealp.compare_rigid_compliant(draco_jump.scenario)
    return comp, time.perf_counter() - t0


@pytest.fixture(scope="session")
def drop_result(draco_drop):
    return sealp.optimize(draco_drop.scenario)


@pytest.fixture(scope="session")
def p170_comparison(p170):
    return sealp.compare_rigid_compliant(p170.scenario)


@pytest.fixture(scope="session")
def lti_result(lti):
    return sealp.optimize(lti.scenario)


def run_tuning_sweep(sf):
    """Pseudo-mass sweep for a scenario file, mirroring the CLI tune path."""
    sc = sf.scenario
    model = sc.build_model("compliant")
    x0, u_eq, _ = sealp.static_equilibrium(model, sc.plant, sc.q_init)
    t = np.arange(sf.tuning.horizon_steps) * sc.config.dt
    wave = chirp(t, sf.tuning.test_f0_hz, max(t[-1], sc.config.dt),
                 sf.tuning.test_f1_hz)
    signs = np.array([(-1.0) ** i for i in range(model.p)])
    U = u_eq + sf.tuning.test_amplitude_a * wave[:, None] * signs
    return sealp.tune_pseudomass(sc.actuator_params, sc.plant, [sc.q_init],
                                 sf.tuning.M_p_grid_kg, U, sc.config.dt, x0)


@pytest.fixture(scope="session")
def draco_sweep(draco_jump):
    return run_tuning_sweep(draco_jump)


@pytest.fixture(scope="session")
def p170_sweep(p170):
    return run_tuning_sweep(p170)
