"""Robot port impedance and contact-row tests."""

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from sealp import (AffineTransmission, ConstantPlant, ContactModel,
                   LeverTransmission, TwoLinkLeg, impedance_terms)
from sealp.robot import GRAVITY, ImpedanceError, contact_constraint_rows


def draco_leg():
    return TwoLinkLeg(
        m1=3.77, m2=15.0, I1=0.077, I2=0.050, l1=0.5, l2=0.5,
        transmissions=(
            LeverTransmission(a=0.21, b=0.04, gain=1.0, offset=0.464),
            AffineTransmission(ratio=0.037, z_ref=0.1934, q_ref=5.30),
        ))


def test_impedance_constant_plant_closed_form():
    plant = ConstantPlant(inertia=2.0, moment_arm=0.05, gravity_torque=0.4)
    q = np.array([0.3])
    imp = impedance_terms(plant, q, np.zeros(1), M_p=100.0)
    assert np.isclose(imp.reflected_inertia[0, 0], 2.0 / 0.05**2 - 100.0)
    assert np.isclose(imp.bias_b[0], 0.4 / 0.05)


@settings(max_examples=30, deadline=None)
@given(q1=st.floats(1.7, 2.2), q2=st.floats(4.7, 5.6))
def test_impedance_bias_at_rest_is_reflected_gravity(q1, q2):
    leg = draco_leg()
    q = np.array([q1, q2])
    imp = impedance_terms(leg, q, np.zeros(2), M_p=0.0)
    L = leg.moment_arm(q)
    assert np.allclose(imp.bias_b, np.linalg.solve(L.T, leg.gravity(q)),
                       rtol=1e-9)


def test_impedance_reflected_inertia_symmetric():
    leg = draco_leg()
    q = np.array([1.96, 5.30])
    imp = impedance_terms(leg, q, np.array([0.5, -0.3]), M_p=580.0)
    R = imp.reflected_inertia
    assert np.allclose(R, R.T)
    # without the pseudo-mass subtraction the reflected inertia is PD
    imp0 = impedance_terms(leg, q, np.zeros(2), M_p=0.0)
    assert np.all(np.linalg.eigvalsh(imp0.reflected_inertia) > 0)


def test_singular_moment_arm_raises():
    plant = ConstantPlant(inertia=1.0, moment_arm=0.0)
    with pytest.raises(ImpedanceError):
        impedance_terms(plant, np.zeros(1), np.zeros(1), M_p=0.0)


def test_contact_model_validation():
    with pytest.raises(ValueError):
        ContactModel(mu=0.0)


def test_contact_basis_geometry():
    c = ContactModel(mu=0.8, toe_x=0.08, heel_x=-0.15)
    B = c.basis
    assert B.shape == (2, 4)
    assert np.allclose(B[1], 1.0)  # unit vertical components
    assert np.allclose(np.abs(B[0]), 0.8)
    assert np.allclose(c.point_x, [0.08, 0.08, -0.15, -0.15])


def test_contact_rows_static_balance():
    """At rest with zero commanded acceleration the rows demand exactly the
    weight-supporting wrench, which nonnegative intensities can supply when
    the COM sits over the foot."""
    leg = draco_leg()
    contact = ContactModel(mu=0.8, toe_x=0.3, heel_x=-0.3)
    q = np.array([1.96, 5.30])
    com = leg.com_position(q)
    assert contact.heel_x < com[0] < contact.toe_x  # statically feasible

    zero = np.zeros((2, 8))
    rows = contact_constraint_rows(leg, contact, q, np.zeros(2),
                                   zero, np.zeros((2, 2)), np.zeros(2))
    # x = 0, u = 0: C_phi Phi = rhs must have a Phi >= 0 solution
    phi, resid = scipy.optimize.nnls(-rows.C_phi, -rows.rhs)
    assert resid < 1e-9
    # and that wrench carries the full weight
    assert np.isclose(contact.basis[1] @ phi, leg.total_mass * GRAVITY,
                      rtol=1e-9)


def test_contact_rows_reject_com_outside_support():
    """Shrink the foot until the COM leaves the support polygon; the static
    moment balance then has no nonnegative solution."""
    leg = draco_leg()
    q = np.array([1.96, 5.30])
    com = leg.com_position(q)
    contact = ContactModel(mu=0.8, toe_x=com[0] - 0.2, heel_x=com[0] - 0.3)
    rows = contact_constraint_rows(leg, contact, q, np.zeros(2),
                                   np.zeros((2, 8)), np.zeros((2, 2)),
                                   np.zeros(2))
    _, resid = scipy.optimize.nnls(-rows.C_phi, -rows.rhs)
    assert resid > 1e-3
