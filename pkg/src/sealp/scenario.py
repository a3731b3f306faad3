"""Scenario files: declarative TOML descriptions of optimization problems.

A scenario file carries the actuator parameters per joint, the plant
selection and geometry, the constraint set, the cost, and the SLP settings.
Field names carry their SI units (k_n_per_m, dt_s, ...) because the source
tables mix units freely and silent-unit bugs are the main risk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .actuator import ActuatorParams
from .lp import CostSpec
from .plants import (AffineTransmission, ConstantPlant, LeverTransmission,
                     QuadraticTransmission, SingleDofArm, TwoLinkLeg)
from .robot import ContactModel, RobotPort
from .slp import Scenario, SLPConfig


class ScenarioError(ValueError):
    """The scenario file is missing fields or fails validation."""


@dataclass(frozen=True)
class TuningSpec:
    """Optional settings for the pseudo-mass sweep and oracle replay."""

    M_p_grid_kg: tuple = (0.0,)
    test_amplitude_a: float = 1.0
    test_f0_hz: float = 1.0
    test_f1_hz: float = 5.0
    horizon_steps: int = 60


@dataclass(frozen=True)
class ScenarioFile:
    """A parsed scenario plus the auxiliary tool settings."""

    scenario: Scenario
    tuning: TuningSpec = field(default_factory=TuningSpec)
    path: Path | None = None


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ScenarioError(f"missing field {key!r} in [{context}]")
    return table[key]


def _build_transmission(t: dict):
    kind = _require(t, "kind", "plant.transmission")
    if kind == "lever":
        return LeverTransmission(a=_require(t, "a_m", "transmission"),
                                 b=_require(t, "b_m", "transmission"),
                                 gain=t.get("gain", 1.0),
                                 offset=t.get("offset_rad", 0.0))
    if kind == "affine":
        return AffineTransmission(
            ratio=_require(t, "ratio_m_per_rad", "transmission"),
            z_ref=_require(t, "z_ref_m", "transmission"),
            q_ref=t.get("q_ref_rad", 0.0))
    if kind == "quadratic":
        return QuadraticTransmission(
            c0=_require(t, "c0_m_per_rad", "transmission"),
            c1=_require(t, "c1_m_per_rad2", "transmission"),
            z_ref=_require(t, "z_ref_m", "transmission"),
            q_ref=t.get("q_ref_rad", 0.0))
    raise ScenarioError(f"unknown transmission kind {kind!r}")


def _build_plant(table: dict) -> RobotPort:
    kind = _require(table, "kind", "plant")
    if kind == "two_link_leg":
        trans = [_build_transmission(t)
                 for t in _require(table, "transmission", "plant")]
        if len(trans) != 2:
            raise ScenarioError("two_link_leg needs exactly 2 transmissions")
        return TwoLinkLeg(
            m1=_require(table, "m1_kg", "plant"),
            m2=_require(table, "m2_kg", "plant"),
            I1=_require(table, "I1_kg_m2", "plant"),
            I2=_require(table, "I2_kg_m2", "plant"),
            l1=_require(table, "l1_m", "plant"),
            l2=_require(table, "l2_m", "plant"),
            lc1=table.get("lc1_m"), lc2=table.get("lc2_m"),
            transmissions=tuple(trans))
    if kind == "single_dof_arm":
        trans = [_build_transmission(t)
                 for t in _require(table, "transmission", "plant")]
        if len(trans) != 1:
            raise ScenarioError("single_dof_arm needs exactly 1 transmission")
        return SingleDofArm(
            mass=_require(table, "mass_kg", "plant"),
            com_radius=_require(table, "com_radius_m", "plant"),
            inertia_com=table.get("inertia_com_kg_m2", 0.0),
            transmission=trans[0])
    if kind == "constant":
        return ConstantPlant(
            inertia=_require(table, "inertia_kg_m2", "plant"),
            moment_arm=_require(table, "moment_arm_m", "plant"),
            gravity_torque=table.get("gravity_torque_nm"),
            z_ref=table.get("z_ref_m"),
            q_ref=table.get("q_ref_rad"))
    raise ScenarioError(f"unknown plant kind {kind!r}")


def _build_actuator(t: dict) -> ActuatorParams:
    try:
        return ActuatorParams(
            M_s=_require(t, "M_s_kg", "actuator"),
            k=_require(t, "k_n_per_m", "actuator"),
            beta_s=t.get("beta_s_ns_per_m", 0.0),
            M_m=_require(t, "M_m_kg", "actuator"),
            beta_m=t.get("beta_m_ns_per_m", 0.0),
            k_m=_require(t, "k_m_n_per_a", "actuator"),
            M_L=t.get("M_L_kg", 0.0),
            beta_L=t.get("beta_L_ns_per_m", 0.0),
            M_p=_require(t, "M_p_kg", "actuator"))
    except ValueError as exc:
        raise ScenarioError(f"invalid actuator parameters: {exc}") from exc


def load_scenario(path) -> ScenarioFile:
    """Parse and validate a scenario TOML file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"malformed TOML: {exc}") from exc

    name = doc.get("name", path.stem)
    actuators = doc.get("actuator")
    if not actuators:
        raise ScenarioError("scenario needs at least one [[actuator]] table")
    params = tuple(_build_actuator(t) for t in actuators)

    plant = _build_plant(_require(doc, "plant", name))
    if plant.p != len(params):
        raise ScenarioError(
            f"plant has {plant.p} joints but {len(params)} actuators given")

    cons = _require(doc, "constraints", name)
    q_init = np.asarray(_require(cons, "q_init_rad", "constraints"),
                        dtype=float)
    if q_init.shape != (plant.p,):
        raise ScenarioError(f"q_init_rad must have {plant.p} entries")
    z_min = np.asarray(_require(cons, "z_min_m", "constraints"), dtype=float)
    z_max = np.asarray(_require(cons, "z_max_m", "constraints"), dtype=float)
    if np.any(z_min >= z_max):
        raise ScenarioError("need z_min_m < z_max_m per joint")
    q_final = cons.get("q_final_rad")
    if q_final is not None:
        q_final = np.asarray(q_final, dtype=float)

    contact = None
    if "contact" in doc:
        ct = doc["contact"]
        contact = ContactModel(mu=_require(ct, "mu", "contact"),
                               toe_x=ct.get("toe_x_m", 0.15),
                               heel_x=ct.get("heel_x_m", -0.05))

    cost_t = doc.get("cost", {})
    cost = CostSpec(
        objective=cost_t.get("objective", "terminal_actuator_velocity"),
        alpha=cost_t.get("alpha", 0.0),
        gamma=cost_t.get("gamma", 0.0),
        sigma=cost_t.get("sigma", 0.0))

    slp_t = _require(doc, "slp", name)
    config = SLPConfig(
        N=_require(slp_t, "N", "slp"),
        dt=_require(slp_t, "dt_s", "slp"),
        tol=slp_t.get("tol", 1e-3),
        max_iter=slp_t.get("max_iter", 40),
        backend=slp_t.get("backend", "highs"))

    try:
        scenario = Scenario(
            name=name, actuator_params=params, plant=plant, config=config,
            q_init=q_init, z_min=z_min, z_max=z_max,
            ydot_bar=_require(cons, "ydot_bar_m_per_s", "constraints"),
            u_bar=_require(cons, "u_bar_a", "constraints"),
            dz_bar=_require(cons, "dz_bar_m", "constraints"),
            q_final=q_final,
            delta_bar=cons.get("delta_bar_m"),
            contact=contact,
            com_x_velocity_zero=cons.get("com_x_velocity_zero", False),
            cost=cost)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    tuning = TuningSpec()
    if "tuning" in doc:
        tt = doc["tuning"]
        tuning = TuningSpec(
            M_p_grid_kg=tuple(tt.get("M_p_grid_kg", (params[0].M_p,))),
            test_amplitude_a=tt.get("test_amplitude_a", 1.0),
            test_f0_hz=tt.get("test_f0_hz", 1.0),
            test_f1_hz=tt.get("test_f1_hz", 5.0),
            horizon_steps=tt.get("horizon_steps", 60))

    return ScenarioFile(scenario=scenario, tuning=tuning, path=path)
