"""Trajectory optimization for series elastic actuated robots via
sequential linear programming."""

from .actuator import (ActuatorParams, ActuatorState, ContinuousActuatorModel,
                       ModelConstructionError, build_continuous_model,
                       max_eigenvalue_frequency, rigid_variant)
from .discretization import (AliasingWarning, DiscreteActuatorModel,
                             matrix_exponential, zoh_discretize)
from .linearization import (EliminationError, ForceMap, LinearizedStep,
                            eliminate_F_prime, linearize_trajectory)
from .lp import (ConstraintSet, CostSpec, LPInfeasibleError, LPProblem,
                 LPSolution, LPUnboundedError, build_subproblem, solve_lp,
                 validate_solution, write_lp_file)
from .oracle import (PseudoMassReport, SimTrace, coupled_linearization_frequency,
                     coupled_rhs, discrete_energy_variation,
                     discrete_plan_energy, energy_audit, energy_scale,
                     linearized_rollout, mechanical_energy, port_force,
                     simulate_nonlinear, tune_pseudomass)
from .plants import (AffineTransmission, ConstantPlant, LeverTransmission,
                     QuadraticTransmission, SingleDofArm, TwoLinkLeg)
from .robot import (ContactModel, ImpedanceTerms, KinematicsError, RobotPort,
                    contact_constraint_rows, impedance_terms)
from .scenario import ScenarioError, ScenarioFile, TuningSpec, load_scenario
from .slp import (ComparisonResult, OptimizationResult, Scenario, SLPConfig,
                  compare_rigid_compliant, optimize, static_equilibrium)

__version__ = "0.1.0"
