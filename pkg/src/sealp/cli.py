"""Command-line front end: optimize, compare, tune, simulate, eigs.

Artifacts are CSV and JSON only; rendering is left to other tools.  Exit
codes: 0 success, 1 scenario validation error, 2 LP infeasible, 3 the loop
ran out of iterations without converging.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .actuator import max_eigenvalue_frequency
from .lp import ConstraintSet, build_subproblem
from .oracle import energy_audit, simulate_nonlinear, tune_pseudomass
from .scenario import ScenarioError, load_scenario
from .slp import (OptimizationResult, Scenario, optimize,
                  static_equilibrium)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_NO_CONVERGENCE = 3


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    import dataclasses
    if getattr(args, "backend", None):
        scenario = dataclasses.replace(
            scenario,
            config=dataclasses.replace(scenario.config, backend=args.backend))
    return scenario


def _out_dir(args, scenario: Scenario) -> Path:
    out = Path(args.out_dir) if args.out_dir else Path(scenario.name + "_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_trajectory_csv(path: Path, scenario: Scenario, variant: str,
                          result: OptimizationResult):
    model = scenario.build_model(variant)
    p = model.p
    dt = scenario.config.dt
    Z = result.Z
    Zdot = result.X @ model.Zdot_sel.T
    header = ["n", "t_s"]
    header += [f"z{i+1}_m" for i in range(p)]
    header += [f"zdot{i+1}_m_per_s" for i in range(p)]
    if model.compliant:
        delta = result.X @ model.delta_sel.T
        header += [f"delta{i+1}_m" for i in range(p)]
    header += [f"u{i+1}_a" for i in range(p)]
    if result.Phi is not None and result.Phi.size:
        header += [f"phi{i+1}_n" for i in range(result.Phi.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        N = Z.shape[0]
        for n in range(N):
            row = [n, n * dt]
            row += list(Z[n])
            row += list(Zdot[n])
            if model.compliant:
                row += list(delta[n])
            row += list(result.U[n]) if n < N - 1 else [""] * p
            if result.Phi is not None and result.Phi.size:
                row += (list(result.Phi[n]) if n < N - 1
                        else [""] * result.Phi.shape[1])
            w.writerow(row)


def _report_dict(scenario: Scenario, variant: str,
                 result: OptimizationResult) -> dict:
    return {
        "scenario": scenario.name,
        "variant": variant,
        "converged": result.converged,
        "iterations": result.iterations,
        "objective": result.objective,
        "terminal_velocity_m_per_s": result.terminal_velocity,
        "residuals": result.residuals,
        "objectives": result.objectives,
        "linearize_s": result.linearize_times,
        "solve_s": result.solve_times,
        "total_s": result.total_time,
        "failure_iteration": result.failure_iteration,
        "failure_families": list(result.failure_families),
    }


def _run_variant(scenario: Scenario, variant: str, args, out: Path):
    result = optimize(scenario, variant,
                      progress=sys.stderr if args.verbose else None,
                      tol=args.tol, max_iter=args.max_iter)
    if result.failure_iteration is not None:
        report = _report_dict(scenario, variant, result)
        (out / f"report_{variant}.json").write_text(
            json.dumps(report, indent=2))
        print(f"{scenario.name} [{variant}]: infeasible at iteration "
              f"{result.failure_iteration} "
              f"(families: {', '.join(result.failure_families)})")
        return result, EXIT_INFEASIBLE
    _write_trajectory_csv(out / f"trajectory_{variant}.csv", scenario,
                          variant, result)
    report = _report_dict(scenario, variant, result)
    (out / f"report_{variant}.json").write_text(json.dumps(report, indent=2))
    status = "converged" if result.converged else "NOT converged"
    print(f"{scenario.name} [{variant}]: {status} in {result.iterations} "
          f"iterations, terminal velocity {result.terminal_velocity:.5f} m/s")
    code = EXIT_OK if result.converged else EXIT_NO_CONVERGENCE
    return result, code


def cmd_optimize(args) -> int:
    sf = load_scenario(args.scenario)
    scenario = _apply_overrides(sf.scenario, args)
    if args.dry_run:
        return _dry_run(scenario, args.variant)
    out = _out_dir(args, scenario)
    _, code = _run_variant(scenario, args.variant, args, out)
    return code


def _dry_run(scenario: Scenario, variant: str) -> int:
    from .linearization import linearize_trajectory
    model = scenario.build_model(variant)
    _, _, z_init = static_equilibrium(model, scenario.plant, scenario.q_init)
    N = scenario.config.N
    Z_base = np.tile(z_init, (N, 1))
    steps = linearize_trajectory(model, scenario.plant, Z_base,
                                 scenario.config.dt, scenario.pseudo_masses)
    cons = ConstraintSet(
        z_min=scenario.z_min, z_max=scenario.z_max,
        ydot_bar=scenario.ydot_bar, u_bar=scenario.u_bar,
        dz_bar=scenario.dz_bar,
        x_init=model.state_from_lengths(z_init),
        z_fin=(scenario.plant.length_from_joint(scenario.q_final)
               if scenario.q_final is not None else None),
        delta_bar=scenario.delta_bar,
        com_x_velocity_zero=scenario.com_x_velocity_zero)
    prob = build_subproblem(model, steps, scenario.plant, scenario.contact,
                            cons, scenario.cost, Z_base)
    n_eq = prob.A_eq.shape[0] if prob.A_eq is not None else 0
    n_ub = prob.A_ub.shape[0] if prob.A_ub is not None else 0
    print(f"{scenario.name} [{variant}]: {prob.c.size} variables, "
          f"{n_eq} equality rows, {n_ub} inequality rows")
    all_rows = list(prob.eq_families) + list(prob.ub_families)
    for fam in sorted(set(all_rows)):
        print(f"  {fam}: {all_rows.count(fam)}")
    return EXIT_OK


def cmd_compare(args) -> int:
    sf = load_scenario(args.scenario)
    scenario = _apply_overrides(sf.scenario, args)
    out = _out_dir(args, scenario)
    compliant, code_c = _run_variant(scenario, "compliant", args, out)
    rigid, code_r = _run_variant(scenario, "rigid", args, out)
    gain = np.nan
    if (compliant.terminal_velocity is not None
            and rigid.terminal_velocity not in (None, 0.0)):
        gain = compliant.terminal_velocity / rigid.terminal_velocity
    summary = {
        "scenario": scenario.name,
        "compliant_terminal_velocity_m_per_s": compliant.terminal_velocity,
        "rigid_terminal_velocity_m_per_s": rigid.terminal_velocity,
        "gain": None if np.isnan(gain) else float(gain),
        "compliant_iterations": compliant.iterations,
        "rigid_iterations": rigid.iterations,
    }
    (out / "comparison.json").write_text(json.dumps(summary, indent=2))
    if not np.isnan(gain):
        print(f"{scenario.name}: compliant/rigid terminal velocity gain "
              f"{gain:.3f}")
    return max(code_c, code_r)


def cmd_tune(args) -> int:
    sf = load_scenario(args.scenario)
    scenario = sf.scenario
    out = _out_dir(args, scenario)
    if args.grid:
        grid = [float(v) for v in args.grid.split(",")]
    else:
        grid = list(sf.tuning.M_p_grid_kg)
    model = scenario.build_model("compliant")
    x0, u_eq, _ = static_equilibrium(model, scenario.plant, scenario.q_init)
    steps = sf.tuning.horizon_steps
    t = np.arange(steps) * scenario.config.dt
    from scipy.signal import chirp
    wave = chirp(t, sf.tuning.test_f0_hz, max(t[-1], scenario.config.dt),
                 sf.tuning.test_f1_hz)
    # Alternate the drive sign across joints so the excitation works the
    # springs differentially instead of just pumping the leg as a whole.
    signs = np.array([(-1.0) ** i for i in range(model.p)])
    U = u_eq + sf.tuning.test_amplitude_a * wave[:, None] * signs
    report = tune_pseudomass(scenario.actuator_params, scenario.plant,
                             [scenario.q_init], grid, U,
                             scenario.config.dt, x0)
    with open(out / "pseudomass.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M_p_kg", "model_frequency_rad_per_s", "sigma_z_sq_m2"])
        for M_p, freq, sig in zip(report.M_p_grid, report.model_frequency,
                                  report.sigma_z_sq):
            w.writerow([M_p, freq, sig])
    print(f"{scenario.name}: best pseudo-mass {report.best_M_p:g} kg "
          f"(continuous modes: "
          f"{', '.join(f'{f:.2f}' for f in report.continuous_frequency)}"
          f" rad/s)")
    return EXIT_OK


def _read_input_csv(path: Path, p: int) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = [f"u{i+1}_a" for i in range(p)]
    missing = [c for c in cols if rows and c not in rows[0]]
    if missing:
        raise ScenarioError(f"input CSV lacks columns: {', '.join(missing)}")
    U = []
    for row in rows:
        vals = [row[c] for c in cols]
        if any(v == "" for v in vals):
            break
        U.append([float(v) for v in vals])
    return np.array(U)


def cmd_simulate(args) -> int:
    sf = load_scenario(args.scenario)
    scenario = sf.scenario
    out = _out_dir(args, scenario)
    model = scenario.build_model(args.variant)
    x0, u_eq, _ = static_equilibrium(model, scenario.plant, scenario.q_init)
    if args.input:
        U = _read_input_csv(Path(args.input), model.p)
        if U.size == 0:
            U = np.zeros((scenario.config.N - 1, model.p))
    else:
        U = np.zeros((scenario.config.N - 1, model.p))
    dt = scenario.config.dt
    trace = simulate_nonlinear(model, scenario.plant, x0, U, dt,
                               dt_fine=dt / args.substeps)
    with open(out / f"simtrace_{args.variant}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        p = model.p
        header = ["t_s"]
        header += [f"q{i+1}_rad" for i in range(p)]
        header += [f"qdot{i+1}_rad_per_s" for i in range(p)]
        header += ["kinetic_j", "spring_j", "gravity_j", "input_work_j",
                   "dissipated_j"]
        w.writerow(header)
        for i in range(trace.t.size):
            row = [trace.t[i]]
            row += list(trace.q[i]) + list(trace.q_dot[i])
            row += [trace.kinetic[i], trace.spring[i], trace.gravity[i],
                    trace.input_work[i], trace.dissipated[i]]
            w.writerow(row)
    audit = energy_audit(trace)
    E = trace.mechanical
    summary = {
        "scenario": scenario.name,
        "variant": args.variant,
        "exit_flag": trace.exit_flag,
        "energy_balance_defect": audit,
        "mechanical_energy_drift_j": float(E[-1] - E[0]),
    }
    (out / f"simreport_{args.variant}.json").write_text(
        json.dumps(summary, indent=2))
    print(f"{scenario.name} [{args.variant}]: simulated {trace.t[-1]:.3f} s, "
          f"energy balance defect {audit:.2e}")
    return EXIT_OK


def cmd_eigs(args) -> int:
    sf = load_scenario(args.scenario)
    scenario = sf.scenario
    for variant in ("compliant", "rigid"):
        model = scenario.build_model(variant)
        eigs = np.linalg.eigvals(model.A)
        order = np.argsort(-np.abs(eigs))
        pretty = ", ".join(f"{v.real:+.3f}{v.imag:+.3f}j"
                           for v in eigs[order])
        print(f"{scenario.name} [{variant}] spectrum: {pretty}")
        print(f"  fastest mode {max_eigenvalue_frequency(model):.3f} rad/s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sealp",
        description="Trajectory optimization for series elastic robots.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="path to a scenario TOML file")
        p.add_argument("--out-dir", default=None,
                       help="artifact directory (default: <name>_out)")
        p.add_argument("--backend", default=None,
                       help="LP backend override (default from scenario)")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--verbose", action="store_true",
                       help="stream per-iteration JSON records to stderr")

    p_opt = sub.add_parser("optimize", help="run one actuator variant")
    common(p_opt)
    p_opt.add_argument("--variant", choices=("compliant", "rigid"),
                       default="compliant")
    p_opt.add_argument("--dry-run", action="store_true",
                       help="validate and print problem sizes, do not solve")
    p_opt.set_defaults(func=cmd_optimize)

    p_cmp = sub.add_parser("compare", help="run compliant and rigid variants")
    common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_tune = sub.add_parser("tune", help="pseudo-mass sweep")
    common(p_tune)
    p_tune.add_argument("--grid", default=None,
                        help="comma-separated pseudo-mass candidates (kg)")
    p_tune.set_defaults(func=cmd_tune)

    p_sim = sub.add_parser("simulate", help="nonlinear oracle replay")
    common(p_sim)
    p_sim.add_argument("--input", default=None,
                       help="trajectory CSV with u columns to replay "
                            "(default: zero input)")
    p_sim.add_argument("--variant", choices=("compliant", "rigid"),
                       default="compliant")
    p_sim.add_argument("--substeps", type=int, default=20,
                       help="oracle substeps per plan step")
    p_sim.set_defaults(func=cmd_simulate)

    p_eig = sub.add_parser("eigs", help="print the actuator model spectrum")
    common(p_eig)
    p_eig.set_defaults(func=cmd_eigs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
