"""Linear program assembly and solution for one optimizer iteration.

Variables are the stacked actuator states, input currents, current-deviation
magnitudes, and (for stance scenarios) contact force intensities.  Every
constraint is kept as an explicit sparse row with a family label so that
solutions can be re-validated independently of the backend and infeasibility
can be attributed to a row family.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from .actuator import ContinuousActuatorModel
from .linearization import LinearizedStep
from .robot import ContactModel, RobotPort, contact_constraint_rows

FEASIBILITY_TOL = 1e-6


class LPError(RuntimeError):
    pass


class LPInfeasibleError(LPError):
    """The subproblem has no feasible point.

    ``violated_families`` lists the constraint families that an elastic
    relaxation had to violate, as a diagnosis aid.
    """

    def __init__(self, message, violated_families=()):
        super().__init__(message)
        self.violated_families = tuple(violated_families)


class LPUnboundedError(LPError):
    """The subproblem is unbounded; usually a missing trust or bound row."""


@dataclass(frozen=True)
class ConstraintSet:
    """Bounds and endpoint constraints shared by all iterations."""

    z_min: np.ndarray  # (p,) actuator stroke lower bound (m)
    z_max: np.ndarray  # (p,) actuator stroke upper bound (m)
    ydot_bar: float  # motor velocity bound (m/s)
    u_bar: float  # current bound (A)
    dz_bar: float  # trust radius on actuator length (m)
    x_init: np.ndarray  # (nx,) fixed initial state
    z_fin: np.ndarray | None = None  # (p,) terminal length constraint
    delta_bar: float | None = None  # spring deflection bound (m)
    com_x_velocity_zero: bool = False

    def __post_init__(self):
        if np.any(np.asarray(self.z_min) >= np.asarray(self.z_max)):
            raise ValueError("z_min must be strictly below z_max")
        for name in ("ydot_bar", "u_bar", "dz_bar"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.z_fin is not None:
            z_fin = np.asarray(self.z_fin)
            if np.any(z_fin < self.z_min) or np.any(z_fin > self.z_max):
                raise ValueError(
                    f"terminal length {z_fin} outside stroke bounds")


@dataclass(frozen=True)
class CostSpec:
    """Linear objective selection and weights.

    ``com_y_velocity`` maximizes the upward COM velocity at the final step
    (jump objective); ``terminal_actuator_velocity`` maximizes the actuator
    velocity at the final step.  Both carry a small 1-norm penalty on
    deviation from a baseline current trajectory, and the jump objective a
    slight preference for small contact intensities.
    """

    objective: str = "com_y_velocity"
    alpha: float = 0.0  # weight on current deviation (jump objective)
    gamma: float = 0.0  # weight on contact intensities
    sigma: float = 0.0  # weight on current deviation (terminal velocity)
    U_baseline: np.ndarray | None = None  # (N-1, p)

    def __post_init__(self):
        if self.objective not in ("com_y_velocity",
                                  "terminal_actuator_velocity"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if min(self.alpha, self.gamma, self.sigma) < 0:
            raise ValueError("cost weights must be nonnegative")


class _RowStack:
    """Accumulates sparse rows with per-row family labels."""

    def __init__(self, n_var: int):
        self.n_var = n_var
        self._rows, self._cols, self._vals = [], [], []
        self.rhs: list[float] = []
        self.families: list[str] = []

    def add(self, cols, vals, rhs: float, family: str):
        r = len(self.rhs)
        cols = np.atleast_1d(np.asarray(cols))
        vals = np.atleast_1d(np.asarray(vals, dtype=float))
        # Normalize rows so coefficients are O(1); keeps the solution set
        # identical while helping solver conditioning and making per-row
        # residuals comparable across families.
        scale = np.abs(vals).max()
        if scale > 0:
            vals = vals / scale
            rhs = rhs / scale
        keep = vals != 0.0
        self._rows.extend([r] * int(keep.sum()))
        self._cols.extend(cols[keep].tolist())
        self._vals.extend(vals[keep].tolist())
        self.rhs.append(float(rhs))
        self.families.append(family)

    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self._vals, (self._rows, self._cols)),
            shape=(len(self.rhs), self.n_var),
        )


@dataclass
class LPProblem:
    """Sparse LP: minimize c @ v s.t. A_eq v = b_eq, A_ub v <= b_ub."""

    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    eq_families: list[str]
    ub_families: list[str]
    N: int
    nx: int
    p: int
    n_phi: int  # intensities per step (0 when no contact)
    terminal_velocity_row: np.ndarray  # (nx,), reporting aid

    @property
    def n_var(self) -> int:
        return self.c.size

    # Variable layout: [X | U | U_abs | Phi]
    def x_index(self, n: int, i: int | None = None):
        base = n * self.nx
        return base if i is None else base + i

    def u_offset(self) -> int:
        return self.N * self.nx

    def u_index(self, n: int, i: int) -> int:
        return self.u_offset() + n * self.p + i

    def uabs_index(self, n: int, i: int) -> int:
        return self.u_offset() + (self.N - 1) * self.p + n * self.p + i

    def phi_offset(self) -> int:
        return self.u_offset() + 2 * (self.N - 1) * self.p

    def phi_index(self, n: int, i: int) -> int:
        return self.phi_offset() + n * self.n_phi + i

    def split(self, v: np.ndarray):
        """Split a flat solution vector into (X, U, U_abs, Phi)."""
        X = v[: self.N * self.nx].reshape(self.N, self.nx)
        U = v[self.u_offset(): self.u_offset() + (self.N - 1) * self.p]
        U = U.reshape(self.N - 1, self.p)
        U_abs = v[self.u_offset() + (self.N - 1) * self.p: self.phi_offset()]
        U_abs = U_abs.reshape(self.N - 1, self.p)
        Phi = None
        if self.n_phi:
            Phi = v[self.phi_offset():].reshape(self.N - 1, self.n_phi)
        return X, U, U_abs, Phi


@dataclass(frozen=True)
class LPSolution:
    X: np.ndarray  # (N, nx)
    U: np.ndarray  # (N-1, p)
    U_abs: np.ndarray  # (N-1, p)
    Phi: np.ndarray | None  # (N-1, 4) or None
    objective: float
    status: str
    vector: np.ndarray = field(repr=False)
    family_residuals: dict = field(default_factory=dict)


def build_subproblem(model: ContinuousActuatorModel,
                     steps: list[LinearizedStep],
                     plant: RobotPort,
                     contact: ContactModel | None,
                     cons: ConstraintSet,
                     cost: CostSpec,
                     Z_base: np.ndarray) -> LPProblem:
    """Assemble the per-iteration LP about the given baseline."""
    Z_base = np.asarray(Z_base, dtype=float)
    N = Z_base.shape[0]
    if len(steps) != N - 1:
        raise ValueError(f"need {N - 1} linearized steps, got {len(steps)}")
    nx, p = model.nx, model.p
    n_phi = contact.phi_count if contact is not None else 0
    n_var = N * nx + 2 * (N - 1) * p + (N - 1) * n_phi

    prob = LPProblem(
        c=np.zeros(n_var), A_eq=None, b_eq=None, A_ub=None, b_ub=None,
        eq_families=[], ub_families=[], N=N, nx=nx, p=p, n_phi=n_phi,
        terminal_velocity_row=np.zeros(nx),
    )
    eq = _RowStack(n_var)
    ub = _RowStack(n_var)
    x_cols = lambda n: np.arange(n * nx, (n + 1) * nx)
    u_cols = lambda n: np.arange(prob.u_index(n, 0), prob.u_index(n, 0) + p)

    # Dynamics equalities: x_{n+1} - A_lin x_n - B_lin u_n = bias_n.
    for n, st in enumerate(steps):
        cn, cn1, cu = x_cols(n), x_cols(n + 1), u_cols(n)
        for r in range(nx):
            cols = np.concatenate([cn1[r: r + 1], cn, cu])
            vals = np.concatenate([[1.0], -st.A_lin[r], -st.B_lin[r]])
            eq.add(cols, vals, st.bias[r], "dynamics")

    # Initial state.
    for r in range(nx):
        eq.add([prob.x_index(0, r)], [1.0], cons.x_init[r], "initial_state")

    # Terminal actuator lengths.
    if cons.z_fin is not None:
        for i in range(p):
            eq.add(x_cols(N - 1), model.Z_sel[i], cons.z_fin[i],
                   "final_length")

    # Terminal COM velocity rows need the moment arm at the final pose,
    # which is known a priori because the final lengths are constrained.
    if cost.objective == "com_y_velocity" or cons.com_x_velocity_zero:
        if cons.z_fin is None:
            raise ValueError("COM velocity rows require a terminal length "
                             "constraint to freeze the final moment arm")
        q_fin = plant.joint_from_length(cons.z_fin)
        J_fin = plant.com_jacobian(q_fin) @ np.linalg.inv(
            plant.moment_arm(q_fin))
        if cons.com_x_velocity_zero:
            eq.add(x_cols(N - 1), J_fin[0] @ model.Zdot_sel, 0.0,
                   "com_x_velocity")

    # Trust region and state bounds, all steps.
    for n in range(N):
        cols = x_cols(n)
        for i in range(p):
            z_row = model.Z_sel[i]
            ub.add(cols, z_row, Z_base[n, i] + cons.dz_bar, "trust_region")
            ub.add(cols, -z_row, cons.dz_bar - Z_base[n, i], "trust_region")
            ub.add(cols, z_row, cons.z_max[i], "length_bounds")
            ub.add(cols, -z_row, -cons.z_min[i], "length_bounds")
            if model.compliant and cons.delta_bar is not None:
                d_row = model.delta_sel[i]
                ub.add(cols, d_row, cons.delta_bar, "spring_deflection")
                ub.add(cols, -d_row, cons.delta_bar, "spring_deflection")
            yd_row = model.ydot_sel[i]
            ub.add(cols, yd_row, cons.ydot_bar, "motor_velocity")
            ub.add(cols, -yd_row, cons.ydot_bar, "motor_velocity")

    # Input bounds and deviation magnitudes.
    U_base = cost.U_baseline
    if U_base is None:
        U_base = np.zeros((N - 1, p))
    for n in range(N - 1):
        for i in range(p):
            ui = prob.u_index(n, i)
            ua = prob.uabs_index(n, i)
            ub.add([ui], [1.0], cons.u_bar, "current_limit")
            ub.add([ui], [-1.0], cons.u_bar, "current_limit")
            ub.add([ui, ua], [1.0, -1.0], U_base[n, i], "current_deviation")
            ub.add([ui, ua], [-1.0, -1.0], -U_base[n, i], "current_deviation")

    # Contact balance and nonnegative intensities.
    if contact is not None:
        for n, st in enumerate(steps):
            rows = contact_constraint_rows(
                plant, contact, st.q, st.q_dot,
                st.zdd_gain_x, st.zdd_gain_u, st.zdd_bias)
            phi_cols = np.arange(prob.phi_index(n, 0),
                                 prob.phi_index(n, 0) + n_phi)
            for r in range(3):
                cols = np.concatenate([x_cols(n), u_cols(n), phi_cols])
                vals = np.concatenate([rows.C_x[r], rows.C_u[r],
                                       rows.C_phi[r]])
                eq.add(cols, vals, rows.rhs[r], "contact_balance")
            for i in range(n_phi):
                ub.add([prob.phi_index(n, i)], [-1.0], 0.0,
                       "contact_intensity")

    # Objective.
    c = prob.c
    if cost.objective == "com_y_velocity":
        vel_row = J_fin[1] @ model.Zdot_sel
        c[x_cols(N - 1)] -= vel_row
        for n in range(N - 1):
            for i in range(p):
                c[prob.uabs_index(n, i)] += cost.alpha
            for i in range(n_phi):
                c[prob.phi_index(n, i)] += cost.gamma
    else:
        vel_row = np.ones(p) @ model.Zdot_sel
        c[x_cols(N - 1)] -= vel_row
        for n in range(N - 1):
            for i in range(p):
                c[prob.uabs_index(n, i)] += cost.sigma
    prob.terminal_velocity_row = vel_row

    prob.A_eq = eq.matrix()
    prob.b_eq = np.asarray(eq.rhs)
    prob.eq_families = eq.families
    prob.A_ub = ub.matrix()
    prob.b_ub = np.asarray(ub.rhs)
    prob.ub_families = ub.families
    return prob


def validate_solution(problem: LPProblem, v: np.ndarray) -> dict:
    """Independently re-evaluate every constraint row.

    Returns the worst residual per family (equality: |Av - b|, inequality:
    positive part of Av - b).  Does not trust the backend's own report.
    """
    res: dict[str, float] = {}
    eq_resid = np.abs(problem.A_eq @ v - problem.b_eq)
    for fam, r in zip(problem.eq_families, eq_resid):
        res[fam] = max(res.get(fam, 0.0), float(r))
    ub_resid = np.maximum(problem.A_ub @ v - problem.b_ub, 0.0)
    for fam, r in zip(problem.ub_families, ub_resid):
        res[fam] = max(res.get(fam, 0.0), float(r))
    return res


def diagnose_infeasibility(problem: LPProblem, tol: float = 1e-6):
    """Find the row families an elastic relaxation must violate.

    Adds slack to every row and minimizes total slack; families with
    nonzero slack in the relaxed optimum are reported.
    """
    n = problem.n_var
    m_eq = problem.b_eq.size
    m_ub = problem.b_ub.size
    # Variables: [v, s_eq_pos, s_eq_neg, s_ub], all slacks >= 0.
    A_eq = sp.hstack([problem.A_eq, sp.identity(m_eq), -sp.identity(m_eq),
                      sp.csr_matrix((m_eq, m_ub))], format="csr")
    A_ub = sp.hstack([problem.A_ub, sp.csr_matrix((m_ub, 2 * m_eq)),
                      -sp.identity(m_ub)], format="csr")
    c = np.concatenate([np.zeros(n), np.ones(2 * m_eq + m_ub)])
    bounds = [(None, None)] * n + [(0, None)] * (2 * m_eq + m_ub)
    res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=problem.b_ub,
                                 A_eq=A_eq, b_eq=problem.b_eq,
                                 bounds=bounds, method="highs")
    if not res.success:
        return ["<diagnosis failed>"]
    slack = res.x[n:]
    eq_slack = slack[:m_eq] + slack[m_eq:2 * m_eq]
    violated = set()
    for fam, s in zip(problem.eq_families, eq_slack):
        if s > tol:
            violated.add(fam)
    for fam, s in zip(problem.ub_families, slack[2 * m_eq:]):
        if s > tol:
            violated.add(fam)
    return sorted(violated)


def solve_lp(problem: LPProblem, backend: str = "highs") -> LPSolution:
    """Solve the assembled LP and re-check feasibility independently.

    The HiGHS backend is deterministic for a fixed problem, so identical
    scenarios produce identical trajectories.
    """
    res = scipy.optimize.linprog(
        problem.c, A_ub=problem.A_ub, b_ub=problem.b_ub,
        A_eq=problem.A_eq, b_eq=problem.b_eq,
        bounds=[(None, None)] * problem.n_var, method=backend,
    )
    if res.status == 2:
        families = diagnose_infeasibility(problem)
        raise LPInfeasibleError(
            f"subproblem infeasible; violated families: {families}",
            violated_families=families)
    if res.status == 3:
        raise LPUnboundedError(
            "subproblem unbounded; check trust-region and bound rows")
    if not res.success:
        raise LPError(f"LP solve failed: {res.message}")
    residuals = validate_solution(problem, res.x)
    worst = max(residuals.values(), default=0.0)
    if worst > 10 * FEASIBILITY_TOL:
        raise LPError(f"backend returned an infeasible point "
                      f"(worst residual {worst:.3g})")
    X, U, U_abs, Phi = problem.split(res.x)
    return LPSolution(X=X, U=U, U_abs=U_abs, Phi=Phi,
                      objective=float(res.fun), status="optimal",
                      vector=res.x, family_residuals=residuals)


def write_lp_file(problem: LPProblem, path):
    """Export the problem in CPLEX LP text format for cross-solver checks."""
    def term(coef, j):
        return f"{'+' if coef >= 0 else '-'} {abs(coef):.17g} v{j} "

    with open(path, "w") as fh:
        fh.write("Minimize\n obj: ")
        for j, cj in enumerate(problem.c):
            if cj:
                fh.write(term(cj, j))
        fh.write("\nSubject To\n")
        A_eq = problem.A_eq.tocsr()
        for r in range(A_eq.shape[0]):
            row = A_eq.getrow(r)
            fh.write(f" e{r}: ")
            for j, v in zip(row.indices, row.data):
                fh.write(term(v, j))
            fh.write(f"= {problem.b_eq[r]:.17g}\n")
        A_ub = problem.A_ub.tocsr()
        for r in range(A_ub.shape[0]):
            row = A_ub.getrow(r)
            fh.write(f" i{r}: ")
            for j, v in zip(row.indices, row.data):
                fh.write(term(v, j))
            fh.write(f"<= {problem.b_ub[r]:.17g}\n")
        fh.write("Bounds\n")
        for j in range(problem.n_var):
            fh.write(f" v{j} free\n")
        fh.write("End\n")
