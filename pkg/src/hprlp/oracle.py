"""Independent oracles: brute-force vertex enumeration for tiny LPs and
per-iteration checks of the proven decay bounds.

Nothing here shares code with the iteration path beyond the metric itself,
so agreement between the two is meaningful evidence of correctness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import (Iterate, ProblemData, SolverState, Variant, compute_merit,
                   iterate_once, m_norm_diff)
from .driver import kkt_residual
from .problem import LpProblem, PrimalDualPoint, dual_objective
from .sparse import power_method_lambda_max

ORACLE_SIZE_LIMIT = 12
_FEAS_TOL = 1e-9
_SIGN_TOL = 1e-9


class OracleBudgetError(ValueError):
    """Instance too large for exhaustive enumeration."""


class OracleFailure(RuntimeError):
    """No vertex with a sign-feasible multiplier set was found."""


@dataclass(frozen=True)
class OracleSolution:
    x_star: np.ndarray
    y_star: np.ndarray
    z_star: np.ndarray
    value: float
    source: str   # VertexEnumeration | Construction | ReferenceSolve

    def as_point(self) -> PrimalDualPoint:
        return PrimalDualPoint(y=self.y_star.copy(), z=self.z_star.copy(),
                               x=self.x_star.copy())


def vertex_enumeration_solve(problem: LpProblem) -> OracleSolution:
    """Enumerate candidate vertices of a tiny LP and pick the best.

    Every vertex is the solution of a square system built from the equality
    rows (always active) plus a choice of inequality rows and bound facets.
    Dual multipliers are reconstructed from the defining active set and
    checked for the cone/sign conditions; degenerate bases are skipped.
    """
    n, m1, m2 = problem.n, problem.m1, problem.m2
    if n > ORACLE_SIZE_LIMIT or problem.m > ORACLE_SIZE_LIMIT:
        raise OracleBudgetError(f"n={n}, m={problem.m} exceeds the "
                                f"enumeration budget {ORACLE_SIZE_LIMIT}")
    if m1 > n:
        raise OracleBudgetError("more equality rows than variables")
    a_eq = problem.a_eq.to_dense()
    a_ineq = problem.a_ineq.to_dense()
    lower, upper, c = problem.lower, problem.upper, problem.c

    # facet catalogue: ("ineq", i) / ("lo", j) / ("up", j)
    facets: list[tuple[str, int]] = [("ineq", i) for i in range(m2)]
    facets += [("lo", j) for j in range(n) if np.isfinite(lower[j])]
    facets += [("up", j) for j in range(n) if np.isfinite(upper[j])]

    scale = 1.0 + float(np.max(np.abs(problem.rhs))) if problem.m else 1.0
    feas_tol = _FEAS_TOL * scale

    best_val = math.inf
    best_sets: list[tuple[tuple[str, int], ...]] = []
    need = n - m1
    for combo in combinations(facets, need):
        mat = np.zeros((n, n))
        rhs = np.zeros(n)
        mat[:m1] = a_eq
        rhs[:m1] = problem.b_eq
        for pos, (kind, idx) in enumerate(combo, start=m1):
            if kind == "ineq":
                mat[pos] = a_ineq[idx]
                rhs[pos] = problem.b_ineq[idx]
            elif kind == "lo":
                mat[pos, idx] = 1.0
                rhs[pos] = lower[idx]
            else:
                mat[pos, idx] = 1.0
                rhs[pos] = upper[idx]
        try:
            x = np.linalg.solve(mat, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        if np.any(x < lower - feas_tol) or np.any(x > upper + feas_tol):
            continue
        if m1 and np.max(np.abs(a_eq @ x - problem.b_eq)) > feas_tol:
            continue
        if m2 and np.any(a_ineq @ x < problem.b_ineq - feas_tol):
            continue
        val = float(c @ x)
        if val < best_val - 1e-12:
            best_val = val
            best_sets = [combo]
        elif val <= best_val + 1e-12:
            best_sets.append(combo)

    if not best_sets:
        raise OracleFailure("no feasible vertex found (infeasible instance?)")

    for combo in best_sets:
        sol = _reconstruct_duals(problem, a_eq, a_ineq, combo)
        if sol is not None:
            res = kkt_residual(problem, PrimalDualPoint(y=sol[1], z=sol[2], x=sol[0]))
            if res.residual_vector_norm <= 1e-10 * max(1.0, scale):
                value = float(c @ sol[0]) + problem.objective_constant
                return OracleSolution(x_star=sol[0], y_star=sol[1],
                                      z_star=sol[2], value=value,
                                      source="VertexEnumeration")
    raise OracleFailure("no optimal vertex admitted sign-feasible multipliers "
                        "(unbounded or degenerate instance?)")


def _reconstruct_duals(problem, a_eq, a_ineq, combo):
    """Solve for multipliers supported on the defining active set."""
    n, m1, m2 = problem.n, problem.m1, problem.m2
    cols = [a_eq[i] for i in range(m1)]
    for kind, idx in combo:
        if kind == "ineq":
            cols.append(a_ineq[idx])
        else:
            e = np.zeros(n)
            e[idx] = 1.0
            cols.append(e)
    basis = np.array(cols).T   # n x n
    try:
        mult = np.linalg.solve(basis, problem.c)
    except np.linalg.LinAlgError:
        return None
    y = np.zeros(m1 + m2)
    z = np.zeros(n)
    y[:m1] = mult[:m1]
    ok = True
    for pos, (kind, idx) in enumerate(combo, start=m1):
        v = mult[pos]
        if kind == "ineq":
            if v < -_SIGN_TOL:
                ok = False
                break
            y[m1 + idx] = max(v, 0.0)
        elif kind == "lo":
            if v < -_SIGN_TOL:
                ok = False
                break
            z[idx] = max(v, 0.0)
        else:   # multiplier of an upper bound must push down
            if v > _SIGN_TOL:
                ok = False
                break
            z[idx] = min(v, 0.0)
    if not ok:
        return None
    # rebuild x from the same square system for consistency
    mat = np.zeros((n, n))
    rhs = np.zeros(n)
    mat[:m1] = a_eq
    rhs[:m1] = problem.b_eq
    for pos, (kind, idx) in enumerate(combo, start=m1):
        if kind == "ineq":
            mat[pos] = a_ineq[idx]
            rhs[pos] = problem.b_ineq[idx]
        else:
            mat[pos, idx] = 1.0
            rhs[pos] = problem.lower[idx] if kind == "lo" else problem.upper[idx]
    x = np.linalg.solve(mat, rhs)
    return x, y, z


@dataclass
class BoundReport:
    """Per-iteration ratios against the proven decay bounds.

    ``fixed_point_ratios[k]`` is |w^k - w_hat^(k+1)|_M (k+1) / (2 R0) and
    ``kkt_ratios[k]`` is |R(w_bar^(k+1))| (k+1) / C R0 with
    C = (sigma (|A| + |sqrt(T1)|) + 1) / sqrt(sigma); both stay <= 1 up to
    round-off when the implementation is faithful.  The objective-error
    scan records h(k) * (k+1) against its two-sided envelope.
    """

    fixed_point_ratios: np.ndarray
    kkt_ratios: np.ndarray
    objective_scaled: np.ndarray
    objective_low: float
    objective_high: float
    r0: float
    sigma: float
    lam: float

    @property
    def max_fixed_point_ratio(self) -> float:
        return float(np.max(self.fixed_point_ratios)) if self.fixed_point_ratios.size else 0.0

    @property
    def max_kkt_ratio(self) -> float:
        return float(np.max(self.kkt_ratios)) if self.kkt_ratios.size else 0.0

    @property
    def objective_within_bounds(self) -> bool:
        if self.objective_scaled.size == 0:
            return True
        cushion = 1e-9 * (1.0 + abs(self.objective_high) + abs(self.objective_low))
        return bool(np.all(self.objective_scaled >= self.objective_low - cushion)
                    and np.all(self.objective_scaled <= self.objective_high + cushion))


def check_complexity_bound(problem: LpProblem, w_star: OracleSolution,
                           iters: int, sigma: float = 1.0) -> BoundReport:
    """Run the reflection variant with fixed penalty and no restarts,
    measuring the merit and the stacked residual every iteration.

    The spectral norms in the constant are replaced by their upper bound
    sqrt(lambda), which only loosens the envelope.
    """
    data = ProblemData.from_problem(problem)
    lam = power_method_lambda_max(data.a).value
    state = SolverState.origin(data, sigma=sigma, lam=lam, variant=Variant.HPR)

    r0 = compute_merit(state.current,
                       Iterate(w_star.y_star, w_star.x_star),
                       sigma, lam, data.a)
    norm_bound = math.sqrt(lam)
    kkt_const = (sigma * (norm_bound + norm_bound) + 1.0) / math.sqrt(sigma) * r0
    dual_star = _dual_min_objective(problem, w_star.y_star, w_star.z_star)

    fixed_ratios = np.zeros(iters)
    kkt_ratios = np.zeros(iters)
    obj_scaled = np.zeros(iters)
    for k in range(iters):
        prev = state.current.copy()
        xb, yb = iterate_once(state, data)
        merit = 2.0 * m_norm_diff(prev.y - yb, prev.x - xb, sigma, data.a, lam)
        fixed_ratios[k] = merit * (k + 1) / (2.0 * r0) if r0 > 0 else 0.0
        v = prev.x + sigma * (data.a.t_apply(prev.y) - data.c)
        zb = (xb - v) / sigma
        res = kkt_residual(problem, PrimalDualPoint(y=yb, z=zb, x=xb))
        kkt_ratios[k] = res.residual_vector_norm * (k + 1) / kkt_const \
            if kkt_const > 0 else 0.0
        h = _dual_min_objective(problem, yb, zb) - dual_star
        obj_scaled[k] = h * (k + 1)

    x_norm = float(np.linalg.norm(w_star.x_star))
    low = -r0 * x_norm / math.sqrt(sigma)
    high = (3.0 * r0 + x_norm / math.sqrt(sigma)) * r0
    return BoundReport(fixed_point_ratios=fixed_ratios, kkt_ratios=kkt_ratios,
                       objective_scaled=obj_scaled, objective_low=low,
                       objective_high=high, r0=r0, sigma=sigma, lam=lam)


def _dual_min_objective(problem: LpProblem, y: np.ndarray, z: np.ndarray) -> float:
    """-<b,y> + conj-box(-z); the minimization form of the dual objective."""
    val, _ = dual_objective(problem, y, z)
    return -(val - problem.objective_constant)
