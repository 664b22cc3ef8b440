"""Equality-only path with exact dual solves, plus two reference iterations.

When there is no inequality block and AA* is cheap to factor, the dual
subproblem can be solved exactly (no proximal weight) through a dense
Cholesky factorization of AA*.  This module also carries two mathematically
equivalent formulations of the no-proximal Halpern scheme whose iterate
traces must coincide; comparing them is a strong end-to-end check of the
update algebra.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import (Iterate, ProblemData, SolverState, Variant,
                   apply_variant_step, m_norm_diff)
from .driver import (KktResidual, RestartEvent, SolveReport, SolveStatus,
                     SolverConfig, Timings, _sigma_guards_pass, check_restart,
                     check_termination, kkt_residual)
from .problem import LpProblem, PrimalDualPoint
from .sparse import SparseMatrix

CHOLESKY_ROW_LIMIT = 2000


class RankDeficiencyError(ValueError):
    """AA* is not positive definite; use the lambda-proximal path instead."""


@dataclass(frozen=True)
class DenseCholesky:
    """Lower-triangular factor of AA* for a full-row-rank equality block."""

    factor: np.ndarray   # L with L L' = AA*
    m: int

    @classmethod
    def from_matrix(cls, a: SparseMatrix, row_limit: int = CHOLESKY_ROW_LIMIT
                    ) -> "DenseCholesky":
        if a.nrows > row_limit:
            raise ValueError(f"m={a.nrows} exceeds the dense factorization "
                             f"limit {row_limit}")
        aat = (a._csr @ a._csr.T).toarray()
        try:
            lower = np.linalg.cholesky(aat)
        except np.linalg.LinAlgError as exc:
            raise RankDeficiencyError(
                "AA* is rank deficient; fall back to the lambda-proximal path"
            ) from exc
        recon = lower @ lower.T
        scale = np.linalg.norm(aat)
        if np.linalg.norm(recon - aat) > 1e-10 * max(scale, 1e-300):
            raise RankDeficiencyError("Cholesky reconstruction check failed")
        return cls(factor=lower, m=a.nrows)


def solve_normal_equations(chol: DenseCholesky, rhs: np.ndarray) -> np.ndarray:
    """Solve AA* y = rhs through the cached factor."""
    if rhs.shape != (chol.m,):
        raise ValueError("rhs length does not match the factor")
    half = scipy.linalg.solve_triangular(chol.factor, rhs, lower=True)
    return scipy.linalg.solve_triangular(chol.factor.T, half, lower=False)


def exact_half_step(state: SolverState, data: ProblemData, chol: DenseCholesky
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(xb, yb, zb) for the no-proximal dual update (equality rows only)."""
    y, x = state.current.y, state.current.x
    sigma = state.sigma
    v = x + sigma * (data.a.t_apply(y) - data.c)
    xb = np.clip(v, data.lower, data.upper)
    zb = (xb - v) / sigma
    rhs = (data.b - data.a.apply(xb + sigma * (zb - data.c))) / sigma
    yb = solve_normal_equations(chol, rhs)
    return xb, yb, zb


def hpr_exact_iterate(state: SolverState, data: ProblemData,
                      chol: DenseCholesky) -> tuple[np.ndarray, np.ndarray]:
    """One iteration with the exact dual solve; same variant step as the
    lambda path."""
    if data.m2 != 0:
        raise ValueError("the exact path requires an equality-only instance")
    xb, yb, _ = exact_half_step(state, data, chol)
    apply_variant_step(state, yb, xb)
    return xb, yb


def sigma_update_exact(bar: Iterate, anchor: Iterate, a: SparseMatrix,
                       last_residual: KktResidual) -> float:
    """Penalty update for the no-proximal path: the dual displacement is
    measured through A'."""
    delta_x = float(np.linalg.norm(bar.x - anchor.x))
    delta_y = float(np.linalg.norm(a.t_apply(bar.y - anchor.y)))
    if not _sigma_guards_pass(delta_x, delta_y, last_residual.primal_infeas_rel,
                              last_residual.dual_infeas_rel):
        return 1.0
    return delta_x / delta_y


def solve_equality_exact(problem: LpProblem, cfg: SolverConfig | None = None
                         ) -> SolveReport:
    """Restarted solve for equality-only instances using exact dual solves.

    No preconditioning is applied: the exact dual solve makes the iteration
    scale-insensitive enough at the sizes the dense factorization allows.
    """
    cfg = cfg or SolverConfig()
    if problem.m2 != 0:
        raise ValueError("the exact path requires an equality-only instance")
    wall_start = time.perf_counter()
    timings = Timings()
    data = ProblemData.from_problem(problem)
    chol = DenseCholesky.from_matrix(data.a)

    state = SolverState.origin(data, sigma=cfg.sigma0, lam=0.0, variant=cfg.variant)
    restart_log: list[RestartEvent] = []
    status: SolveStatus | None = None
    res: KktResidual | None = None
    candidate: PrimalDualPoint | None = None

    while status is None:
        steps = min(cfg.check_interval, cfg.max_iterations - state.k)
        t0 = time.perf_counter()
        for _ in range(steps):
            hpr_exact_iterate(state, data, chol)
        timings.iteration_seconds += time.perf_counter() - t0

        t0 = time.perf_counter()
        xb, yb, zb = exact_half_step(state, data, chol)
        state.bar = Iterate(yb, xb)
        candidate = PrimalDualPoint(y=yb, z=zb, x=xb)
        res = kkt_residual(problem, candidate)
        if check_termination(res, cfg.tolerance):
            status = SolveStatus.OPTIMAL
        elif state.k >= cfg.max_iterations:
            status = SolveStatus.ITERATION_LIMIT
        elif time.perf_counter() - wall_start >= cfg.time_limit_seconds:
            status = SolveStatus.TIME_LIMIT
        elif cfg.variant.uses_restarts:
            merit_now = 2.0 * m_norm_diff(state.current.y - yb,
                                          state.current.x - xb,
                                          state.sigma, data.a, lam=None)
            if state.merit_first is None:
                state.merit_first = merit_now
                state.merit_prev = math.inf
            kind = check_restart(merit_now, state.merit_first, state.merit_prev,
                                 state.t, state.k, cfg)
            if kind is not None:
                sigma_next = sigma_update_exact(state.bar, state.anchor,
                                                data.a, res) \
                    if cfg.variant.updates_sigma else state.sigma
                restart_log.append(RestartEvent(
                    outer_index=state.r, trigger=kind.value, tau=state.t,
                    sigma_next=sigma_next, merit=merit_now))
                state.anchor = Iterate(yb.copy(), xb.copy())
                state.current = Iterate(yb.copy(), xb.copy())
                state.sigma = sigma_next
                state.r += 1
                state.t = 0
                state.merit_first = None
                state.merit_prev = math.inf
        timings.checkpoint_seconds += time.perf_counter() - t0

    pobj = res.primal_objective
    dobj = res.dual_objective
    if problem.objective_negated:
        pobj, dobj = -pobj, -dobj
    return SolveReport(status=status, primal_objective=pobj, dual_objective=dobj,
                       kkt=res, iterations=state.k, restarts=state.r,
                       restart_log=restart_log, timings=timings,
                       solution=candidate, sigma_final=state.sigma,
                       lambda_estimate=0.0)


# ---------------------------------------------------------------------------
# Two reference formulations of the no-proximal Halpern scheme.  Both solve
#     min -<b,y> + conj-box(-z)   s.t.  A'y + z = c
# for an equality-only LP with full row rank; the first anchors a shifted
# multiplier sequence, the second anchors the full triple.  Their traces
# coincide step for step.
# ---------------------------------------------------------------------------

@dataclass
class DirectTrace:
    """Per-iteration tuples of the shifted-multiplier formulation."""

    y: list[np.ndarray]
    z: list[np.ndarray]
    x_half: list[np.ndarray]
    x_tilde: list[np.ndarray]


@dataclass
class AveragedTrace:
    """Per-iteration half-step tuples of the anchored-triple formulation."""

    y: list[np.ndarray]
    z: list[np.ndarray]
    x: list[np.ndarray]


def _z_step(a: SparseMatrix, y, x, c, lower, upper, sigma):
    v = x + sigma * (a.t_apply(y) - c)
    xb = np.clip(v, lower, upper)
    return (xb - v) / sigma, xb


def hpr_no_prox_trace(problem: LpProblem, sigma: float, iters: int,
                      y0: np.ndarray | None = None,
                      x0: np.ndarray | None = None) -> DirectTrace:
    """Shifted-multiplier formulation: the Halpern combination is applied to
    the multiplier with a correction along A'(y0 - y)."""
    if problem.m2 != 0:
        raise ValueError("equality-only instances required")
    data = ProblemData.from_problem(problem)
    chol = DenseCholesky.from_matrix(data.a)
    a, b, c = data.a, data.b, data.c
    y = np.zeros(data.m) if y0 is None else y0.copy()
    x_tilde0 = np.zeros(data.n) if x0 is None else x0.copy()
    x_tilde = x_tilde0.copy()
    aty0 = a.t_apply(y)
    trace = DirectTrace(y=[], z=[], x_half=[], x_tilde=[])
    for k in range(iters):
        z_next, x_half = _z_step(a, y, x_tilde, c, data.lower, data.upper, sigma)
        rhs = (b - a.apply(x_half + sigma * (z_next - c))) / sigma
        y_next = solve_normal_equations(chol, rhs)
        x_full = x_half + sigma * (a.t_apply(y_next) + z_next - c)
        x_tilde = (x_tilde0 + (k + 1.0) * x_full) / (k + 2.0) \
            + (sigma / (k + 2.0)) * (aty0 - a.t_apply(y_next))
        y = y_next
        trace.y.append(y_next.copy())
        trace.z.append(z_next.copy())
        trace.x_half.append(x_half.copy())
        trace.x_tilde.append(x_tilde.copy())
    return trace


def halpern_padmm_trace(problem: LpProblem, sigma: float, iters: int,
                        y0: np.ndarray | None = None,
                        x0: np.ndarray | None = None) -> AveragedTrace:
    """Anchored-triple formulation: reflect the full (y, z, x) triple and
    average it toward the initial point.  z0 never influences the half-step
    trace; it is fixed at 0."""
    if problem.m2 != 0:
        raise ValueError("equality-only instances required")
    data = ProblemData.from_problem(problem)
    chol = DenseCholesky.from_matrix(data.a)
    a, b, c = data.a, data.b, data.c
    y = np.zeros(data.m) if y0 is None else y0.copy()
    x = np.zeros(data.n) if x0 is None else x0.copy()
    z = np.zeros(data.n)
    anchor = (y.copy(), z.copy(), x.copy())
    trace = AveragedTrace(y=[], z=[], x=[])
    for k in range(iters):
        zb, xb = _z_step(a, y, x, c, data.lower, data.upper, sigma)
        rhs = (b - a.apply(xb + sigma * (zb - c))) / sigma
        yb = solve_normal_equations(chol, rhs)
        trace.y.append(yb.copy())
        trace.z.append(zb.copy())
        trace.x.append(xb.copy())
        w_new = (k + 1.0) / (k + 2.0)
        w_anchor = 1.0 / (k + 2.0)
        y = w_anchor * anchor[0] + w_new * (2.0 * yb - y)
        z = w_anchor * anchor[1] + w_new * (2.0 * zb - z)
        x = w_anchor * anchor[2] + w_new * (2.0 * xb - x)
    return trace


def max_trace_gap(problem: LpProblem, sigma: float, iters: int) -> float:
    """Largest componentwise gap between the two formulations' traces."""
    direct = hpr_no_prox_trace(problem, sigma, iters)
    averaged = halpern_padmm_trace(problem, sigma, iters)
    gap = 0.0
    for k in range(iters):
        gap = max(gap,
                  float(np.max(np.abs(direct.y[k] - averaged.y[k]))),
                  float(np.max(np.abs(direct.z[k] - averaged.z[k]))),
                  float(np.max(np.abs(direct.x_half[k] - averaged.x[k]))))
    return gap
