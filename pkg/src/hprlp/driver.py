"""Outer solve loop: checkpoints, restart criteria, penalty updates, reporting.

Termination follows the usual first-order LP convention: relative duality
gap, relative primal infeasibility and relative dual infeasibility must all
drop below the tolerance.  Restart and termination share one checkpoint
cadence (every ``check_interval`` iterations) so the per-iteration cost
stays O(nnz).
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import (Iterate, NumericalBreakdownError, ProblemData, SolverState,
                   Variant, checkpoint_merit, half_step, run_inner)
from .problem import (LpProblem, PrimalDualPoint, dual_objective,
                      primal_objective, project_onto_box,
                      project_onto_dual_cone)
from .scaling import identity_scaling, scale_problem
from .sparse import SparseMatrix, power_method_lambda_max

SCHEMA_VERSION = 1

# Guard ranges for the penalty update: the displacement magnitudes must be
# in a sane window and the primal/dual infeasibilities must not be wildly
# lopsided, otherwise the penalty resets to 1.
DELTA_RANGE = (1e-16, 1e12)
ERROR_RATIO_RANGE = (1e-8, 1e8)


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    ITERATION_LIMIT = "IterationLimit"
    TIME_LIMIT = "TimeLimit"
    NUMERICAL_ERROR = "NumericalError"


class RestartKind(enum.Enum):
    SUFFICIENT = "sufficient"
    STALLED = "stalled"
    LONG_LOOP = "long_loop"


@dataclass
class SolverConfig:
    """Tuning knobs; defaults follow the solver's standard recipe."""

    tolerance: float = 1e-8
    time_limit_seconds: float = math.inf
    max_iterations: int = 1_000_000
    check_interval: int = 150
    alpha1: float = 0.2
    alpha2: float = 0.6
    alpha3: float = 0.2
    sigma0: float = 1.0
    variant: Variant = Variant.HPR
    ruiz_iters: int = 10
    pock_chambolle: bool = True
    bc_normalize: bool = True
    power_tol: float = 1e-4
    power_max_iters: int = 5000
    termination_space: str = "original"   # or "scaled"

    def __post_init__(self):
        if isinstance(self.variant, str):
            self.variant = Variant(self.variant)
        if not (0.0 < self.alpha1 < self.alpha2 < 1.0):
            raise ValueError("need 0 < alpha1 < alpha2 < 1")
        if not (0.0 < self.alpha3 < 1.0):
            raise ValueError("need 0 < alpha3 < 1")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.check_interval < 1:
            raise ValueError("check_interval must be >= 1")
        if self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")
        if self.termination_space not in ("original", "scaled"):
            raise ValueError("termination_space must be 'original' or 'scaled'")


@dataclass
class KktResidual:
    """Primal/dual infeasibility, duality gap, and the stacked residual norm."""

    primal_infeas_abs: float
    primal_infeas_rel: float
    dual_infeas_abs: float
    dual_infeas_rel: float
    gap_abs: float
    gap_rel: float
    residual_vector_norm: float
    primal_objective: float
    dual_objective: float
    dual_clamped: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "primal_infeas_abs": self.primal_infeas_abs,
            "primal_infeas_rel": self.primal_infeas_rel,
            "dual_infeas_abs": self.dual_infeas_abs,
            "dual_infeas_rel": self.dual_infeas_rel,
            "gap_abs": self.gap_abs,
            "gap_rel": self.gap_rel,
            "residual_vector_norm": self.residual_vector_norm,
            "primal_objective": self.primal_objective,
            "dual_objective": self.dual_objective,
            "dual_clamped": self.dual_clamped,
        }


@dataclass
class RestartEvent:
    outer_index: int
    trigger: str
    tau: int
    sigma_next: float
    merit: float

    def to_dict(self) -> dict[str, Any]:
        return {"outer_index": self.outer_index, "trigger": self.trigger,
                "tau": self.tau, "sigma_next": self.sigma_next, "merit": self.merit}


@dataclass
class Timings:
    """Wall-clock split.  ``solve_seconds`` is the benchmark convention:
    power method + iterations + checkpoint work, excluding scaling/parsing."""

    scaling_seconds: float = 0.0
    power_method_seconds: float = 0.0
    iteration_seconds: float = 0.0
    checkpoint_seconds: float = 0.0

    @property
    def solve_seconds(self) -> float:
        return self.power_method_seconds + self.iteration_seconds + self.checkpoint_seconds

    def to_dict(self) -> dict[str, Any]:
        return {
            "scaling_seconds": self.scaling_seconds,
            "power_method_seconds": self.power_method_seconds,
            "iteration_seconds": self.iteration_seconds,
            "checkpoint_seconds": self.checkpoint_seconds,
            "solve_seconds": self.solve_seconds,
        }


@dataclass
class SolveReport:
    status: SolveStatus
    primal_objective: float
    dual_objective: float
    kkt: KktResidual
    iterations: int
    restarts: int
    restart_log: list[RestartEvent]
    timings: Timings
    solution: PrimalDualPoint
    sigma_final: float
    lambda_estimate: float

    def to_json_dict(self, include_solution: bool = True) -> dict[str, Any]:
        out = {
            "schema_version": SCHEMA_VERSION,
            "status": self.status.value,
            "primal_objective": self.primal_objective,
            "dual_objective": self.dual_objective,
            "kkt": self.kkt.to_dict(),
            "iterations": self.iterations,
            "restarts": self.restarts,
            "restart_log": [e.to_dict() for e in self.restart_log],
            "timings": self.timings.to_dict(),
            "sigma_final": self.sigma_final,
            "lambda_estimate": self.lambda_estimate,
        }
        if include_solution:
            out["solution"] = {
                "x": self.solution.x.tolist(),
                "y": self.solution.y.tolist(),
                "z": self.solution.z.tolist(),
            }
        return out


def kkt_residual(problem: LpProblem, point: PrimalDualPoint) -> KktResidual:
    """All residual blocks at a candidate point.

    Primal infeasibility is the norm of the dual-cone projection of b - Ax
    (equality violations pass through, inequality violations are the positive
    part); dual infeasibility is |c - A'y - z|.  The stacked residual norm
    additionally measures complementarity through the projection mappings.
    """
    point.check_dims(problem)
    a = problem.stacked_matrix
    b = problem.rhs
    x, y, z = point.x, point.y, point.z
    ax = a.apply(x)
    prim_vec = project_onto_dual_cone(b - ax, problem.m1)
    primal_abs = float(np.linalg.norm(prim_vec))
    primal_rel = primal_abs / (1.0 + float(np.linalg.norm(b)))
    dual_vec = problem.c - a.t_apply(y) - z
    dual_abs = float(np.linalg.norm(dual_vec))
    dual_rel = dual_abs / (1.0 + float(np.linalg.norm(problem.c)))
    pobj = primal_objective(problem, x)
    dobj, clamped = dual_objective(problem, y, z)
    gap_abs = abs(dobj - pobj)
    gap_rel = gap_abs / (1.0 + abs(dobj) + abs(pobj))
    r1 = y - project_onto_dual_cone(y - ax + b, problem.m1)
    r2 = x - project_onto_box(x - z, problem.lower, problem.upper)
    stacked = math.sqrt(float(r1 @ r1) + float(r2 @ r2) + float(dual_vec @ dual_vec))
    return KktResidual(
        primal_infeas_abs=primal_abs,
        primal_infeas_rel=primal_rel,
        dual_infeas_abs=dual_abs,
        dual_infeas_rel=dual_rel,
        gap_abs=gap_abs,
        gap_rel=gap_rel,
        residual_vector_norm=stacked,
        primal_objective=pobj,
        dual_objective=dobj,
        dual_clamped=clamped,
    )


def check_termination(res: KktResidual, tolerance: float) -> bool:
    """Non-strict comparison of the three relative criteria."""
    return (res.gap_rel <= tolerance
            and res.primal_infeas_rel <= tolerance
            and res.dual_infeas_rel <= tolerance)


def check_restart(merit_now: float, merit_first: float, merit_prev: float,
                  t: int, k: int, cfg: SolverConfig) -> RestartKind | None:
    """Restart decision, in priority order: sufficient decay, then decay
    with no local progress, then an overlong inner loop."""
    if merit_now <= cfg.alpha1 * merit_first:
        return RestartKind.SUFFICIENT
    if merit_now <= cfg.alpha2 * merit_first and merit_now > merit_prev:
        return RestartKind.STALLED
    if t >= cfg.alpha3 * k:
        return RestartKind.LONG_LOOP
    return None


def _sigma_guards_pass(delta_x: float, delta_y: float, error_p: float,
                       error_d: float) -> bool:
    lo, hi = DELTA_RANGE
    if not (lo < delta_x < hi and lo < delta_y < hi):
        return False
    if error_p == 0.0:
        # Both infeasibilities vanished: the ratio guard is vacuous.
        return error_d == 0.0
    ratio = error_d / error_p
    rlo, rhi = ERROR_RATIO_RANGE
    return rlo < ratio < rhi


def sigma_update(bar: Iterate, anchor: Iterate, lam: float, a: SparseMatrix,
                 last_residual: KktResidual) -> float:
    """New penalty from the displacement over the finished inner loop.

    With the lambda-proximal weight the dual displacement in the metric
    collapses to sqrt(lam) * |y_bar - y_anchor|, so the minimizer of the
    distance bound is |x_bar - x_anchor| / (sqrt(lam) |y_bar - y_anchor|).
    Out-of-range displacements or lopsided infeasibilities reset to 1.
    """
    delta_x = float(np.linalg.norm(bar.x - anchor.x))
    delta_y = math.sqrt(lam) * float(np.linalg.norm(bar.y - anchor.y))
    if not _sigma_guards_pass(delta_x, delta_y, last_residual.primal_infeas_rel,
                              last_residual.dual_infeas_rel):
        return 1.0
    return delta_x / delta_y


def solve(problem: LpProblem, cfg: SolverConfig | None = None) -> SolveReport:
    """Run the restarted solver on an LpProblem.

    Pipeline: scale per config, estimate lambda_1(AA*), iterate from the
    origin with checkpoints every ``check_interval`` iterations.  Limits are
    reported as statuses, never raised.
    """
    cfg = cfg or SolverConfig()
    wall_start = time.perf_counter()
    timings = Timings()

    t0 = time.perf_counter()
    if cfg.ruiz_iters > 0 or cfg.pock_chambolle or cfg.bc_normalize:
        scaled, info = scale_problem(problem, ruiz_iters=cfg.ruiz_iters,
                                     pock_chambolle=cfg.pock_chambolle,
                                     bc_normalize=cfg.bc_normalize)
    else:
        scaled, info = problem, identity_scaling(problem)
    timings.scaling_seconds = time.perf_counter() - t0

    data = ProblemData.from_problem(scaled)

    t0 = time.perf_counter()
    estimate = power_method_lambda_max(data.a, tol=cfg.power_tol,
                                       max_iters=cfg.power_max_iters)
    timings.power_method_seconds = time.perf_counter() - t0
    lam = estimate.value

    state = SolverState.origin(data, sigma=cfg.sigma0, lam=lam, variant=cfg.variant)
    term_problem = problem if cfg.termination_space == "original" else scaled

    restart_log: list[RestartEvent] = []
    status: SolveStatus | None = None
    res: KktResidual | None = None
    candidate: PrimalDualPoint | None = None

    while status is None:
        steps = min(cfg.check_interval, cfg.max_iterations - state.k)
        t0 = time.perf_counter()
        try:
            if steps > 0:
                run_inner(state, data, steps)
        except NumericalBreakdownError:
            timings.iteration_seconds += time.perf_counter() - t0
            status = SolveStatus.NUMERICAL_ERROR
            break
        timings.iteration_seconds += time.perf_counter() - t0

        t0 = time.perf_counter()
        xb, yb, zb = half_step(state, data)
        state.bar = Iterate(yb, xb)
        scaled_point = PrimalDualPoint(y=yb, z=zb, x=xb)
        if cfg.termination_space == "original":
            candidate = info.unscale_point(scaled_point)
            # positive rescaling can round a hair outside the box
            candidate.x = np.clip(candidate.x, problem.lower, problem.upper)
        else:
            candidate = scaled_point
        res = kkt_residual(term_problem, candidate)

        if check_termination(res, cfg.tolerance):
            status = SolveStatus.OPTIMAL
        elif state.k >= cfg.max_iterations:
            status = SolveStatus.ITERATION_LIMIT
        elif time.perf_counter() - wall_start >= cfg.time_limit_seconds:
            status = SolveStatus.TIME_LIMIT
        elif cfg.variant.uses_restarts:
            merit_now = checkpoint_merit(state, xb, yb, data.a)
            if state.merit_first is None:
                state.merit_first = merit_now
                state.merit_prev = math.inf
            kind = check_restart(merit_now, state.merit_first, state.merit_prev,
                                 state.t, state.k, cfg)
            if kind is not None:
                if cfg.variant.updates_sigma:
                    sigma_next = sigma_update(state.bar, state.anchor, lam,
                                              data.a, res)
                else:
                    sigma_next = state.sigma
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
            else:
                state.merit_prev = merit_now
        timings.checkpoint_seconds += time.perf_counter() - t0

    if candidate is None or res is None:
        # breakdown before the first checkpoint: fall back to the origin
        candidate = PrimalDualPoint(
            y=np.zeros(term_problem.m), z=np.zeros(term_problem.n),
            x=np.clip(np.zeros(term_problem.n), term_problem.lower,
                      term_problem.upper))
        res = kkt_residual(term_problem, candidate)

    if cfg.termination_space == "scaled":
        solution = info.unscale_point(candidate)
        solution.x = np.clip(solution.x, problem.lower, problem.upper)
    else:
        solution = candidate

    pobj = primal_objective(problem, solution.x)
    dobj, _ = dual_objective(problem, solution.y, solution.z)
    if problem.objective_negated:
        pobj, dobj = -pobj, -dobj

    return SolveReport(
        status=status,
        primal_objective=pobj,
        dual_objective=dobj,
        kkt=res,
        iterations=state.k,
        restarts=state.r,
        restart_log=restart_log,
        timings=timings,
        solution=solution,
        sigma_final=state.sigma,
        lambda_estimate=lam,
    )
