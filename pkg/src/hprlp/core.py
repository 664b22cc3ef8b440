"""Inner iteration of the restarted Halpern Peaceman-Rachford scheme.

One step, written on the (y, x) pair only (the dual slack z is implied and
reconstructed on demand):

    xb = clip(x + sigma*(A'y - c), l, u)
    yb = y + (b - A(2 xb - x)) / (lambda sigma),   tail clamped >= 0
    variant step pulls (y, x) toward the anchor:
        DR            (y, x) <- (yb, xb)
        HDR family    (y, x) <- anchor/(t+2) + (t+1)/(t+2) * (yb, xb)
        HPR           (y, x) <- anchor/(t+2) + (t+1)/(t+2) * (2(yb, xb) - (y, x))

This needs lambda >= lambda_1(AA*) so the implicit proximal weight
lambda*I - AA* is positive semidefinite.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .problem import LpProblem
from .sparse import SparseMatrix


class Variant(enum.Enum):
    """Ablation variants: plain splitting, Halpern averaging, reflection."""

    DR = "dr"
    HDR_FIXED_SIGMA = "hdr-fixed"
    HDR = "hdr"
    HPR = "hpr"

    @property
    def uses_restarts(self) -> bool:
        return self is not Variant.DR

    @property
    def updates_sigma(self) -> bool:
        return self in (Variant.HDR, Variant.HPR)


class NumericalBreakdownError(ArithmeticError):
    """A non-finite value appeared in the iterates."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration


@dataclass
class Iterate:
    """One (y, x) pair; z is never stored."""

    y: np.ndarray
    x: np.ndarray

    def copy(self) -> "Iterate":
        return Iterate(self.y.copy(), self.x.copy())


@dataclass(frozen=True)
class ProblemData:
    """Arrays of the (possibly scaled) instance the iteration runs on."""

    a: SparseMatrix
    b: np.ndarray
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    m1: int

    @property
    def m(self) -> int:
        return self.a.nrows

    @property
    def n(self) -> int:
        return self.a.ncols

    @property
    def m2(self) -> int:
        return self.m - self.m1

    @classmethod
    def from_problem(cls, p: LpProblem) -> "ProblemData":
        return cls(a=p.stacked_matrix, b=p.rhs, c=p.c,
                   lower=p.lower, upper=p.upper, m1=p.m1)


@dataclass
class SolverState:
    """Mutable solver state: current and anchor iterates plus counters."""

    current: Iterate
    anchor: Iterate
    sigma: float
    lam: float
    variant: Variant
    bar: Iterate | None = None      # refreshed at checkpoints
    r: int = 0                      # outer (restart) counter
    t: int = 0                      # inner counter since last restart
    k: int = 0                      # total iteration counter
    merit_first: float | None = None
    merit_prev: float = np.inf

    @classmethod
    def origin(cls, data: ProblemData, sigma: float, lam: float,
               variant: Variant = Variant.HPR) -> "SolverState":
        w0 = Iterate(np.zeros(data.m), np.zeros(data.n))
        return cls(current=w0, anchor=w0.copy(), sigma=sigma, lam=lam,
                   variant=variant)


def half_step(state: SolverState, data: ProblemData
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(xb, yb, zb) computed from the current iterate without advancing."""
    y, x = state.current.y, state.current.x
    sigma = state.sigma
    v = x + sigma * (data.a.t_apply(y) - data.c)
    xb = np.clip(v, data.lower, data.upper)
    zb = (xb - v) / sigma
    yb = y + (data.b - data.a.apply(2.0 * xb - x)) / (state.lam * sigma)
    if data.m2:
        np.maximum(yb[data.m1:], 0.0, out=yb[data.m1:])
    return xb, yb, zb


def compute_z_bar(state: SolverState, data: ProblemData) -> np.ndarray:
    """Reconstruct the dual slack at the current iterate."""
    y, x = state.current.y, state.current.x
    v = x + state.sigma * (data.a.t_apply(y) - data.c)
    return (np.clip(v, data.lower, data.upper) - v) / state.sigma


def apply_variant_step(state: SolverState, yb: np.ndarray, xb: np.ndarray) -> None:
    """Advance (y, x) from the half-step candidates and bump the counters."""
    y, x = state.current.y, state.current.x
    t2 = state.t + 2.0
    w_new = (state.t + 1.0) / t2
    w_anchor = 1.0 / t2
    variant = state.variant
    if variant is Variant.DR:
        y_next, x_next = yb, xb
    elif variant is Variant.HPR:
        y_next = w_anchor * state.anchor.y + w_new * (2.0 * yb - y)
        x_next = w_anchor * state.anchor.x + w_new * (2.0 * xb - x)
    else:  # HDR family: Halpern averaging toward the half-step point
        y_next = w_anchor * state.anchor.y + w_new * yb
        x_next = w_anchor * state.anchor.x + w_new * xb
    # inf - inf in the updates shows up as NaN in the sums
    probe = float(y_next.sum()) + float(x_next.sum())
    if not np.isfinite(probe) and not (np.all(np.isfinite(y_next)) and np.all(np.isfinite(x_next))):
        raise NumericalBreakdownError(state.k)
    state.current = Iterate(y_next, x_next)
    state.t += 1
    state.k += 1


def iterate_once(state: SolverState, data: ProblemData
                 ) -> tuple[np.ndarray, np.ndarray]:
    """One full iteration; returns the (xb, yb) pair it stepped through."""
    y, x = state.current.y, state.current.x
    sigma = state.sigma
    v = x + sigma * (data.a.t_apply(y) - data.c)
    xb = np.clip(v, data.lower, data.upper)
    yb = y + (data.b - data.a.apply(2.0 * xb - x)) / (state.lam * sigma)
    if data.m2:
        np.maximum(yb[data.m1:], 0.0, out=yb[data.m1:])
    apply_variant_step(state, yb, xb)
    return xb, yb


def run_inner(state: SolverState, data: ProblemData, steps: int) -> None:
    for _ in range(steps):
        iterate_once(state, data)


def m_norm_diff(dy: np.ndarray, dx: np.ndarray, sigma: float, a: SparseMatrix,
                lam: float | None) -> float:
    """Semi-norm of (dy, *, dx) under the splitting operator's metric.

    With the lambda-proximal weight the quadratic form is
    sigma*(lam*|dy|^2 - |A'dy|^2) + (1/sigma)*|dx + sigma*A'dy|^2;
    ``lam=None`` selects the no-proximal path where the first term vanishes.
    The z block contributes nothing.  Round-off below zero is clamped.
    """
    aty = a.t_apply(dy)
    shifted = dx + sigma * aty
    q = float(shifted @ shifted) / sigma
    if lam is not None:
        t1 = lam * float(dy @ dy) - float(aty @ aty)
        q += sigma * t1
        scale = sigma * lam * float(dy @ dy) + float(dx @ dx) / sigma
        if q < -1e-9 * max(scale, 1e-300):
            warnings.warn("negative quadratic form in the merit: lambda may "
                          "underestimate lambda_1(AA*)", RuntimeWarning)
    return float(np.sqrt(max(q, 0.0)))


def compute_merit(a_point: Iterate, b_point: Iterate, sigma: float, lam: float | None,
                  a: SparseMatrix) -> float:
    """Distance between two iterates in the splitting metric."""
    return m_norm_diff(a_point.y - b_point.y, a_point.x - b_point.x, sigma, a, lam)


def checkpoint_merit(state: SolverState, xb: np.ndarray, yb: np.ndarray,
                     a: SparseMatrix) -> float:
    """Fixed-point residual at a checkpoint.

    The reflection identity makes |w - w_hat| = 2 |w - w_bar| in the metric,
    so the freshly computed half-step pair is enough.
    """
    return 2.0 * m_norm_diff(state.current.y - yb, state.current.x - xb,
                             state.sigma, a, state.lam)
