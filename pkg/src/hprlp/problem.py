"""LP data model: equality/inequality blocks, box bounds, objectives, projections.

The solver works on the minimization form

    min <c, x>  s.t.  A1 x = b1,  A2 x >= b2,  l <= x <= u,

with the equality block stored first.  Dual multipliers y = (y1, y2) live in
D = R^m1 x R^m2_+ and reduced costs z pair with the box bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .sparse import SparseMatrix, vstack


@dataclass(frozen=True)
class LpProblem:
    """Standard-form LP instance.  Immutable after construction."""

    a_eq: SparseMatrix
    a_ineq: SparseMatrix
    b_eq: np.ndarray
    b_ineq: np.ndarray
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    objective_constant: float = 0.0
    objective_negated: bool = False   # set when ingesting a maximization problem
    row_names: list[str] | None = None
    col_names: list[str] | None = None

    def __post_init__(self):
        n = self.a_eq.ncols
        if self.a_ineq.ncols != n:
            raise ValueError("equality and inequality blocks disagree on column count")
        if self.b_eq.shape != (self.a_eq.nrows,) or self.b_ineq.shape != (self.a_ineq.nrows,):
            raise ValueError("right-hand side lengths do not match the blocks")
        for name, vec in (("c", self.c), ("lower", self.lower), ("upper", self.upper)):
            if vec.shape != (n,):
                raise ValueError(f"{name} must have length {n}")
        if self.m1 + self.m2 < 1:
            raise ValueError("at least one constraint row is required")
        if self.a_eq.nnz + self.a_ineq.nnz == 0:
            raise ValueError("constraint matrix must be non-zero")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not contain NaN")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b_eq))
                and np.all(np.isfinite(self.b_ineq))):
            raise ValueError("c and b must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.a_eq.ncols

    @property
    def m1(self) -> int:
        return self.a_eq.nrows

    @property
    def m2(self) -> int:
        return self.a_ineq.nrows

    @property
    def m(self) -> int:
        return self.m1 + self.m2

    @cached_property
    def stacked_matrix(self) -> SparseMatrix:
        """A = [A1; A2]."""
        if self.m2 == 0:
            return self.a_eq
        if self.m1 == 0:
            return self.a_ineq
        return vstack([self.a_eq, self.a_ineq])

    @cached_property
    def rhs(self) -> np.ndarray:
        """b = [b1; b2]."""
        return np.concatenate([self.b_eq, self.b_ineq])

    @classmethod
    def from_dense(cls, a_eq, b_eq, a_ineq, b_ineq, c, lower=None, upper=None,
                   **kwargs) -> "LpProblem":
        """Build from dense array-likes; empty blocks may be passed as None."""
        c = np.asarray(c, dtype=np.float64)
        n = c.shape[0]
        if a_eq is None:
            a_eq, b_eq = np.zeros((0, n)), np.zeros(0)
        if a_ineq is None:
            a_ineq, b_ineq = np.zeros((0, n)), np.zeros(0)
        if lower is None:
            lower = np.zeros(n)
        if upper is None:
            upper = np.full(n, np.inf)
        return cls(
            a_eq=SparseMatrix.from_dense(np.atleast_2d(np.asarray(a_eq, dtype=np.float64)).reshape(-1, n)),
            a_ineq=SparseMatrix.from_dense(np.atleast_2d(np.asarray(a_ineq, dtype=np.float64)).reshape(-1, n)),
            b_eq=np.asarray(b_eq, dtype=np.float64).reshape(-1),
            b_ineq=np.asarray(b_ineq, dtype=np.float64).reshape(-1),
            c=c,
            lower=np.asarray(lower, dtype=np.float64),
            upper=np.asarray(upper, dtype=np.float64),
            **kwargs,
        )


@dataclass
class PrimalDualPoint:
    """Candidate triple (y, z, x) for an LpProblem."""

    y: np.ndarray
    z: np.ndarray
    x: np.ndarray

    def check_dims(self, problem: LpProblem) -> None:
        if self.y.shape != (problem.m,) or self.z.shape != (problem.n,) \
                or self.x.shape != (problem.n,):
            raise ValueError("point dimensions do not match the problem")


def project_onto_box(v: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Componentwise clamp of v onto [lower, upper]."""
    if v.shape != lower.shape or v.shape != upper.shape:
        raise ValueError("length mismatch in box projection")
    return np.clip(v, lower, upper)


def project_onto_dual_cone(v: np.ndarray, m1: int) -> np.ndarray:
    """Projection onto R^m1 x R^(m-m1)_+: the first m1 entries pass through."""
    if m1 > v.shape[0] or m1 < 0:
        raise ValueError("m1 out of range")
    out = v.copy()
    if m1 < v.shape[0]:
        np.maximum(out[m1:], 0.0, out=out[m1:])
    return out


def primal_objective(problem: LpProblem, x: np.ndarray) -> float:
    """<c, x> plus the objective constant (minimization form)."""
    return float(problem.c @ x) + problem.objective_constant


class DualObjective(NamedTuple):
    value: float
    clamped: int   # components whose active bound is infinite, treated as z_i = 0


def dual_objective(problem: LpProblem, y: np.ndarray, z: np.ndarray) -> DualObjective:
    """<b, y> - conjugate-of-box(-z), plus the objective constant.

    The bound term is sum(l_i z_i for z_i > 0) + sum(u_i z_i for z_i < 0).
    A component whose active bound is infinite would make the conjugate
    infinite; it contributes as if z_i = 0 and is counted in ``clamped`` so
    the duality-gap test stays finite.
    """
    pos = z > 0.0
    neg = z < 0.0
    lo_fin = np.isfinite(problem.lower)
    up_fin = np.isfinite(problem.upper)
    clamped = int(np.count_nonzero(pos & ~lo_fin) + np.count_nonzero(neg & ~up_fin))
    val = float(problem.rhs @ y)
    take_lo = pos & lo_fin
    take_up = neg & up_fin
    if np.any(take_lo):
        val += float(problem.lower[take_lo] @ z[take_lo])
    if np.any(take_up):
        val += float(problem.upper[take_up] @ z[take_up])
    return DualObjective(val + problem.objective_constant, clamped)
