"""Problem-level preconditioning pipeline and its exact inverse.

Order is fixed: Ruiz equilibration, then Pock-Chambolle diagonal
preconditioning with alpha = 1, then normalization of b and c by
||b|| + 1 and ||c|| + 1.  All factors are recorded so iterates and
objectives map back to the user's problem exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import LpProblem, PrimalDualPoint
from .sparse import SparseMatrix, normalize_rhs_cost, pock_chambolle_scale, ruiz_scale


@dataclass(frozen=True)
class ScalingInfo:
    """Divisors applied to rows/columns plus the b/c normalization factors.

    The scaled matrix is diag(1/row_scale) A diag(1/col_scale).  With
    kappa = col_scale, rho = row_scale, beta_b = b_norm_factor and
    beta_c = c_norm_factor, the solver-space point maps back via

        x = beta_b * x_s / kappa,
        y = beta_c * y_s / rho,
        z = beta_c * kappa * z_s.
    """

    row_scale: np.ndarray
    col_scale: np.ndarray
    b_norm_factor: float
    c_norm_factor: float

    def __post_init__(self):
        if not (np.all(np.isfinite(self.row_scale)) and np.all(self.row_scale > 0)):
            raise ValueError("row_scale must be finite and positive")
        if not (np.all(np.isfinite(self.col_scale)) and np.all(self.col_scale > 0)):
            raise ValueError("col_scale must be finite and positive")
        if not (self.b_norm_factor > 0 and self.c_norm_factor > 0):
            raise ValueError("normalization factors must be positive")

    def unscale_point(self, point: PrimalDualPoint) -> PrimalDualPoint:
        x = point.x * (self.b_norm_factor / self.col_scale)
        y = point.y * (self.c_norm_factor / self.row_scale)
        z = point.z * (self.c_norm_factor * self.col_scale)
        return PrimalDualPoint(y=y, z=z, x=x)

    def scale_point(self, point: PrimalDualPoint) -> PrimalDualPoint:
        x = point.x * (self.col_scale / self.b_norm_factor)
        y = point.y * (self.row_scale / self.c_norm_factor)
        z = point.z / (self.c_norm_factor * self.col_scale)
        return PrimalDualPoint(y=y, z=z, x=x)

    @property
    def objective_factor(self) -> float:
        """Scaled primal objective times this factor recovers the original."""
        return self.b_norm_factor * self.c_norm_factor


def identity_scaling(problem: LpProblem) -> ScalingInfo:
    return ScalingInfo(
        row_scale=np.ones(problem.m),
        col_scale=np.ones(problem.n),
        b_norm_factor=1.0,
        c_norm_factor=1.0,
    )


def scale_problem(problem: LpProblem, ruiz_iters: int = 10,
                  pock_chambolle: bool = True, bc_normalize: bool = True
                  ) -> tuple[LpProblem, ScalingInfo]:
    """Apply the preconditioning pipeline; returns the scaled problem and factors.

    The scaled problem is equivalent: any feasible point of one maps to a
    feasible point of the other with objective related by ``objective_factor``.
    The objective constant is carried unchanged.
    """
    a = problem.stacked_matrix
    row_div = np.ones(problem.m)
    col_div = np.ones(problem.n)
    if ruiz_iters > 0:
        a, dr, dc = ruiz_scale(a, iters=ruiz_iters)
        row_div *= dr
        col_div *= dc
    if pock_chambolle:
        a, dr, dc = pock_chambolle_scale(a, alpha=1.0)
        row_div *= dr
        col_div *= dc

    b = problem.rhs / row_div
    c = problem.c / col_div
    lower = problem.lower * col_div
    upper = problem.upper * col_div

    if bc_normalize:
        b, c, b_factor, c_factor = normalize_rhs_cost(b, c)
        lower = lower / b_factor
        upper = upper / b_factor
    else:
        b_factor = c_factor = 1.0

    m1 = problem.m1
    # Rebuild the blocks from the scaled stacked matrix.
    dense_split = a._csr
    a_eq = SparseMatrix.from_scipy(dense_split[:m1]) if m1 else _empty(0, problem.n)
    a_ineq = SparseMatrix.from_scipy(dense_split[m1:]) if problem.m2 else _empty(0, problem.n)
    scaled = LpProblem(
        a_eq=a_eq,
        a_ineq=a_ineq,
        b_eq=b[:m1],
        b_ineq=b[m1:],
        c=c,
        lower=lower,
        upper=upper,
        objective_constant=problem.objective_constant,
        objective_negated=problem.objective_negated,
        row_names=problem.row_names,
        col_names=problem.col_names,
    )
    info = ScalingInfo(row_scale=row_div, col_scale=col_div,
                       b_norm_factor=b_factor, c_norm_factor=c_factor)
    return scaled, info


def _empty(nrows: int, ncols: int) -> SparseMatrix:
    return SparseMatrix(
        row_offsets=np.zeros(nrows + 1, dtype=np.int64),
        col_indices=np.zeros(0, dtype=np.int64),
        values=np.zeros(0),
        nrows=nrows,
        ncols=ncols,
    )
