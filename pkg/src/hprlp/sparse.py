"""Sparse CSR kernels: SpMV, largest-eigenvalue estimation, equilibration."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

# Safety margin applied to the power-method estimate: the Rayleigh quotient
# converges to lambda_1(AA*) from below, but the proximal term lambda*I - AA*
# must stay positive semidefinite.
LAMBDA_SAFETY = 1e-3


class DimensionMismatchError(ValueError):
    """Operand length does not match the matrix shape."""


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSR matrix in canonical form.

    Column indices are strictly increasing within each row and explicit
    zeros are dropped on construction, so ``nnz`` counts structural
    nonzeros only.
    """

    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    nrows: int
    ncols: int

    def __post_init__(self):
        if self.row_offsets.shape != (self.nrows + 1,):
            raise ValueError("row_offsets must have length nrows + 1")
        if self.row_offsets[0] != 0 or np.any(np.diff(self.row_offsets) < 0):
            raise ValueError("row_offsets must be monotone and start at 0")
        if self.row_offsets[-1] != len(self.values):
            raise ValueError("row_offsets[-1] must equal nnz")
        if len(self.col_indices) != len(self.values):
            raise ValueError("col_indices and values must have equal length")
        if self.values.size and np.any(self.values == 0.0):
            raise ValueError("explicit zeros are not allowed")
        if self.nnz:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.ncols:
                raise ValueError("column index out of range")
            # Strictly increasing within each row: adjacent pairs may only
            # decrease across row boundaries.
            diffs = np.diff(self.col_indices)
            starts = self.row_offsets[1:-1]
            starts = starts[(starts > 0) & (starts < self.nnz)]
            within = np.ones(diffs.shape, dtype=bool)
            within[starts - 1] = False
            if np.any(diffs[within] <= 0):
                raise ValueError("column indices must be strictly increasing within rows")

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @classmethod
    def from_scipy(cls, mat) -> "SparseMatrix":
        csr = sp.csr_matrix(mat, dtype=np.float64, copy=True)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        return cls(
            row_offsets=csr.indptr.astype(np.int64),
            col_indices=csr.indices.astype(np.int64),
            values=csr.data.astype(np.float64),
            nrows=csr.shape[0],
            ncols=csr.shape[1],
        )

    @classmethod
    def from_dense(cls, arr) -> "SparseMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(arr, dtype=np.float64)))

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "SparseMatrix":
        return cls.from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=shape))

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        m = sp.csr_matrix((self.values, self.col_indices, self.row_offsets),
                          shape=(self.nrows, self.ncols))
        m.has_sorted_indices = True
        return m

    @cached_property
    def _csr_t(self) -> sp.csr_matrix:
        return sp.csr_matrix(self._csr.T)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """A @ v with fixed row-major accumulation."""
        return self._csr @ v

    def t_apply(self, v: np.ndarray) -> np.ndarray:
        """A.T @ v with fixed row-major accumulation."""
        return self._csr_t @ v

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def row_max_abs(self) -> np.ndarray:
        out = np.zeros(self.nrows)
        absdata = np.abs(self.values)
        np.maximum.at(out, np.repeat(np.arange(self.nrows), np.diff(self.row_offsets)), absdata)
        return out

    def col_max_abs(self) -> np.ndarray:
        out = np.zeros(self.ncols)
        np.maximum.at(out, self.col_indices, np.abs(self.values))
        return out

    def scale_rows_cols(self, row_div: np.ndarray, col_div: np.ndarray) -> "SparseMatrix":
        """diag(1/row_div) @ A @ diag(1/col_div)."""
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_offsets))
        new_vals = self.values / row_div[rows] / col_div[self.col_indices]
        return SparseMatrix(
            row_offsets=self.row_offsets.copy(),
            col_indices=self.col_indices.copy(),
            values=new_vals,
            nrows=self.nrows,
            ncols=self.ncols,
        )


def vstack(blocks: list[SparseMatrix]) -> SparseMatrix:
    return SparseMatrix.from_scipy(sp.vstack([b._csr for b in blocks], format="csr"))


def spmv(a: SparseMatrix, v: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product A @ v."""
    if v.shape != (a.ncols,):
        raise DimensionMismatchError(f"expected length {a.ncols}, got {v.shape}")
    return a.apply(v)


def spmv_t(a: SparseMatrix, v: np.ndarray) -> np.ndarray:
    """Transpose product A.T @ v."""
    if v.shape != (a.nrows,):
        raise DimensionMismatchError(f"expected length {a.nrows}, got {v.shape}")
    return a.t_apply(v)


@dataclass(frozen=True)
class PowerMethodEstimate:
    """Largest-eigenvalue estimate for AA*, inflated for PSD safety."""

    value: float          # raw estimate * (1 + LAMBDA_SAFETY)
    raw: float            # Rayleigh quotient at the last iterate
    iterations: int
    converged: bool


def power_method_lambda_max(a: SparseMatrix, tol: float = 1e-4,
                            max_iters: int = 5000) -> PowerMethodEstimate:
    """Estimate lambda_1(AA*) by power iteration on v -> A(A.T v).

    Starts from the deterministic all-ones vector and stops when the
    relative change of the Rayleigh quotient drops below ``tol``.  The
    returned ``value`` is inflated by ``1 + LAMBDA_SAFETY`` so that
    lambda*I - AA* stays positive semidefinite.
    """
    if a.nnz == 0:
        raise ValueError("matrix must be non-zero")
    v = np.ones(a.nrows)
    # All-ones can hit the null space of A*; fall back to basis vectors.
    for fallback in range(a.nrows + 1):
        if np.linalg.norm(a.t_apply(v)) > 0.0:
            break
        v = np.zeros(a.nrows)
        v[fallback] = 1.0
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    lam = 0.0
    converged = False
    iters = 0
    for iters in range(1, max_iters + 1):
        w = a.apply(a.t_apply(v))
        lam = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        if iters > 1 and abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            converged = True
            break
        lam_prev = lam
    if not converged:
        warnings.warn(f"power method did not converge within {iters} iterations",
                      RuntimeWarning)
    return PowerMethodEstimate(value=lam * (1.0 + LAMBDA_SAFETY), raw=lam,
                               iterations=iters, converged=converged)


def ruiz_scale(a: SparseMatrix, iters: int = 10) -> tuple[SparseMatrix, np.ndarray, np.ndarray]:
    """Ruiz equilibration: returns (scaled matrix, row divisors, col divisors).

    Each iteration divides every row and column by the square root of its
    max-absolute entry (computed simultaneously from the current matrix).
    Zero rows/columns keep divisor 1.
    """
    row_div = np.ones(a.nrows)
    col_div = np.ones(a.ncols)
    cur = a
    for _ in range(iters):
        dr = np.sqrt(cur.row_max_abs())
        dc = np.sqrt(cur.col_max_abs())
        dr[dr == 0.0] = 1.0
        dc[dc == 0.0] = 1.0
        cur = cur.scale_rows_cols(dr, dc)
        row_div *= dr
        col_div *= dc
    return cur, row_div, col_div


def pock_chambolle_scale(a: SparseMatrix, alpha: float = 1.0
                         ) -> tuple[SparseMatrix, np.ndarray, np.ndarray]:
    """Diagonal preconditioning: column j divided by sqrt(sum_i |a_ij|^alpha),
    row i by sqrt(sum_j |a_ij|^(2-alpha)).  Zero rows/columns keep divisor 1.
    """
    absdata = np.abs(a.values)
    rows = np.repeat(np.arange(a.nrows), np.diff(a.row_offsets))
    col_sums = np.zeros(a.ncols)
    np.add.at(col_sums, a.col_indices, absdata ** alpha)
    row_sums = np.zeros(a.nrows)
    np.add.at(row_sums, rows, absdata ** (2.0 - alpha))
    dc = np.sqrt(col_sums)
    dr = np.sqrt(row_sums)
    dc[dc == 0.0] = 1.0
    dr[dr == 0.0] = 1.0
    return a.scale_rows_cols(dr, dc), dr, dc


def normalize_rhs_cost(b: np.ndarray, c: np.ndarray
                       ) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Divide b by ||b||+1 and c by ||c||+1; returns (b', c', b_factor, c_factor)."""
    b_factor = float(np.linalg.norm(b)) + 1.0
    c_factor = float(np.linalg.norm(c)) + 1.0
    return b / b_factor, c / c_factor, b_factor, c_factor
