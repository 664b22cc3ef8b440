import numpy as np
import pytest

from hprlp import (LpProblem, SolveStatus, SolverConfig,
                   generate_known_solution_lp, halpern_padmm_trace,
                   hpr_no_prox_trace, max_trace_gap, solve_equality_exact,
                   solve_normal_equations)
from hprlp.core import Iterate, ProblemData, SolverState, Variant, iterate_once
from hprlp.exact import (DenseCholesky, RankDeficiencyError, hpr_exact_iterate,
                         sigma_update_exact)
from hprlp.sparse import SparseMatrix
from test_driver import residual_with


def equality_instance(seed, m1=3, n=7, density=0.8):
    prob, pt = generate_known_solution_lp(seed, m1=m1, m2=0, n=n,
                                          density=density)
    return prob, pt


class TestNormalEquations:
    def test_identity(self):
        chol = DenseCholesky.from_matrix(SparseMatrix.from_dense(np.eye(3)))
        rhs = np.array([1.0, 2.0, 3.0])
        assert np.allclose(solve_normal_equations(chol, rhs), rhs)

    def test_row_vector(self):
        chol = DenseCholesky.from_matrix(SparseMatrix.from_dense([[1.0, 1.0]]))
        assert solve_normal_equations(chol, np.array([4.0]))[0] == pytest.approx(2.0)

    def test_random_full_rank(self):
        rng = np.random.default_rng(0)
        dense = rng.normal(size=(5, 9))
        a = SparseMatrix.from_dense(dense)
        chol = DenseCholesky.from_matrix(a)
        rhs = rng.normal(size=5)
        y = solve_normal_equations(chol, rhs)
        aat = dense @ dense.T
        assert np.linalg.norm(aat @ y - rhs) <= 1e-10 * np.linalg.norm(rhs)
        oracle = np.linalg.solve(aat, rhs)
        assert np.allclose(y, oracle, rtol=1e-10, atol=1e-12)

    def test_rank_deficiency_error(self):
        dense = np.array([[1.0, 0.0], [1.0, 0.0]])   # duplicated row
        with pytest.raises(RankDeficiencyError, match="lambda-proximal"):
            DenseCholesky.from_matrix(SparseMatrix.from_dense(dense))

    def test_row_cap(self):
        with pytest.raises(ValueError, match="limit"):
            DenseCholesky.from_matrix(SparseMatrix.from_dense(np.eye(3)),
                                      row_limit=2)


class TestExactIterate:
    def test_one_d_matches_lambda_path(self):
        # A = (1): lambda_1(AA*) = 1, so the proximal weight vanishes and
        # the two paths must coincide step for step.
        p = LpProblem.from_dense([[1.0]], [1.0], None, None, [1.0])
        data = ProblemData.from_problem(p)
        chol = DenseCholesky.from_matrix(data.a)
        st_exact = SolverState.origin(data, sigma=1.0, lam=0.0)
        st_general = SolverState.origin(data, sigma=1.0, lam=1.0)
        for _ in range(30):
            hpr_exact_iterate(st_exact, data, chol)
            iterate_once(st_general, data)
            assert np.max(np.abs(st_exact.current.y - st_general.current.y)) <= 1e-12
            assert np.max(np.abs(st_exact.current.x - st_general.current.x)) <= 1e-12

    def test_scaled_identity_matches_lambda_path(self):
        # A = 2I: AA* = 4I, lambda = 4 makes the proximal weight zero.
        p = LpProblem.from_dense(2.0 * np.eye(2), [2.0, 4.0], None, None,
                                 [1.0, 1.0])
        data = ProblemData.from_problem(p)
        chol = DenseCholesky.from_matrix(data.a)
        st_exact = SolverState.origin(data, sigma=0.7, lam=0.0)
        st_general = SolverState.origin(data, sigma=0.7, lam=4.0)
        for _ in range(25):
            hpr_exact_iterate(st_exact, data, chol)
            iterate_once(st_general, data)
        assert np.max(np.abs(st_exact.current.y - st_general.current.y)) <= 1e-12
        assert np.max(np.abs(st_exact.current.x - st_general.current.x)) <= 1e-12

    def test_rejects_inequality_block(self):
        prob, _ = generate_known_solution_lp(2, m1=2, m2=1, n=6, density=0.8)
        data = ProblemData.from_problem(prob)
        with pytest.raises(ValueError):
            hpr_exact_iterate(SolverState.origin(data, 1.0, 0.0), data, None)

    def test_sigma_formula(self):
        a = SparseMatrix.from_dense(np.eye(2))
        anchor = Iterate(np.zeros(2), np.zeros(2))
        bar = Iterate(np.array([1.5, 0.0]), np.array([3.0, 0.0]))
        sig = sigma_update_exact(bar, anchor, a, residual_with(1.0, 1.0))
        assert sig == pytest.approx(2.0)   # 3 / |A'(1.5, 0)| = 3 / 1.5

    def test_equality_solve_to_tight_tolerance(self):
        for seed in range(3):
            prob, pt = equality_instance(50 + seed, m1=3, n=8)
            rep = solve_equality_exact(prob, SolverConfig(tolerance=1e-10))
            assert rep.status is SolveStatus.OPTIMAL
            assert rep.kkt.primal_infeas_rel <= 1e-10
            assert rep.kkt.dual_infeas_rel <= 1e-10
            assert rep.kkt.gap_rel <= 1e-10
            oracle_obj = float(prob.c @ pt.x)
            assert rep.primal_objective == pytest.approx(oracle_obj, rel=1e-8,
                                                         abs=1e-8)


class TestTraceEquivalence:
    def test_one_d_twenty_iterations(self):
        p = LpProblem.from_dense([[1.0]], [1.0], None, None, [1.0])
        assert max_trace_gap(p, sigma=1.0, iters=20) <= 1e-10

    def test_first_step_identities(self):
        prob, _ = equality_instance(7, m1=3, n=7)
        direct = hpr_no_prox_trace(prob, sigma=0.9, iters=2)
        averaged = halpern_padmm_trace(prob, sigma=0.9, iters=2)
        assert np.array_equal(direct.z[0], averaged.z[0])
        assert np.array_equal(direct.x_half[0], averaged.x[0])
        assert np.array_equal(direct.y[0], averaged.y[0])
        # the first shifted multiplier collapses onto the first half-step
        assert np.max(np.abs(direct.x_tilde[0] - direct.x_half[0])) <= 1e-12

    def test_random_instance_fifty_iterations(self):
        prob, _ = equality_instance(11, m1=3, n=6)
        assert max_trace_gap(prob, sigma=0.37, iters=50) <= 1e-10

    @pytest.mark.parametrize("sigma", [0.25, 1.0, 3.5])
    def test_multiple_penalties(self, sigma):
        prob, _ = equality_instance(13, m1=2, n=5)
        assert max_trace_gap(prob, sigma=sigma, iters=40) <= 1e-10

    def test_nonzero_start(self):
        prob, _ = equality_instance(17, m1=2, n=6)
        rng = np.random.default_rng(3)
        y0 = rng.normal(size=2)
        x0 = rng.normal(size=6)
        direct = hpr_no_prox_trace(prob, 0.8, 30, y0=y0, x0=x0)
        averaged = halpern_padmm_trace(prob, 0.8, 30, y0=y0, x0=x0)
        for k in range(30):
            assert np.max(np.abs(direct.y[k] - averaged.y[k])) <= 1e-10
            assert np.max(np.abs(direct.z[k] - averaged.z[k])) <= 1e-10
            assert np.max(np.abs(direct.x_half[k] - averaged.x[k])) <= 1e-10
