import numpy as np
import pytest

from conftest import bounded_tiny_lp
from hprlp import (LpProblem, SolveStatus, SolverConfig,
                   generate_known_solution_lp, kkt_residual, solve,
                   vertex_enumeration_solve)
from hprlp.oracle import (OracleBudgetError, OracleSolution,
                          check_complexity_bound)


def as_oracle(prob, pt):
    return OracleSolution(x_star=pt.x, y_star=pt.y, z_star=pt.z,
                          value=float(prob.c @ pt.x) + prob.objective_constant,
                          source="Construction")


class TestVertexEnumeration:
    def test_box_corner(self):
        # min x1 + 2 x2  s.t.  x1 + x2 >= 1, 0 <= x <= 1
        p = LpProblem.from_dense(None, None, [[1.0, 1.0]], [1.0],
                                 [1.0, 2.0], [0.0, 0.0], [1.0, 1.0])
        sol = vertex_enumeration_solve(p)
        assert sol.value == pytest.approx(1.0)
        assert np.allclose(sol.x_star, [1.0, 0.0])

    def test_equality_simplex(self):
        p = LpProblem.from_dense([[1.0, 1.0]], [1.0], None, None, [1.0, 1.0])
        assert vertex_enumeration_solve(p).value == pytest.approx(1.0)

    def test_self_consistency(self):
        for seed in range(10):
            prob = bounded_tiny_lp(seed, n=4, m1=1, m2=2)
            sol = vertex_enumeration_solve(prob)
            res = kkt_residual(prob, sol.as_point())
            assert res.residual_vector_norm <= 1e-9

    def test_matches_solver(self):
        for seed in range(8):
            prob = bounded_tiny_lp(100 + seed, n=4, m1=1, m2=2)
            sol = vertex_enumeration_solve(prob)
            rep = solve(prob, SolverConfig(tolerance=1e-8))
            assert rep.status is SolveStatus.OPTIMAL
            denom = max(1.0, abs(sol.value))
            assert abs(rep.primal_objective - sol.value) / denom <= 1e-6

    def test_budget_error(self):
        prob, _ = generate_known_solution_lp(0, m1=2, m2=1, n=14, density=0.5)
        with pytest.raises(OracleBudgetError):
            vertex_enumeration_solve(prob)

    def test_unbounded_instance_rejected(self):
        from hprlp.oracle import OracleFailure
        # min -x s.t. x >= 1: unbounded above; the only vertex has a
        # sign-infeasible multiplier
        p = LpProblem.from_dense(None, None, [[1.0]], [1.0], [-1.0])
        with pytest.raises(OracleFailure):
            vertex_enumeration_solve(p)


class TestComplexityBounds:
    def test_one_d_thousand_iterations(self, one_d_problem):
        star = OracleSolution(x_star=np.array([1.0]), y_star=np.array([1.0]),
                              z_star=np.array([0.0]), value=1.0,
                              source="Construction")
        rep = check_complexity_bound(one_d_problem, star, iters=1000)
        assert rep.max_fixed_point_ratio <= 1.0 + 1e-6
        assert rep.max_kkt_ratio <= 1.0 + 1e-6
        assert rep.objective_within_bounds

    def test_start_at_solution_gives_zero_ratios(self):
        # min 0 s.t. x = 0, x >= 0: the optimum is the starting origin
        prob = LpProblem.from_dense([[1.0]], [0.0], None, None, [0.0])
        star = OracleSolution(x_star=np.zeros(1), y_star=np.zeros(1),
                              z_star=np.zeros(1), value=0.0,
                              source="Construction")
        rep = check_complexity_bound(prob, star, iters=5)
        assert rep.max_fixed_point_ratio == 0.0
        assert rep.max_kkt_ratio == 0.0

    def test_sigma_variation(self):
        prob, pt = generate_known_solution_lp(5, m1=2, m2=2, n=6, density=0.6)
        star = as_oracle(prob, pt)
        for sigma in (0.5, 1.0, 2.0):
            rep = check_complexity_bound(prob, star, iters=400, sigma=sigma)
            assert rep.max_fixed_point_ratio <= 1.0 + 1e-6
            assert rep.max_kkt_ratio <= 1.0 + 1e-6
            assert rep.objective_within_bounds
