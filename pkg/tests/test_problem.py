import numpy as np
import pytest

from hprlp import (LpProblem, PrimalDualPoint, dual_objective,
                   generate_known_solution_lp, primal_objective,
                   project_onto_box, project_onto_dual_cone)


class TestProjectOntoBox:
    def test_clamp(self):
        out = project_onto_box(np.array([2.0, -2.0]), np.array([0.0, 0.0]),
                               np.array([1.0, np.inf]))
        assert out.tolist() == [1.0, 0.0]

    def test_interior_unchanged(self):
        v = np.array([0.3, -0.2])
        out = project_onto_box(v, np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
        assert np.array_equal(out, v)

    def test_fixed_variable(self):
        out = project_onto_box(np.array([0.5]), np.array([0.5]), np.array([0.5]))
        assert out.tolist() == [0.5]

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = 12
            lo = rng.uniform(-3, 0, n)
            up = lo + rng.uniform(0, 3, n)
            lo[rng.uniform(size=n) < 0.2] = -np.inf
            up[rng.uniform(size=n) < 0.2] = np.inf
            v = rng.normal(scale=4, size=n)
            once = project_onto_box(v, lo, up)
            assert np.array_equal(project_onto_box(once, lo, up), once)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            project_onto_box(np.zeros(2), np.zeros(3), np.zeros(3))


class TestProjectOntoDualCone:
    def test_tail_clamped(self):
        out = project_onto_dual_cone(np.array([-3.0, -3.0]), m1=1)
        assert out.tolist() == [-3.0, 0.0]

    def test_no_tail_is_identity(self):
        v = np.array([-1.0, 2.0])
        assert np.array_equal(project_onto_dual_cone(v, m1=2), v)

    def test_all_tail(self):
        out = project_onto_dual_cone(np.array([-1.0, 2.0]), m1=0)
        assert out.tolist() == [0.0, 2.0]

    def test_member_is_fixed_point(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            v = rng.normal(size=8)
            v[3:] = np.abs(v[3:])
            out = project_onto_dual_cone(v, m1=3)
            assert np.array_equal(out, v)
            assert np.all(out[3:] >= 0.0)


class TestObjectives:
    def test_primal_examples(self):
        p = LpProblem.from_dense([[1.0, 1.0]], [1.0], None, None, [1.0, 2.0])
        assert primal_objective(p, np.array([1.0, 0.0])) == 1.0
        assert primal_objective(p, np.zeros(2)) == 0.0
        p3 = LpProblem.from_dense([[1.0, 1.0]], [1.0], None, None, [1.0, 1.0],
                                  objective_constant=3.0)
        assert primal_objective(p3, np.array([0.5, 0.5])) == 4.0

    def test_dual_simple(self):
        p = LpProblem.from_dense([[1.0]], [1.0], None, None, [1.0])
        val, clamped = dual_objective(p, np.array([1.0]), np.array([0.0]))
        assert val == 1.0 and clamped == 0

    def test_dual_zero_lower_bound_contribution(self):
        p = LpProblem.from_dense([[1.0]], [0.0], None, None, [2.0])
        val, clamped = dual_objective(p, np.array([0.0]), np.array([2.0]))
        assert val == 0.0 and clamped == 0

    def test_dual_free_variable_clamped(self):
        p = LpProblem.from_dense([[1.0]], [5.0], None, None, [1.0],
                                 lower=[-np.inf], upper=[np.inf])
        val, clamped = dual_objective(p, np.array([1.0]), np.array([1.0]))
        assert val == 5.0 and clamped == 1

    def test_strong_duality_at_kkt_points(self):
        for seed in range(6):
            prob, pt = generate_known_solution_lp(seed, m1=2, m2=3, n=8,
                                                  density=0.6)
            pobj = primal_objective(prob, pt.x)
            dobj, clamped = dual_objective(prob, pt.y, pt.z)
            assert clamped == 0
            assert abs(pobj - dobj) <= 1e-12 * max(1.0, abs(pobj))


class TestLpProblemValidation:
    def test_bound_order(self):
        with pytest.raises(ValueError):
            LpProblem.from_dense([[1.0]], [1.0], None, None, [1.0],
                                 lower=[1.0], upper=[0.0])

    def test_nan_bounds(self):
        with pytest.raises(ValueError):
            LpProblem.from_dense([[1.0]], [1.0], None, None, [1.0],
                                 lower=[np.nan], upper=[1.0])

    def test_zero_matrix(self):
        with pytest.raises(ValueError):
            LpProblem.from_dense([[0.0]], [0.0], None, None, [1.0])

    def test_no_rows(self):
        with pytest.raises(ValueError):
            LpProblem.from_dense(None, None, None, None, [1.0])

    def test_point_dim_check(self):
        p = LpProblem.from_dense([[1.0, 0.0]], [1.0], None, None, [1.0, 1.0])
        with pytest.raises(ValueError):
            PrimalDualPoint(y=np.zeros(2), z=np.zeros(2), x=np.zeros(2)).check_dims(p)
