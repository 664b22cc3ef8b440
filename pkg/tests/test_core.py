import numpy as np
import pytest

from conftest import bounded_tiny_lp
from hprlp import generate_known_solution_lp, kkt_residual
from hprlp.core import (Iterate, NumericalBreakdownError, ProblemData,
                        SolverState, Variant, compute_merit, compute_z_bar,
                        half_step, iterate_once, m_norm_diff)
from hprlp.problem import LpProblem, PrimalDualPoint


def one_d_data():
    p = LpProblem.from_dense([[1.0]], [1.0], None, None, [1.0])
    return p, ProblemData.from_problem(p)


class TestZBar:
    def test_one_d_from_origin(self):
        _, data = one_d_data()
        st = SolverState.origin(data, sigma=1.0, lam=1.0)
        # v = 0 + 1*(0 - 1) = -1, clipped to 0, so z = 1
        assert compute_z_bar(st, data).tolist() == [1.0]

    def test_interior_gives_zero(self):
        p = LpProblem.from_dense([[1.0]], [1.0], None, None, [1.0],
                                 lower=[-10.0], upper=[10.0])
        data = ProblemData.from_problem(p)
        st = SolverState.origin(data, sigma=1.0, lam=1.0)
        st.current = Iterate(np.array([1.0]), np.array([2.0]))   # A'y = c
        assert compute_z_bar(st, data).tolist() == [0.0]

    def test_sigma_scales_inversely(self):
        _, data = one_d_data()
        st1 = SolverState.origin(data, sigma=1.0, lam=1.0)
        z1 = compute_z_bar(st1, data)[0]
        st2 = SolverState.origin(data, sigma=2.0, lam=1.0)
        st2.current = Iterate(np.array([0.0]), np.array([-1.0]))
        # v = -1 + 2*(0-1) = -3 below the box; z = (0 - v)/sigma = 1.5
        assert compute_z_bar(st2, data)[0] == pytest.approx(1.5)
        assert z1 == pytest.approx(1.0)


class TestIterateOnce:
    def test_one_d_hand_trace(self):
        _, data = one_d_data()
        st = SolverState.origin(data, sigma=1.0, lam=1.0, variant=Variant.HPR)
        xb, yb = iterate_once(st, data)
        assert (xb[0], yb[0]) == (0.0, 1.0)
        assert (st.current.y[0], st.current.x[0]) == (1.0, 0.0)
        iterate_once(st, data)
        xb, yb = iterate_once(st, data)
        # third half-step lands on the optimum
        assert (xb[0], yb[0]) == (1.0, 1.0)

    def test_dr_never_averages(self):
        _, data = one_d_data()
        st = SolverState.origin(data, sigma=1.0, lam=1.0, variant=Variant.DR)
        for _ in range(5):
            xb, yb = iterate_once(st, data)
            assert st.current.y[0] == yb[0]
            assert st.current.x[0] == xb[0]

    def test_counters(self):
        _, data = one_d_data()
        st = SolverState.origin(data, sigma=1.0, lam=1.0)
        for _ in range(7):
            iterate_once(st, data)
        assert st.t == 7 and st.k == 7

    def test_hdr_and_hpr_differ_generically(self):
        prob = bounded_tiny_lp(3, n=5, m1=1, m2=2)
        data = ProblemData.from_problem(prob)
        a = SolverState.origin(data, sigma=1.0, lam=50.0, variant=Variant.HDR)
        b = SolverState.origin(data, sigma=1.0, lam=50.0, variant=Variant.HPR)
        iterate_once(a, data)
        iterate_once(b, data)
        assert not np.array_equal(a.current.y, b.current.y) \
            or not np.array_equal(a.current.x, b.current.x)

    def test_kkt_point_with_anchor_is_fixed(self):
        for seed in range(4):
            prob, pt = generate_known_solution_lp(seed, m1=2, m2=2, n=6,
                                                  density=0.6)
            data = ProblemData.from_problem(prob)
            lam = 1.001 * float(np.linalg.eigvalsh(
                data.a.to_dense() @ data.a.to_dense().T).max())
            st = SolverState.origin(data, sigma=0.7, lam=lam)
            st.current = Iterate(pt.y.copy(), pt.x.copy())
            st.anchor = Iterate(pt.y.copy(), pt.x.copy())
            xb, yb = iterate_once(st, data)
            assert np.max(np.abs(st.current.y - pt.y)) <= 1e-12
            assert np.max(np.abs(st.current.x - pt.x)) <= 1e-12
            zb = compute_z_bar(st, data)
            res = kkt_residual(prob, PrimalDualPoint(y=yb, z=zb, x=xb))
            assert res.residual_vector_norm <= 1e-10

    def test_breakdown_raises_with_index(self):
        p = LpProblem.from_dense([[1.0]], [1.0], None, None, [1e300],
                                 lower=[-np.inf], upper=[np.inf])
        data = ProblemData.from_problem(p)
        st = SolverState.origin(data, sigma=1e8, lam=1e-8)
        with np.errstate(over="ignore"), pytest.raises(NumericalBreakdownError) as exc:
            for _ in range(50):
                iterate_once(st, data)
        assert exc.value.iteration >= 0


class TestHalfStepDomains:
    def test_bar_point_in_box_and_cone_exactly(self):
        rng = np.random.default_rng(11)
        for seed in range(6):
            prob = bounded_tiny_lp(40 + seed, n=6, m1=1, m2=3)
            data = ProblemData.from_problem(prob)
            st = SolverState.origin(data, sigma=0.5, lam=30.0)
            st.current = Iterate(rng.normal(size=data.m) * 5,
                                 rng.normal(size=data.n) * 5)
            xb, yb, zb = half_step(st, data)
            assert np.all(xb >= prob.lower) and np.all(xb <= prob.upper)
            assert np.all(yb[data.m1:] >= 0.0)


class TestMerit:
    def test_zero_difference(self):
        _, data = one_d_data()
        w = Iterate(np.array([1.0]), np.array([2.0]))
        assert compute_merit(w, w, 1.0, 1.0, data.a) == 0.0

    def test_one_d_value(self):
        _, data = one_d_data()
        w0 = Iterate(np.array([0.0]), np.array([0.0]))
        what = Iterate(np.array([2.0]), np.array([0.0]))
        assert compute_merit(w0, what, 1.0, 1.0, data.a) == pytest.approx(2.0)

    def test_reflection_identity(self):
        rng = np.random.default_rng(5)
        prob = bounded_tiny_lp(7, n=5, m1=2, m2=2)
        data = ProblemData.from_problem(prob)
        for _ in range(5):
            w = Iterate(rng.normal(size=4), rng.normal(size=5))
            wb = Iterate(rng.normal(size=4), rng.normal(size=5))
            what = Iterate(2.0 * wb.y - w.y, 2.0 * wb.x - w.x)
            lam = 60.0
            assert compute_merit(w, what, 0.8, lam, data.a) == pytest.approx(
                2.0 * compute_merit(w, wb, 0.8, lam, data.a), rel=1e-12)

    def test_two_evaluation_orders_agree(self):
        # the stable form must match the direct quadratic form
        rng = np.random.default_rng(9)
        prob = bounded_tiny_lp(8, n=6, m1=2, m2=2)
        data = ProblemData.from_problem(prob)
        dense = data.a.to_dense()
        lam = 1.001 * float(np.linalg.eigvalsh(dense @ dense.T).max())
        for _ in range(10):
            dy = rng.normal(size=4)
            dx = rng.normal(size=6)
            sigma = float(rng.uniform(0.2, 3.0))
            direct = (sigma * lam * dy @ dy + 2.0 * (dense.T @ dy) @ dx
                      + dx @ dx / sigma)
            got = m_norm_diff(dy, dx, sigma, data.a, lam)
            assert got == pytest.approx(np.sqrt(max(direct, 0.0)), rel=1e-10)

    def test_negative_form_warns(self):
        _, data = one_d_data()
        with pytest.warns(RuntimeWarning):
            # lam far below lambda_1(AA*) = 1 drives the form negative once
            # the shifted term cancels (dx = -sigma * A'dy)
            m_norm_diff(np.array([1.0]), np.array([-1.0]), 1.0, data.a, 0.1)


class TestZIndependence:
    def test_materializing_z_does_not_change_trajectory(self):
        prob = bounded_tiny_lp(13, n=6, m1=2, m2=2)
        data = ProblemData.from_problem(prob)
        a = SolverState.origin(data, sigma=1.0, lam=40.0)
        b = SolverState.origin(data, sigma=1.0, lam=40.0)
        for _ in range(50):
            iterate_once(a, data)
            compute_z_bar(b, data)   # extra reconstruction must be pure
            iterate_once(b, data)
        assert np.array_equal(a.current.y, b.current.y)
        assert np.array_equal(a.current.x, b.current.x)
