import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ctlp.coeff import (
    CLPInstance,
    PiecewiseFn1D,
    PiecewiseFn2D,
    Poly2Piece,
    PolyPiece,
    SampledPiece,
    Sampled2Piece,
    SeparablePiece,
    TableFunction,
    detect_sigma,
    eval1d,
    global_bounds,
    inf_on_interval,
    inf_on_rectangle,
    integrate_1d,
    integrate_2d_in_s,
    poly_min,
    sign_change_roots,
    sup_on_interval,
    sup_on_rectangle,
)
from ctlp.errors import CertificationError, DataError, DomainError, StructuralError

from conftest import scalar_instance, step1d

coeff_lists = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=9)


def poly_fn(coeffs, T=1.0):
    return PiecewiseFn1D.poly(T, coeffs)


def grid_min(f, lo, hi, step=1e-5):
    ts = np.arange(lo, hi + step / 2, step)
    return float(np.min(f(ts)))


class TestEval:
    def test_polynomial(self):
        assert eval1d(poly_fn([0, 0, 1]), 0.5) == pytest.approx(0.25)

    def test_right_limit_at_breakpoint(self):
        f = step1d([0, 0.5, 1], [1, 2])
        assert eval1d(f, 0.5) == 2.0
        assert eval1d(f, 0.4999) == 1.0

    def test_left_limit_at_horizon(self):
        f = step1d([0, 0.5, 1], [1, 2])
        assert eval1d(f, 1.0) == 2.0

    def test_sampled_passthrough(self):
        table = TableFunction.from_rows([[0, 0.3], [0.5, 1.0], [1, 0.0]])
        f = PiecewiseFn1D((0.0, 1.0), (SampledPiece(table, 2.0, 1e-3),))
        assert eval1d(f, 0.0) == pytest.approx(0.3)

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            eval1d(poly_fn([1]), 1.5)
        with pytest.raises(DomainError):
            eval1d(poly_fn([1]), -0.1)

    def test_vectorized_matches_scalar(self):
        f = PiecewiseFn1D((0, 0.3, 1), (PolyPiece((1, 2)), PolyPiece((0, 0, 3))))
        ts = np.linspace(0, 1, 23)
        assert_allclose(f(ts), [eval1d(f, t) for t in ts])


class TestIntervalExtrema:
    def test_affine(self):
        f = poly_fn([0, 1])
        assert inf_on_interval(f, 0, 1) == 0.0
        assert sup_on_interval(f, 0, 1) == 1.0

    def test_quadratic_against_grid(self):
        f = poly_fn([0, -1, 1])
        assert inf_on_interval(f, 0, 1) == pytest.approx(-0.25, abs=1e-12)
        assert inf_on_interval(f, 0, 1) == pytest.approx(grid_min(f, 0, 1), abs=1e-9)

    def test_constant(self):
        f = poly_fn([7])
        assert inf_on_interval(f, 0.2, 0.7) == 7.0
        assert sup_on_interval(f, 0.2, 0.7) == 7.0

    def test_straddling_breakpoint(self):
        f = step1d([0, 0.5, 1], [1, 2])
        with pytest.raises(StructuralError):
            inf_on_interval(f, 0.4, 0.6)

    def test_interval_ending_on_breakpoint(self):
        f = step1d([0, 0.5, 1], [1, 2])
        assert inf_on_interval(f, 0.25, 0.5) == 1.0
        assert inf_on_interval(f, 0.5, 0.75) == 2.0

    def test_degree_eight(self):
        # (t - 0.3)^2 (t - 0.7)^2 (t - 0.5)^4 has minimum 0 at three interior points
        c = np.polynomial.polynomial.polyfromroots([0.3, 0.3, 0.7, 0.7, 0.5, 0.5, 0.5, 0.5])
        f = poly_fn(c)
        assert inf_on_interval(f, 0, 1) == pytest.approx(0.0, abs=1e-14)
        assert sup_on_interval(f, 0, 1) == pytest.approx(float(f(0.0)), rel=1e-12)

    def test_degree_limit(self):
        with pytest.raises(DataError):
            PolyPiece(tuple(range(10)))

    def test_sign_change_roots(self):
        roots = sign_change_roots([-0.06, 0.5, -1.0], 0, 1)  # -(t - 0.2)(t - 0.3)
        assert_allclose(sorted(roots), [0.2, 0.3], atol=1e-11)

    def test_sampled_within_delta(self):
        f = lambda t: np.sin(7 * t)
        delta = 1e-3
        g = PiecewiseFn1D((0.0, 1.0), (SampledPiece(f, 7.0, delta),))
        truth = -1.0  # sin(7t) reaches -1 at t = 3 pi / 14
        lo = inf_on_interval(g, 0, 1)
        assert lo <= truth + 1e-12
        assert truth - lo <= delta

    @given(coeffs=coeff_lists, a=st.floats(0, 1), b=st.floats(0, 1))
    @settings(max_examples=200, deadline=None)
    def test_inf_eval_sup(self, coeffs, a, b):
        lo, hi = min(a, b), max(a, b)
        f = poly_fn(coeffs)
        ts = np.linspace(lo, hi, 41)
        vals = f(ts)
        scale = 1.0 + np.abs(vals).max()
        assert inf_on_interval(f, lo, hi) <= vals.min() + 1e-10 * scale
        assert sup_on_interval(f, lo, hi) >= vals.max() - 1e-10 * scale

    @given(coeffs=coeff_lists)
    @settings(max_examples=100, deadline=None)
    def test_inf_of_negation(self, coeffs):
        f, g = poly_fn(coeffs), poly_fn([-x for x in coeffs])
        assert inf_on_interval(g, 0.1, 0.9) == pytest.approx(-sup_on_interval(f, 0.1, 0.9), abs=1e-12)

    @given(coeffs=coeff_lists)
    @settings(max_examples=60, deadline=None)
    def test_poly_min_against_grid(self, coeffs):
        f = poly_fn(coeffs)
        m = poly_min(coeffs, 0.0, 1.0)
        g = grid_min(f, 0.0, 1.0, 1e-4)
        # the grid can only overestimate the minimum, by at most step * max|f'|
        slope = np.abs(np.polynomial.polynomial.polyval(np.linspace(0, 1, 101), np.polynomial.polynomial.polyder(coeffs) if len(coeffs) > 1 else [0])).max()
        assert m <= g + 1e-10
        assert g - m <= 1e-4 * (slope + 1) + 1e-10


def grid_min2(K, t_lo, t_hi, s_lo, s_hi, n=401):
    tt, ss = np.meshgrid(np.linspace(t_lo, t_hi, n), np.linspace(s_lo, s_hi, n), indexing="ij")
    return float(K(tt, ss).min())


class TestRectangleExtrema:
    def test_product(self):
        K = PiecewiseFn2D((0.0, 1.0), ((Poly2Piece(((0, 0), (0, 1))),),))
        assert inf_on_rectangle(K, (0, 1), (0, 1)) == 0.0
        assert sup_on_rectangle(K, (0, 1), (0, 1)) == 1.0

    def test_interior_critical_point(self):
        # (t - 0.5)^2 + (s - 0.5)^2
        K = PiecewiseFn2D((0.0, 1.0), ((Poly2Piece(((0.5, -1, 1), (-1, 0, 0), (1, 0, 0))),),))
        assert inf_on_rectangle(K, (0, 1), (0, 1)) == pytest.approx(0.0, abs=1e-14)
        assert sup_on_rectangle(K, (0, 1), (0, 1)) == pytest.approx(0.5)

    def test_constant(self):
        K = PiecewiseFn2D.constant(1.0, 1.0)
        assert inf_on_rectangle(K, (0, 0.5), (0.5, 1)) == 1.0

    def test_saddle(self):
        # t^2 - s^2 + t s: minimum on the boundary
        K = PiecewiseFn2D((0.0, 1.0), ((Poly2Piece(((0, 0, -1), (0, 1, 0), (1, 0, 0))),),))
        assert inf_on_rectangle(K, (0, 1), (0, 1)) == pytest.approx(grid_min2(K, 0, 1, 0, 1), abs=1e-12)

    def test_separable(self):
        K = PiecewiseFn2D((0.0, 1.0), ((SeparablePiece(PolyPiece((0, -1, 1)), PolyPiece((1, 1))),),))
        assert inf_on_rectangle(K, (0, 1), (0, 1)) == pytest.approx(-0.5)
        assert sup_on_rectangle(K, (0, 1), (0, 1)) == pytest.approx(0.0)

    def test_sampled2_within_delta(self):
        K = PiecewiseFn2D((0.0, 1.0), ((Sampled2Piece(lambda t, s: np.cos(3 * t) * s, 3.0, 1e-2),),))
        truth = math.cos(3.0)
        lo = inf_on_rectangle(K, (0, 1), (0, 1))
        assert truth - 1e-2 <= lo <= truth + 1e-12

    def test_straddling(self):
        K = PiecewiseFn2D((0, 0.5, 1), tuple(tuple(Poly2Piece(((1.0,),)) for _ in range(2)) for _ in range(2)))
        with pytest.raises(StructuralError):
            inf_on_rectangle(K, (0.4, 0.6), (0, 0.5))

    @given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=9, max_size=9), st.floats(0, 0.5), st.floats(0, 0.5))
    @settings(max_examples=80, deadline=None)
    def test_poly2_against_grid(self, coeffs, t0, s0):
        C = np.array(coeffs).reshape(3, 3)
        K = PiecewiseFn2D((0.0, 1.0), ((Poly2Piece(tuple(map(tuple, C))),),))
        t1, s1 = t0 + 0.5, s0 + 0.5
        m = inf_on_rectangle(K, (t0, t1), (s0, s1))
        g = grid_min2(K, t0, t1, s0, s1, 201)
        assert m <= g + 1e-9
        # Lipschitz constant of K on [0, 1]^2 is at most 4 * sum|C|
        assert g - m <= 4 * np.abs(C).sum() * 0.5 / 200 + 1e-9


class TestIntegration:
    def test_antiderivative(self):
        assert integrate_1d(poly_fn([0, 1]), 0, 1) == pytest.approx(0.5)

    def test_kernel_in_s(self):
        K = PiecewiseFn2D.constant(1.0, 1.0)
        assert integrate_2d_in_s(K, 0.3, 0, 1) == pytest.approx(1.0)

    def test_piecewise(self):
        assert integrate_1d(step1d([0, 0.5, 1], [1, 3]), 0, 1) == pytest.approx(2.0)

    def test_kernel_split_at_breakpoints(self):
        K = PiecewiseFn2D((0, 0.5, 1), ((Poly2Piece(((1.0,),)), Poly2Piece(((2.0,),))), (Poly2Piece(((3.0,),)), Poly2Piece(((4.0,),)))))
        assert integrate_2d_in_s(K, 0.25, 0, 1) == pytest.approx(0.5 * 1 + 0.5 * 2)
        assert_allclose(K.integrate_in_t(np.array([0.25, 0.75]), 0.25, 0.75), [0.25 * 1 + 0.25 * 3, 0.25 * 2 + 0.25 * 4])

    def test_sampled_simpson(self):
        f = PiecewiseFn1D((0.0, 1.0), (SampledPiece(np.exp, math.e, 1e-4),))
        val = integrate_1d(f, 0, 1)
        assert abs(val - (math.e - 1)) <= f.integration_error(0, 1)
        assert abs(val - (math.e - 1)) < 1e-10

    @given(coeffs=coeff_lists, x=st.floats(0, 1), y=st.floats(0, 1))
    @settings(max_examples=100, deadline=None)
    def test_additive(self, coeffs, x, y):
        f = PiecewiseFn1D((0, 0.4, 1), (PolyPiece(tuple(coeffs)), PolyPiece(tuple(reversed(coeffs)))))
        m = min(x, y)
        whole = integrate_1d(f, 0, 1)
        assert integrate_1d(f, 0, m) + integrate_1d(f, m, 1) == pytest.approx(whole, abs=1e-12 * (1 + abs(whole)) + 1e-12)


class TestGlobalBounds:
    def test_constants(self):
        b = global_bounds(scalar_instance())
        assert (b.tau, b.zeta, b.eta, b.nu, b.phi) == (1, 1, 1, 1, 1)

    def test_absolute_value(self):
        inst = scalar_instance()
        inst = CLPInstance(1.0, 1, 1, (step1d([0, 0.5, 1], [2, -3]),), inst.c, inst.B, inst.K)
        assert global_bounds(inst).tau == 3

    def test_bilinear_kernel(self):
        K = PiecewiseFn2D((0.0, 1.0), ((Poly2Piece(((0, 0), (0, 1))),),))
        inst = scalar_instance()
        b = global_bounds(CLPInstance(1.0, 1, 1, inst.a, inst.c, inst.B, ((K,),)))
        assert b.eta == b.nu == b.phi == pytest.approx(grid_min2(lambda t, s: -K(t, s), 0, 1, 0, 1) * -1)

    def test_row_and_column_sums(self, rng):
        from ctlp.instances import random_instance

        for _ in range(10):
            inst = random_instance(rng, affine=True)
            b = global_bounds(inst)
            assert b.nu <= inst.p * b.eta
            assert b.phi <= inst.q * b.eta


class TestSigma:
    def test_identity(self):
        assert detect_sigma(((PiecewiseFn1D.constant(1.0, 1.0),),)) == 1.0

    def test_zero_then_two(self):
        # column must be nonzero somewhere on each piece; add a second row
        B = ((step1d([0, 0.5, 1], [0, 2]),), (step1d([0, 0.5, 1], [3, 0]),))
        assert detect_sigma(B) == 2.0

    def test_identity_ramp_fails(self):
        with pytest.raises(CertificationError, match="B\\[0\\]\\[0\\] piece 0"):
            detect_sigma(((poly_fn([0, 1]),),))

    def test_vanishing_column(self):
        with pytest.raises(CertificationError, match="column 0"):
            detect_sigma(((step1d([0, 0.5, 1], [0, 2]),),))

    def test_negative_entry(self):
        with pytest.raises(CertificationError, match="negative"):
            detect_sigma(((poly_fn([-1]),),))


class TestInstance:
    def test_shape_message(self):
        f = PiecewiseFn1D.constant(1.0, 1.0)
        K = PiecewiseFn2D.constant(1.0, 1.0)
        with pytest.raises(DataError, match=r"B\[0\] has 1 entries, expected q=2"):
            CLPInstance(1.0, 1, 2, (f, f), (f,), ((f,),), ((K, K),))

    def test_breakpoint_union(self):
        inst = scalar_instance()
        inst = CLPInstance(1.0, 1, 1, (step1d([0, 0.3, 1], [1, 2]),), (step1d([0, 0.6, 1], [1, 2]),), inst.B, inst.K)
        assert inst.breakpoints() == [0.0, 0.3, 0.6, 1.0]
