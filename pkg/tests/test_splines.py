import numpy as np
import pytest

from condcharts import (
    DomainError,
    KnotSpec,
    basis_dimension,
    basis_eval,
    basis_matrix,
    greville_abscissae,
    spline_value,
)

CUBIC = KnotSpec((0.5, 1.0, 1.5), 4, 0.0, 2.0)


class TestKnotSpec:
    def test_rejects_unsorted_interior(self):
        with pytest.raises(ValueError):
            KnotSpec((1.0, 0.5), 4, 0.0, 2.0)

    def test_rejects_interior_on_boundary(self):
        with pytest.raises(ValueError):
            KnotSpec((0.0, 1.0), 4, 0.0, 2.0)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            KnotSpec((), 0, 0.0, 1.0)

    def test_from_times_pads_domain(self):
        spec = KnotSpec.from_times([0.2, 1.7], (0.5,))
        assert spec.t_lower < 0.2 and spec.t_upper > 1.7
        assert spec.contains(np.array([0.2, 1.7]))


class TestDimension:
    def test_cubic_three_interior(self):
        assert basis_dimension(CUBIC) == 7

    def test_cubic_no_interior(self):
        assert basis_dimension(KnotSpec((), 4, 0.0, 1.0)) == 4

    def test_order_one_single_knot(self):
        assert basis_dimension(KnotSpec((0.5,), 1, 0.0, 1.0)) == 2


class TestBasisEval:
    def test_order_one_is_indicator(self):
        spec = KnotSpec((0.5,), 1, 0.0, 1.0)
        assert np.array_equal(basis_eval(spec, 0.25), [1.0, 0.0])

    def test_right_continuous_at_interior_knot(self):
        spec = KnotSpec((0.5,), 1, 0.0, 1.0)
        assert np.array_equal(basis_eval(spec, 0.5), [0.0, 1.0])

    def test_top_endpoint_closed(self):
        spec = KnotSpec((0.5,), 1, 0.0, 1.0)
        assert np.array_equal(basis_eval(spec, 1.0), [0.0, 1.0])

    def test_clamped_lower_endpoint_interpolates(self):
        vec = basis_eval(CUBIC, 0.0)
        assert np.allclose(vec, [1, 0, 0, 0, 0, 0, 0], atol=1e-14)

    def test_partition_of_unity(self):
        ts = np.linspace(0.0, 2.0, 1000)
        sums = basis_matrix(CUBIC, ts).sum(axis=1)
        assert np.max(np.abs(sums - 1.0)) < 1e-12

    def test_entries_nonnegative_and_local(self):
        ts = np.linspace(0.0, 2.0, 400)
        B = basis_matrix(CUBIC, ts)
        assert np.all(B >= -1e-15)
        assert np.max((np.abs(B) > 1e-13).sum(axis=1)) <= CUBIC.order

    def test_local_support_spans(self):
        knots = CUBIC.knot_vector
        ts = np.linspace(0.0, 2.0, 500)
        B = basis_matrix(CUBIC, ts)
        for i in range(basis_dimension(CUBIC)):
            outside = (ts < knots[i] - 1e-12) | (ts > knots[i + CUBIC.order] + 1e-12)
            assert np.all(np.abs(B[outside, i]) < 1e-14)

    def test_domain_error_below_and_above(self):
        with pytest.raises(DomainError):
            basis_eval(CUBIC, -0.01)
        with pytest.raises(DomainError):
            basis_eval(CUBIC, 2.01)


class TestSplineValue:
    def test_constant_coefficients_give_constant(self, rng):
        coef = np.full(7, 3.25)
        ts = rng.uniform(0, 2, 50)
        assert np.max(np.abs(spline_value(CUBIC, coef, ts) - 3.25)) < 1e-12

    def test_zero_coefficients_give_zero(self):
        assert spline_value(CUBIC, np.zeros(7), 1.234) == 0.0

    def test_matches_direct_summation(self, rng):
        # independent oracle: explicit sum over basis entries
        coef = rng.normal(size=7)
        for t in rng.uniform(0, 2, 100):
            direct = float(np.dot(basis_eval(CUBIC, t), coef))
            assert abs(spline_value(CUBIC, coef, float(t)) - direct) < 1e-12

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            spline_value(CUBIC, np.zeros(6), 1.0)


class TestReproduction:
    def test_cubic_polynomial_reproduced_via_greville(self, rng):
        # coefficients from interpolation at Greville sites must
        # reproduce any cubic polynomial on the whole domain
        poly = np.polynomial.Polynomial(rng.normal(size=4))
        sites = greville_abscissae(CUBIC)
        collocation = basis_matrix(CUBIC, sites)
        coef = np.linalg.solve(collocation, poly(sites))
        ts = np.linspace(0.0, 2.0, 300)
        err = np.abs(spline_value(CUBIC, coef, ts) - poly(ts))
        assert err.max() < 1e-9

    def test_second_derivative_continuous_at_simple_knots(self, rng):
        coef = rng.normal(size=7)
        h = 1e-5

        def second(t):
            vals = spline_value(CUBIC, coef, np.array([t - h, t, t + h]))
            return (vals[0] - 2 * vals[1] + vals[2]) / h**2

        # central differences are exact for cubics, so one-sided limits
        # at a knot come from stencils just inside each piece; a C2
        # break would show up as an O(1) fraction of the curvature scale
        scale = max(abs(second(t))
                    for t in np.linspace(0.01, 1.99, 99)) + 1.0
        for knot in CUBIC.interior_knots:
            left = second(knot - h)
            right = second(knot + h)
            assert abs(left - right) / scale < 1e-4


class TestScipyAgreement:
    def test_matches_scipy_bspline(self, rng):
        from scipy.interpolate import BSpline

        for _ in range(10):
            interior = tuple(np.sort(rng.uniform(0.2, 1.8, 3)))
            spec = KnotSpec(interior, 4, 0.0, 2.0)
            coef = rng.normal(size=basis_dimension(spec))
            f = BSpline(spec.knot_vector, coef, spec.order - 1)
            ts = rng.uniform(0.0, 2.0, 40)
            assert np.max(np.abs(spline_value(spec, coef, ts) - f(ts))) < 1e-10
