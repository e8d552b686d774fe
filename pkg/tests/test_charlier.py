import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burstmoments import charlier
from burstmoments.charlier import (CharlierExpansion, expand, norm_squared, orthonormal_psi, psi,
                                   reconstruct, sigma_by_difference, sigma_by_projection)
from burstmoments.errors import InvalidParam, UnstableSeries
from burstmoments.numerics import Growth, falling_factorial_array, poisson_expectation
from burstmoments.rates import Constant, Hill, Linear, Polynomial


def test_psi_examples():
    assert psi(0, 11, 2.5) == 1.0
    assert psi(1, 7, 3.0) == 4.0
    assert psi(2, 3, 1.0) == 1.0


def test_psi_order_limit():
    with pytest.raises(InvalidParam):
        psi(charlier.MAX_ORDER + 1, 1, 1.0)


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_orthogonality(lam):
    for n in range(9):
        for m in range(9):
            g = Growth.polynomial(n + m, 1.0, lam)
            val = poisson_expectation(lambda a: psi(n, a, lam) * psi(m, a, lam), lam, 1e-12, g)
            if n == m:
                assert val == pytest.approx(math.factorial(n) * lam**n, rel=1e-8)
            else:
                assert abs(val) <= max(1e-10, 1e-8 * math.sqrt(norm_squared(n, lam) * norm_squared(m, lam)))


@pytest.mark.parametrize("lam", [0.5, 3.0, 40.0])
def test_first_moment_identity(lam):
    for n in range(9):
        val = poisson_expectation(lambda a: psi(n, a, lam), lam, 1e-12, Growth.polynomial(n, 1.0, lam))
        expected = 1.0 if n == 0 else 0.0
        assert abs(val - expected) <= 1e-10 * max(1.0, math.sqrt(norm_squared(n, lam)))


@pytest.mark.parametrize("r", [1.0, 3.5])
def test_falling_factorial_expansion(r):
    a = np.arange(31)
    for k in range(9):
        rhs = sum(math.comb(k, n) * r ** (k - n) * psi(n, a, r) for n in range(k + 1))
        np.testing.assert_allclose(rhs, falling_factorial_array(a, k), rtol=1e-9, atol=1e-6)


def test_recurrence_matches_binomial_sum():
    a = np.arange(40)
    for r in (0.7, 4.0, 12.0):
        rows = orthonormal_psi(10, a, r)
        for n in range(11):
            np.testing.assert_allclose(rows[n] * math.sqrt(norm_squared(n, r)), psi(n, a, r),
                                       rtol=1e-9, atol=1e-9 * math.sqrt(norm_squared(n, r)))


def test_sigma_by_difference_examples():
    assert sigma_by_difference(Linear(2.5), 1, 4.0, 5).value == pytest.approx(2.5)
    assert sigma_by_difference(Constant(3.0), 0, 1.0, 6).value == 3.0
    assert sigma_by_difference(Constant(3.0), 2, 1.0, 6).value == 0.0
    square = Polynomial((0.0, 0.0, 1.0))
    assert sigma_by_difference(square, 2, 1.0, 6).value == pytest.approx(1.0)


def test_sigma_by_difference_reports_convergence():
    out = sigma_by_difference(Polynomial((1.0, 2.0)), 0, 3.0, 4)
    assert out.value == pytest.approx(7.0)
    assert out.last_term_ratio == 0.0
    assert out.terms_used == 5


def test_sigma_by_difference_flags_blowup():
    # steep Hill: forward differences alternate and grow
    with pytest.raises(UnstableSeries):
        sigma_by_difference(Hill(9, 100), 0, 100.0, 56)


def test_sigma_by_projection_examples():
    assert sigma_by_projection(Linear(1.7), 0, 3.0) == pytest.approx(1.7 * 3.0, rel=1e-12)
    assert abs(sigma_by_projection(Constant(1.0), 1, 6.0)) < 1e-12
    hill = Hill(2, 5)
    assert sigma_by_projection(hill, 0, 5.0) == pytest.approx(poisson_expectation(hill, 5.0), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=6), st.sampled_from([1.0, 5.0]))
def test_routes_agree_on_polynomials(coeffs, lam):
    rate = Polynomial(tuple(coeffs))
    d = rate.degree
    for n in range(6):
        a = sigma_by_projection(rate, n, lam)
        b = sigma_by_difference(rate, n, lam, max(n, d)).value
        assert abs(a - b) <= max(1e-8 * abs(b), 1e-10)


def test_linear_rate_has_no_higher_coefficients():
    exp = expand(Linear(0.8), 7.0, order=6, early_stop=False)
    assert exp.sigma0 == pytest.approx(5.6)
    assert exp.sigma1 == pytest.approx(0.8)
    assert all(abs(c) < 1e-10 for c in exp.coeffs[2:])


def test_reconstruct_examples():
    exp = CharlierExpansion(2.0, (6.0, 3.0))
    assert reconstruct(exp, 4) == pytest.approx(12.0)
    assert reconstruct(CharlierExpansion(1.3, (5.0,)), 9) == 5.0
    square = expand(Polynomial((0.0, 0.0, 1.0)), 1.0, order=2, early_stop=False)
    assert reconstruct(square, 3) == pytest.approx(9.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=5), st.floats(0.5, 6.0))
def test_polynomial_reconstruction(coeffs, lam):
    rate = Polynomial(tuple(coeffs))
    exp = expand(rate, lam, order=rate.degree, early_stop=False)
    a = np.arange(51)
    truth = rate(a)
    scale = np.polynomial.polynomial.polyval(a, np.abs(coeffs)) + 1.0
    assert np.all(np.abs(exp(a) - truth) <= 1e-9 * scale)


def test_expansion_fields_and_weights():
    exp = expand(Hill(2, 5), 5.0, order=8, early_stop=False)
    assert exp.order == 8 and len(exp.coeffs) == 9
    assert exp.route == charlier.POISSON_PROJECTION
    w = exp.weights
    assert w[0] == pytest.approx(exp.sigma0**2)
    assert np.all(w >= 0)


def test_parseval_sum_of_weights_is_variance_of_rate():
    hill, lam = Hill(3, 4), 4.0
    exp = expand(hill, lam, order=30, early_stop=False)
    var_r = poisson_expectation(lambda a: hill(a) ** 2, lam, growth=Growth.bounded(1.0)) - exp.sigma0**2
    assert math.fsum(exp.weights[1:]) == pytest.approx(var_r, rel=1e-9)


def test_early_stop_truncates_polynomial():
    exp = expand(Polynomial((1.0, 0.5, 0.25)), 3.0, order=20)
    assert exp.order <= 5
    assert exp.requested_order == 20


def test_expansion_rejects_bad_centre_and_route():
    with pytest.raises(InvalidParam):
        CharlierExpansion(0.0, (1.0,))
    with pytest.raises(InvalidParam):
        expand(Linear(1.0), 2.0, route="Taylor")


def test_difference_route_expansion_for_polynomial():
    rate = Polynomial((0.5, 1.0, 0.3))
    a = expand(rate, 2.0, order=3, route=charlier.FORWARD_DIFFERENCE, k_max=3)
    b = expand(rate, 2.0, order=3, early_stop=False)
    np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-9, atol=1e-12)
