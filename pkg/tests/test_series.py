import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice_edgeworth.errors import DomainError
from lattice_edgeworth.series import (
    Polynomial,
    TruncatedUSeries,
    bernoulli_numbers,
    bernoulli_polynomial,
    frac,
    hermite,
    psi,
    psi_fourier,
    series_exp,
)

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=50)
small_polys = st.lists(st.integers(-4, 4), max_size=4).map(Polynomial)


def test_polynomial_arithmetic():
    p = Polynomial([1, 2])
    q = Polynomial([0, 0, 3])
    assert (p * q).coeffs == (0, 0, 3, 6)
    assert (p - p).is_zero() and (p - p).degree == -1
    assert p.derivative() == Polynomial([2])
    assert p.shift_degree(2) == Polynomial([0, 0, 1, 2])
    assert p(Fraction(1, 2)) == 2
    np.testing.assert_allclose(q(np.array([1.0, 2.0])), [3.0, 12.0])


def test_hermite_low_orders():
    assert hermite(3) == Polynomial([0, -3, 0, 1])
    assert hermite(4) == Polynomial([3, 0, -6, 0, 1])


@pytest.mark.parametrize("r", range(1, 12))
def test_hermite_derivative_identity(r):
    assert hermite(r).derivative() == hermite(r - 1) * r


def test_hermite_orthogonality():
    x, w = np.polynomial.hermite_e.hermegauss(30)
    for r in range(6):
        for s in range(6):
            val = float(np.sum(w * hermite(r)(x) * hermite(s)(x))) / math.sqrt(2 * math.pi)
            assert val == pytest.approx(math.factorial(r) if r == s else 0.0, abs=1e-9)


def test_bernoulli_numbers_known():
    b = bernoulli_numbers(12)
    assert b[:5] == [1, Fraction(-1, 2), Fraction(1, 6), 0, Fraction(-1, 30)]
    assert b[12] == Fraction(-691, 2730)
    assert all(b[j] == 0 for j in range(3, 13, 2))


@settings(max_examples=60)
@given(r=st.integers(1, 10), x=fractions)
def test_bernoulli_polynomial_difference(r, x):
    B = bernoulli_polynomial(r)
    assert B(x + 1) - B(x) == r * x ** (r - 1)


@settings(max_examples=60)
@given(r=st.integers(0, 10), x=fractions)
def test_bernoulli_polynomial_reflection(r, x):
    B = bernoulli_polynomial(r)
    assert B(1 - x) == (-1) ** r * B(x)


@settings(max_examples=60)
@given(r=st.integers(1, 8), x=fractions, shift=st.integers(-3, 3))
def test_psi_periodic(r, x, shift):
    assert psi(r, x + shift) == psi(r, x)


@pytest.mark.parametrize("r", range(2, 8))
def test_psi_derivative_is_previous(r):
    # away from integers psi_r' = psi_{r-1}
    h = 1e-6
    for x in (0.13, 0.4, 0.77):
        deriv = (psi(r, x + h) - psi(r, x - h)) / (2 * h)
        assert deriv == pytest.approx(float(psi(r - 1, x)), abs=1e-8)


def test_psi_one_sided():
    assert psi(1, 3) == Fraction(1, 2)
    assert psi(1, 3, left=True) == Fraction(-1, 2)
    assert psi(1, Fraction(7, 4)) == Fraction(-1, 4)
    assert psi(2, 0) == Fraction(-1, 12)
    assert frac(Fraction(-1, 3)) == Fraction(2, 3)


@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_psi_fourier_within_tail_bound(r):
    for x in np.linspace(0.01, 0.99, 9):
        value, tail = psi_fourier(r, x, 400)
        assert abs(value - float(psi(r, x))) <= tail + 1e-13


def test_psi_rejects_order_zero():
    with pytest.raises(DomainError):
        psi(0, 0.3)


def _series(order, polys):
    return TruncatedUSeries(order, [Polynomial()] + list(polys))


@settings(max_examples=40, deadline=None)
@given(polys=st.lists(small_polys, min_size=1, max_size=5))
def test_series_exp_inverse(polys):
    s = _series(5, polys)
    assert series_exp(s) * series_exp(-s) == TruncatedUSeries.one(5)


@settings(max_examples=30, deadline=None)
@given(a=st.lists(small_polys, min_size=1, max_size=4), b=st.lists(small_polys, min_size=1, max_size=4))
def test_series_exp_additive(a, b):
    sa, sb = _series(4, a), _series(4, b)
    assert series_exp(sa + sb) == series_exp(sa) * series_exp(sb)


def test_series_exp_single_variable():
    # exp(z) has coefficients 1/j!
    e = series_exp(_series(6, [Polynomial([1])]))
    assert [c[0] for c in e.coeffs] == [Fraction(1, math.factorial(j)) for j in range(7)]


def test_series_exp_requires_zero_constant():
    with pytest.raises(DomainError):
        series_exp(TruncatedUSeries(3, [Polynomial([1])]))


@pytest.mark.parametrize("r", range(1, 9))
def test_gaussian_density_derivatives_are_hermite(r):
    # d^r/dx^r phi = (-1)^r He_r phi
    with mpmath.workdps(30):
        for x in (-1.7, 0.2, 2.4):
            ref = mpmath.diff(mpmath.npdf, x, r)
            val = (-1) ** r * hermite(r)(x) * math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
            assert val == pytest.approx(float(ref), rel=1e-10, abs=1e-13)


def test_psi2_continuous_at_integers():
    assert bernoulli_polynomial(2)(0) == bernoulli_polynomial(2)(1)
    assert psi(2, Fraction(-1, 10 ** 9) + 4) == pytest.approx(float(psi(2, 4)), abs=1e-8)


def test_psi_fourier_large_cutoff():
    for x in (0.05, 0.31, 0.5, 0.93):
        for r in (2, 3):
            value, tail = psi_fourier(r, x, 10 ** 4)
            assert abs(value - float(psi(r, x))) <= tail + 1e-13
