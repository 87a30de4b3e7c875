import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from lattice_edgeworth.cumulants import bernoulli_distribution, lattice_stats, poisson1_analytic
from lattice_edgeworth.edgeworth import (
    GaussCombo,
    _LatticeApprox,
    build_model,
    default_oracle,
    edgeworth_polynomials,
    h_function,
    integer_mean_expansion,
    lattice_cdf_approx,
    loglog_slope,
    mean_expansion,
    q_functions,
    residual_scan,
    uniform_regime,
)
from lattice_edgeworth.errors import DomainError
from lattice_edgeworth.exactprob import binomial_cdf
from lattice_edgeworth.series import Polynomial

SQRT_2PI = math.sqrt(2 * math.pi)

# fitted once from the test matrix below, then frozen with margin
RESIDUAL_C = {1: 0.1, 2: 0.05, 3: 0.02, 4: 0.015}
H_DERIV_C = 1.5
VARIANT_GAP_C = 0.1

skewed = lattice_stats({-1: Fraction(1, 5), 0: Fraction(1, 2), 2: Fraction(3, 10)}, 10, name="skewed")


@pytest.mark.parametrize("dist", [bernoulli_distribution("3/10", 10), skewed, poisson1_analytic(10)])
def test_pi_table_parity_and_degree(dist):
    model = build_model(dist, 6)
    for (j, r), c in model.pi_scaled.items():
        assert c != 0
        assert (r - j) % 2 == 0
        assert j + 2 <= r <= 3 * j
    for j in range(1, 7):
        p = model.p_polynomial(j)
        assert p.degree == 3 * j
        assert p[j + 2] != 0 and all(p[r] == 0 for r in range(j + 2))


def test_low_order_pi_values():
    d = bernoulli_distribution("3/10", 6)
    table = edgeworth_polynomials(d, 2)
    assert table[(1, 3)] == pytest.approx(d.lam(3) / 6, rel=1e-14)
    assert table[(2, 4)] == pytest.approx(d.lam(4) / 24, rel=1e-14)
    assert table[(2, 6)] == pytest.approx(d.lam(3) ** 2 / 72, rel=1e-14)
    assert set(table) == {(1, 3), (2, 4), (2, 6)}


def test_symmetric_law_has_no_odd_terms():
    model = build_model(bernoulli_distribution("1/2", 8), 6)
    assert all(j % 2 == 0 for j, _ in model.pi_scaled)
    for k in (1, 2, 3):
        assert h_function(model, 50, k)(0.0) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("dist", [bernoulli_distribution("3/10", 10), skewed])
def test_q_derivative_parity_at_zero(dist):
    model = build_model(dist, 6)
    for j in range(1, 7):
        for ell in range(0, 7):
            if (j + ell) % 2 == 0:
                assert model.q_scaled[j].derivative(ell).poly[0] == 0


def test_q1_at_zero():
    d = bernoulli_distribution("1/5", 6)
    q1 = q_functions(build_model(d, 2))[1]
    assert q1(0.0) == pytest.approx(d.lam(3) / (6 * SQRT_2PI), rel=1e-14)


def _mp_eval(g, x):
    poly = g.poly.to_float()
    return float(g.a) * mpmath.ncdf(x) + mpmath.npdf(x) * sum(mpmath.mpf(c) * x ** i for i, c in enumerate(poly))


def test_gauss_combo_derivatives_match_finite_differences():
    g = build_model(bernoulli_distribution("3/10", 10), 4).h(30)
    xs = np.linspace(-4.3, 4.1, 20)
    h = 1e-5
    for order in range(1, 7):
        lower = g.derivative(order - 1)
        target = g.derivative(order)
        for x in xs:
            fd = (lower(x + h) - lower(x - h)) / (2 * h)
            scale = max(abs(target(x)), 1e-3 * max(abs(target(xs))))
            assert abs(fd - target(x)) <= 1e-6 * scale


def test_gauss_combo_high_order_against_mpmath():
    g = GaussCombo(Fraction(1, 3), Polynomial([1, Fraction(-1, 2), 0, Fraction(1, 7)]))
    with mpmath.workdps(40):
        for x in (-2.5, -0.3, 0.0, 1.1, 3.0):
            for order in range(1, 7):
                ref = mpmath.diff(lambda t: _mp_eval(g, t), x, order)
                assert g.derivative(order)(x) == pytest.approx(float(ref), rel=1e-9, abs=1e-12)


def test_gauss_combo_closed_under_derivative():
    phi = GaussCombo(1, Polynomial())
    # Phi' = phi, Phi'' = -x phi
    assert phi.derivative(1) == GaussCombo(0, Polynomial([1]))
    assert phi.derivative(2) == GaussCombo(0, Polynomial([0, -1]))


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("p", ["1/10", "1/2"])
def test_h_derivative_bounds(k, p):
    d = bernoulli_distribution(p, k + 3)
    model = build_model(d, k)
    x = np.linspace(-8, 8, 1601)
    for n in (10, 100, 1000):
        for m in range(5):
            sup = float(np.max(np.abs(model.h(n).derivative(m)(x))))
            assert sup <= H_DERIV_C * (1 + d.Lam(k + 2) * n ** (-k / 2))


def test_lattice_approx_known_value():
    model = build_model(bernoulli_distribution("1/2", 4), 1)
    assert lattice_cdf_approx(model, 100, 0.0) == pytest.approx(0.5 + 1 / (10 * SQRT_2PI), abs=1e-15)
    exact = float(binomial_cdf(100, Fraction(1, 2), 50))
    assert abs(lattice_cdf_approx(model, 100, 0.0) - exact) < 100 ** -1.5


def test_strict_flag_uses_left_limit():
    model = build_model(bernoulli_distribution("1/2", 4), 1)
    le = lattice_cdf_approx(model, 100, 0.0)
    lt = lattice_cdf_approx(model, 100, 0.0, strict=True)
    assert le - lt == pytest.approx(2 / (10 * SQRT_2PI), abs=1e-15)
    exact = float(binomial_cdf(100, Fraction(1, 2), 50, strict=True))
    assert abs(lt - exact) < 100 ** -1.5


@pytest.mark.parametrize("k", [1, 2, 3])
def test_variants_differ_by_higher_order(k):
    d = bernoulli_distribution("3/10", k + 4)
    model = build_model(d, k)
    x = np.linspace(-5, 5, 401)
    for n in (100, 400, 1600):
        gap = np.max(np.abs(_LatticeApprox(model, n, "simplified")(x) - _LatticeApprox(model, n, "full")(x)))
        assert gap <= VARIANT_GAP_C * d.Lam(k + 3) * n ** (-(k + 1) / 2)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_residual_bound_across_matrix(k):
    for p in ("1/10", "3/10", "1/2", "2/3"):
        d = bernoulli_distribution(p, k + 3)
        model = build_model(d, k)
        pq = float(Fraction(p) * (1 - Fraction(p)))
        for n in (100, 200, 400, 800):
            if not uniform_regime(d, n):
                continue
            res = residual_scan(model, n).sup_residual
            assert res <= RESIDUAL_C[k] / (n * pq) ** ((k + 1) / 2)


def test_residual_scan_general_pmf():
    model = build_model(skewed, 2)
    scans = [residual_scan(model, n) for n in (50, 100, 200, 400)]
    slope = loglog_slope([s.n for s in scans], [s.sup_residual for s in scans])
    assert slope < -1.3


def test_default_oracle_poisson():
    oracle = default_oracle(poisson1_analytic(), 20)
    assert oracle(20) == pytest.approx(float(mpmath.gammainc(21, 20, regularized=True)), rel=1e-13)
    assert oracle(-1) == 0.0


def test_mean_expansion_bernoulli_half():
    d = bernoulli_distribution("1/2", 9)
    exp = mean_expansion(d, 6)
    assert exp.rational[1:] == (Fraction(1, 2), 0, Fraction(-1, 32), 0, Fraction(1, 1024), 0)
    assert exp.coefficient(1) == pytest.approx(1 / SQRT_2PI, rel=1e-15)


@pytest.mark.parametrize("p", ["1/10", "3/10", "2/3"])
def test_mean_expansion_even_terms_vanish(p):
    exp = mean_expansion(bernoulli_distribution(p, 10), 7)
    assert all(exp.rational[m] == 0 for m in (2, 4, 6))


def test_poisson_mean_expansion_coefficients():
    # cross-checked against certified P(Po(m) <= m) and P(Po(m) < m) at m = 10^2..10^4
    strict = mean_expansion(poisson1_analytic(8), 5, strict=True)
    loose = mean_expansion(poisson1_analytic(8), 5, strict=False)
    assert strict.rational[1:] == (Fraction(-1, 3), 0, Fraction(-1, 540), 0, Fraction(25, 6048))
    assert loose.rational[1:] == (Fraction(2, 3), 0, Fraction(-23, 270), 0, Fraction(23, 3024))


def test_integer_mean_expansion_checks_domain():
    d = bernoulli_distribution("1/3", 5)
    with pytest.raises(DomainError):
        integer_mean_expansion(d, 10, 1)
    assert integer_mean_expansion(d, 30, 1) == pytest.approx(0.5 + mean_expansion(d, 1).coefficient(1) / math.sqrt(30))
    even_only = build_model(lattice_stats({0: Fraction(1, 2), 2: Fraction(1, 2)}, 5), 1)
    with pytest.raises(DomainError):
        lattice_cdf_approx(even_only, 10, 0.0)


def test_model_order_checks():
    with pytest.raises(DomainError):
        build_model(bernoulli_distribution("1/2", 3), 2)
    with pytest.raises(DomainError):
        build_model(bernoulli_distribution("1/2", 6), 2).h(10, 3)
