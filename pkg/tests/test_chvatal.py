import math
from fractions import Fraction

import pytest

from lattice_edgeworth.chvatal import (
    coefficient_set,
    critical_constants,
    figure_grid,
    h1_closed,
    h1_prime,
    h1_prime_numeric,
    h3_closed,
    predict_q_difference,
    two_term_approx,
    rigollet_tong_check,
    scan_fixed_n,
    target_m,
    verify_chvatal,
)
from lattice_edgeworth.cumulants import bernoulli_distribution
from lattice_edgeworth.edgeworth import mean_expansion
from lattice_edgeworth.errors import DomainError
from lattice_edgeworth.exactprob import binomial_cdf, chvatal_numerators, chvatal_q, chvatal_q_strict

SQRT_2PI = math.sqrt(2 * math.pi)

# fitted once over the matrices below, then frozen with margin
CONSISTENCY_C = 0.005
RP_C = 0.01


def test_closed_form_values():
    assert h1_closed(Fraction(1, 2)) == pytest.approx(1 / SQRT_2PI, rel=1e-15)
    assert h1_closed(Fraction(2, 3)) == pytest.approx(2 / (3 * math.sqrt(math.pi)), rel=1e-15)
    assert h3_closed(Fraction(1, 2)) < 0
    root = (-23 + math.sqrt(621)) / 2
    assert h3_closed(root - 1e-6) < 0 < h3_closed(root + 1e-6)


def test_h1_prime():
    assert h1_prime(Fraction(2, 3)) == 0
    assert h1_prime(Fraction(1, 2)) < 0 < h1_prime(0.9)
    for p in (0.1, 0.35, 0.8):
        assert h1_prime_numeric(p) == pytest.approx(h1_prime(p), rel=1e-10)
    with pytest.raises(DomainError):
        h1_prime(1)


@pytest.mark.parametrize("p", ["3/10", "1/2", "2/3", "9/10"])
def test_engine_matches_closed_forms(p):
    exp = mean_expansion(bernoulli_distribution(p, 8), 3)
    assert exp.coefficient(1) == pytest.approx(h1_closed(Fraction(p)), rel=1e-9)
    assert exp.coefficient(3) == pytest.approx(h3_closed(Fraction(p)), rel=1e-9)


def test_h5_from_engine():
    cs = coefficient_set("1/2")
    # rational coefficient 1/1024 at sigma = 1/2
    assert cs.h5 == pytest.approx(32 / (1024 * SQRT_2PI), rel=1e-14)


def test_critical_constants():
    c = critical_constants()
    assert c["h1_pp_23"] == pytest.approx(27 / (8 * math.sqrt(math.pi)), rel=1e-6)
    assert c["h3_p_23"] == pytest.approx(9 / (40 * math.sqrt(math.pi)), rel=1e-6)
    assert c["ratio"] == pytest.approx(1 / 15, rel=1e-6)


def test_predictor_examples():
    for m in range(190, 211):
        pred = predict_q_difference(300, m)
        assert pred.regime == "critical"
        assert (pred.predicted > 0) == (m + 0.5 > 200)
    assert predict_q_difference(300, 100).predicted < 0
    assert predict_q_difference(300, 100).regime == "bulk_lower"
    high = predict_q_difference(300, 290)
    assert high.regime == "high_poisson" and high.predicted > 0
    assert chvatal_q(300, 291) > chvatal_q(300, 290)


@pytest.mark.parametrize("n", [500, 501, 502, 750, 1000])
def test_predictor_sign_in_critical_window(n):
    nums = chvatal_numerators(n)
    for m in range(n):
        pred = predict_q_difference(n, m)
        if pred.regime == "critical":
            exact = nums[m + 1] - nums[m]
            assert (pred.predicted > 0) == (exact > 0)


def test_predictor_tracks_exact_differences():
    n = 600
    nums = chvatal_numerators(n)
    for m in (3, 100, 300, 400, 500, 597):
        exact = float(Fraction(int(nums[m + 1] - nums[m]), n ** n))
        assert predict_q_difference(n, m).predicted == pytest.approx(exact, rel=0.1)


def test_verify_small_cases():
    r = verify_chvatal(30)
    assert r.argmin_m == 20 and r.target_m == 20 and r.matches_conjecture and r.unimodal
    assert r.sign_changes == [20]
    r3 = verify_chvatal(3)
    assert r3.argmin_m == 2 and r3.q_values == (1, Fraction(20, 27), Fraction(19, 27), 1)
    assert verify_chvatal(2).argmin_m == 1
    with pytest.raises(DomainError):
        verify_chvatal(1)


def test_verify_thousand():
    r = verify_chvatal(1000, keep_values=False)
    assert r.argmin_m == 667 and r.matches_conjecture and r.unimodal
    assert r.q_values is None


def test_small_n_sign_exceptions_recorded():
    # the sign predicate is only claimed for large n; whatever happens below 100 is reported
    for n in range(2, 100):
        r = verify_chvatal(n, keep_values=False)
        assert isinstance(r.sign_exceptions, list)
        assert r.to_json_dict()["n"] == n


def test_target_has_no_ties():
    for n in range(2, 3000):
        t = target_m(n)
        assert abs(Fraction(t) - Fraction(2 * n, 3)) < Fraction(1, 2)


def test_rigollet_tong():
    assert rigollet_tong_check(100)
    assert rigollet_tong_check(3)
    assert rigollet_tong_check(2)


@pytest.mark.parametrize("n", [7, 30, 61])
def test_strict_symmetry(n):
    for m in range(n + 1):
        assert 1 - chvatal_q(n, m) == chvatal_q_strict(n, n - m)


def test_asymptotic_consistency():
    for n in (200, 300, 500, 800):
        nums = chvatal_numerators(n)
        for m in range(1, n):
            var = n * (m / n) * (1 - m / n)
            if math.sqrt(var) < math.log(n):
                continue
            p = Fraction(m, n)
            q = float(Fraction(int(nums[m]), n ** n))
            err = abs(q - 0.5 - h1_closed(p) / math.sqrt(n) - h3_closed(p) * n ** -1.5)
            assert err <= CONSISTENCY_C * var ** -2.5


def test_two_term_approximation():
    for n in (100, 400):
        for p in [Fraction(i, 97) for i in range(1, 97)] + [Fraction(m, n) for m in range(1, n)]:
            var = float(n * p * (1 - p))
            if var < math.log(n) ** 2:
                continue
            le = float(binomial_cdf(n, p, math.floor(n * p)))
            assert abs(le - two_term_approx(n, p)) <= RP_C / var


def test_scan_jumps_and_decrease():
    n = 30
    rows = scan_fixed_n(n, figure_grid(n, 300), include_left_limits=True)
    for a, b in zip(rows, rows[1:]):
        if b.left:
            continue
        if a.left:
            # the jump happens exactly at p = m/n
            assert a.p == b.p and (n * b.p).denominator == 1
            assert b.cdf_le > a.cdf_le
        else:
            assert a.p < b.p
            assert b.cdf_le < a.cdf_le
    jumps = [r for r in rows if not r.left and (n * r.p).denominator == 1]
    assert min(jumps, key=lambda r: r.cdf_le).p == Fraction(20, 30)
    assert max(jumps, key=lambda r: r.cdf_lt).p == Fraction(10, 30)


def test_scan_rejects_bad_grid():
    with pytest.raises(DomainError):
        scan_fixed_n(10, [Fraction(0)])
    with pytest.raises(DomainError):
        figure_grid(10, 1)
