"""Exact binomial and certified Poisson probabilities.

Binomial CDFs are exact :class:`~fractions.Fraction` values. Poisson
probabilities are irrational, so they come back as :class:`HighPrecisionReal`
carrying a rigorous error bound: every term is propagated as an integer
fixed-point interval with directed (floor/ceil) rounding, the starting term
uses interval arithmetic for ``exp``, and truncated tails are bounded by
geometric series.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import gmpy2
import mpmath
from gmpy2 import mpz
from mpmath.libmp import from_rational

from .errors import DomainError

__all__ = [
    "DEFAULT_PRECISION_BITS",
    "HighPrecisionReal",
    "TailQuery",
    "binomial_cdf",
    "binomial_cdf_exact",
    "binomial_cdf_table",
    "chvatal_q",
    "chvatal_q_strict",
    "chvatal_numerators",
    "poisson_cdf",
    "poisson_cdf_table",
    "total_variation_binomial_poisson",
    "verify_poisson_monotonicity",
    "PoissonMonotonicityReport",
]

DEFAULT_PRECISION_BITS = int(os.environ.get("LATTICE_EDGEWORTH_PRECISION", "192"))
_GUARD_BITS = 32

Rational = Union[int, Fraction]


# ---------------------------------------------------------------------------
# Binomial
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailQuery:
    """``P(S <= threshold)`` (or ``<`` when strict) for ``S ~ Bi(n, m/n)``."""

    n: int
    m: int
    threshold: int
    strict: bool = False

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.m <= self.n:
            raise DomainError(f"need n >= 1 and 0 <= m <= n, got n={self.n}, m={self.m}")

    def evaluate(self) -> Fraction:
        return binomial_cdf_exact(self.n, self.m, self.threshold, self.strict)


def _lower_sum(n: int, a: int, c: int, t: int) -> mpz:
    """``sum_{k=0}^{t} C(n,k) a^k c^(n-k)`` for positive ``a, c`` and ``0 <= t <= n``.

    Binary splitting over the term ratio ``(n-k) a / ((k+1) c)``.
    """

    def split(lo: int, hi: int):
        # (P, Q, T): prod of ratio numerators/denominators over [lo, hi) and
        # T/Q = sum_{k=lo}^{hi-1} prod_{i=lo}^{k-1} ratio_i
        if hi - lo == 1:
            q = mpz((lo + 1) * c)
            return mpz((n - lo) * a), q, q
        mid = (lo + hi) // 2
        p1, q1, t1 = split(lo, mid)
        p2, q2, t2 = split(mid, hi)
        return p1 * p2, q1 * q2, t1 * q2 + p1 * t2

    _, q, t_ = split(0, t + 1)
    return gmpy2.divexact(mpz(c) ** n * t_, q)


def _cdf_numerator(n: int, a: int, b: int, t: int) -> mpz:
    """Numerator over ``b**n`` of ``P(Bi(n, a/b) <= t)``."""
    if t < 0:
        return mpz(0)
    total = mpz(b) ** n
    if t >= n or a == 0:
        return total
    if a == b:
        return mpz(0)
    c = b - a
    if 2 * t < n:
        return _lower_sum(n, a, c, t)
    # upper tail k > t equals the lower tail j < n - t of Bi(n, c/b)
    return total - _lower_sum(n, c, a, n - t - 1)


def _as_fraction(p) -> Fraction:
    if isinstance(p, str):
        return Fraction(p)
    return Fraction(p)


def binomial_cdf(n: int, p, t: int, strict: bool = False) -> Fraction:
    """Exact ``P(Bi(n, p) <= t)`` (``< t`` if strict) for rational ``p`` in [0, 1]."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    p = _as_fraction(p)
    if not 0 <= p <= 1:
        raise DomainError("p must lie in [0, 1]")
    thr = t - 1 if strict else t
    a, b = p.numerator, p.denominator
    return Fraction(int(_cdf_numerator(n, a, b, thr)), b ** n)


def binomial_cdf_exact(n: int, m: int, t: int, strict: bool = False) -> Fraction:
    """Exact CDF of ``Bi(n, m/n)`` at ``t``."""
    if n < 1 or not 0 <= m <= n:
        raise DomainError(f"need n >= 1 and 0 <= m <= n, got n={n}, m={m}")
    thr = t - 1 if strict else t
    # degenerate laws: all mass at 0 or at n
    if m == 0:
        return Fraction(1) if thr >= 0 else Fraction(0)
    if m == n:
        return Fraction(1) if thr >= n else Fraction(0)
    return Fraction(int(_cdf_numerator(n, m, n, thr)), n ** n)


def chvatal_q(n: int, m: int) -> Fraction:
    """``q_m = P(Bi(n, m/n) <= m)``."""
    return binomial_cdf_exact(n, m, m, strict=False)


def chvatal_q_strict(n: int, m: int) -> Fraction:
    """``q'_m = P(Bi(n, m/n) < m)``; satisfies ``1 - q_m = q'_{n-m}``."""
    return binomial_cdf_exact(n, m, m, strict=True)


def chvatal_numerators(n: int) -> list:
    """Integers ``N_m`` with ``q_m = N_m / n**n`` for ``m = 0..n``.

    All ``q_m`` share the denominator ``n**n``, so comparing numerators is an
    exact comparison of the probabilities.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    total = mpz(n) ** n
    out = [total]
    for m in range(1, n):
        out.append(_cdf_numerator(n, m, n, m))
    if n >= 1:
        out.append(total)
    return out


def binomial_cdf_table(n: int, p) -> list:
    """``[P(Bi(n,p) <= t) for t in 0..n]`` as correctly rounded floats."""
    p = _as_fraction(p)
    if not 0 < p < 1:
        raise DomainError("p must lie strictly between 0 and 1")
    a, b = p.numerator, p.denominator
    c = b - a
    den = mpz(b) ** n
    term = mpz(c) ** n
    acc = mpz(0)
    out = []
    for k in range(n + 1):
        acc += term
        out.append(int(acc) / int(den))
        if k < n:
            term = gmpy2.divexact(term * ((n - k) * a), (k + 1) * c)
    return out


# ---------------------------------------------------------------------------
# High-precision reals
# ---------------------------------------------------------------------------


def _to_fraction(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    man, exp = x.man_exp
    return Fraction(int(man) * 2 ** exp) if exp >= 0 else Fraction(int(man), 2 ** -exp)


@dataclass(frozen=True)
class HighPrecisionReal:
    """A real number known to lie in ``[value - error_bound, value + error_bound]``."""

    value: mpmath.mpf
    error_bound: mpmath.mpf
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self):
        if self.error_bound < 0:
            raise DomainError("error_bound must be nonnegative")

    @classmethod
    def from_interval(cls, lo: Fraction, hi: Fraction, precision_bits: int) -> "HighPrecisionReal":
        mid = (lo + hi) / 2
        value = mpmath.mp.make_mpf(from_rational(mid.numerator, mid.denominator, precision_bits, "n"))
        # the midpoint rounding is folded into the bound, which is rounded up
        rad = (hi - lo) / 2 + abs(_to_fraction(value) - mid)
        err = mpmath.mp.make_mpf(from_rational(rad.numerator, rad.denominator, precision_bits, "u"))
        return cls(value, err, precision_bits)

    @property
    def lower(self) -> Fraction:
        return _to_fraction(self.value) - _to_fraction(self.error_bound)

    @property
    def upper(self) -> Fraction:
        return _to_fraction(self.value) + _to_fraction(self.error_bound)

    def __float__(self) -> float:
        return float(self.value)

    def compare(self, other) -> int:
        """Certified sign of ``self - other``; 0 means not certifiable.

        A decision is certified only when the gap exceeds twice the combined
        error bounds.
        """
        if isinstance(other, HighPrecisionReal):
            ov, oe = _to_fraction(other.value), _to_fraction(other.error_bound)
        else:
            ov, oe = Fraction(other), Fraction(0)
        gap = _to_fraction(self.value) - ov
        slack = 2 * (_to_fraction(self.error_bound) + oe)
        if gap > slack:
            return 1
        if -gap > slack:
            return -1
        return 0


# ---------------------------------------------------------------------------
# Poisson
# ---------------------------------------------------------------------------


def _ceil_div(a, b) -> mpz:
    return -((-a) // b)


def _exp_neg_bounds(rate: Fraction, bits: int) -> tuple:
    """Rational ``(lo, hi)`` enclosing ``exp(-rate)``."""
    iv = mpmath.iv
    saved = iv.prec
    iv.prec = bits
    try:
        e = iv.exp(-(iv.mpf(rate.numerator) / rate.denominator))
    finally:
        iv.prec = saved
    (s1, m1, e1, _), (s2, m2, e2, _) = e._mpi_
    lo = Fraction(int(m1)) * Fraction(2) ** e1
    hi = Fraction(int(m2)) * Fraction(2) ** e2
    return (-lo if s1 else lo), (-hi if s2 else hi)


def _term_bounds(rate: Fraction, k: int, scale: int) -> tuple:
    """Fixed-point ``(floor, ceil)`` bounds of ``2**scale * e^-rate rate^k / k!``."""
    e_lo, e_hi = _exp_neg_bounds(rate, scale + 16)
    a, b = mpz(rate.numerator), mpz(rate.denominator)
    num = a ** k
    den = b ** k * gmpy2.fac(k)
    lo = (mpz(e_lo.numerator) * num << scale) // (mpz(e_lo.denominator) * den)
    hi = _ceil_div(mpz(e_hi.numerator) * num << scale, mpz(e_hi.denominator) * den)
    return lo, hi


class _PoissonTerms:
    """Fixed-point interval enclosures of the ``Po(rate)`` pmf on ``[k_lo, k_hi]``.

    Terms are generated outward from a start index so every recurrence factor
    is at most 1 and rounding errors never grow.
    """

    def __init__(self, rate: Fraction, k_lo: int, k_hi: int, scale: int):
        self.rate, self.k_lo, self.k_hi, self.scale = rate, k_lo, k_hi, scale
        a, b = mpz(rate.numerator), mpz(rate.denominator)
        mode = math.floor(rate)
        start = min(max(mode, k_lo), k_hi)
        n = k_hi - k_lo + 1
        lo = [mpz(0)] * n
        hi = [mpz(0)] * n
        lo[start - k_lo], hi[start - k_lo] = _term_bounds(rate, start, scale)
        for k in range(start, k_lo, -1):
            # T_{k-1} = T_k * k / rate
            i = k - k_lo
            lo[i - 1] = (lo[i] * k * b) // a
            hi[i - 1] = -((-hi[i] * k * b) // a)
        for k in range(start, k_hi):
            # T_{k+1} = T_k * rate / (k + 1)
            i = k - k_lo
            d = b * (k + 1)
            lo[i + 1] = (lo[i] * a) // d
            hi[i + 1] = -((-hi[i] * a) // d)
        self.lo, self.hi = lo, hi

    def lower_tail_bound(self) -> mpz:
        """Upper bound on ``2**scale * P(X < k_lo)``; needs ``k_lo < rate``."""
        k = self.k_lo
        if k == 0:
            return mpz(0)
        a, b = self.rate.numerator, self.rate.denominator
        # terms below k_lo shrink by at least k/rate each step
        return _ceil_div(self.hi[0] * k * b, a - k * b)

    def upper_tail_bound(self) -> mpz:
        """Upper bound on ``2**scale * P(X > k_hi)``; needs ``k_hi + 1 > rate``."""
        k = self.k_hi
        a, b = self.rate.numerator, self.rate.denominator
        return _ceil_div(self.hi[-1] * a, b * (k + 1) - a)


def _window(rate: Fraction) -> tuple:
    width = 20 * math.sqrt(rate) + 50
    return max(0, math.floor(rate - width)), math.ceil(rate + width)


def _poisson_cdf_interval(rate: Fraction, t: int, scale: int) -> tuple:
    """Fixed-point integer bounds of ``2**scale * P(Po(rate) <= t)``."""
    if t < 0:
        return mpz(0), mpz(0)
    w_lo, w_hi = _window(rate)
    if t < w_lo:
        terms = _PoissonTerms(rate, t, t, scale)
        # everything at or below t lies deep in the lower tail
        a, b = rate.numerator, rate.denominator
        tail = _ceil_div(terms.hi[0] * a, a - t * b)
        return mpz(0), tail
    top = min(t, w_hi)
    terms = _PoissonTerms(rate, w_lo, top, scale)
    lo = sum(terms.lo)
    hi = sum(terms.hi) + terms.lower_tail_bound()
    if t > w_hi:
        hi += terms.upper_tail_bound()
    one = mpz(1) << scale
    return lo, min(hi, one)


def _as_rate(rate) -> Fraction:
    r = Fraction(rate)
    if r <= 0:
        raise DomainError("rate must be positive")
    return r


def poisson_cdf(rate, t: int, strict: bool = False,
                precision_bits: int = DEFAULT_PRECISION_BITS) -> HighPrecisionReal:
    """Certified ``P(Po(rate) <= t)`` (``< t`` if strict)."""
    rate = _as_rate(rate)
    scale = precision_bits + _GUARD_BITS
    lo, hi = _poisson_cdf_interval(rate, t - 1 if strict else t, scale)
    den = 1 << scale
    return HighPrecisionReal.from_interval(Fraction(int(lo), den), Fraction(int(hi), den), precision_bits)


def poisson_cdf_table(rate, t_max: int, precision_bits: int = 64) -> list:
    """Floats ``[P(Po(rate) <= t) for t in 0..t_max]`` (each within ``2**-precision_bits``)."""
    rate = _as_rate(rate)
    scale = precision_bits + _GUARD_BITS
    w_lo, w_hi = _window(rate)
    hi_k = max(min(t_max, w_hi), w_lo)
    terms = _PoissonTerms(rate, w_lo, hi_k, scale)
    den = 1 << scale
    out = []
    acc = mpz(0)
    for t in range(t_max + 1):
        if w_lo <= t <= hi_k:
            i = t - w_lo
            acc += (terms.lo[i] + terms.hi[i]) // 2
        out.append(min(int(acc) / den, 1.0))
    return out


def total_variation_binomial_poisson(n: int, p, precision_bits: int = DEFAULT_PRECISION_BITS) -> HighPrecisionReal:
    """Certified ``d_TV(Bi(n, p), Po(np))``.

    Sums ``|P(Bi=k) - P(Po=k)|`` over ``k <= n`` and adds the Poisson mass
    above ``n``, obtained as one minus the enclosed mass at or below ``n``.
    """
    p = _as_fraction(p)
    if not 0 < p < 1:
        raise DomainError("p must lie strictly between 0 and 1")
    if n < 1:
        raise DomainError("n must be >= 1")
    scale = precision_bits + _GUARD_BITS
    rate = n * p
    terms = _PoissonTerms(rate, 0, n, scale)
    a, b = p.numerator, p.denominator
    c = b - a
    den = mpz(b) ** n
    term = mpz(c) ** n
    acc_lo = acc_hi = mpz(0)
    for k in range(n + 1):
        b_lo = (term << scale) // den
        b_hi = -((-(term << scale)) // den)
        d_lo = b_lo - terms.hi[k]
        d_hi = b_hi - terms.lo[k]
        if d_lo >= 0:
            acc_lo += d_lo
            acc_hi += d_hi
        elif d_hi <= 0:
            acc_lo += -d_hi
            acc_hi += -d_lo
        else:
            acc_hi += max(-d_lo, d_hi)
        if k < n:
            term = gmpy2.divexact(term * ((n - k) * a), (k + 1) * c)
    one = mpz(1) << scale
    acc_lo += one - sum(terms.hi)
    acc_hi += one - sum(terms.lo)
    full = Fraction(1, 2 << scale)
    return HighPrecisionReal.from_interval(max(acc_lo, 0) * full, acc_hi * full, precision_bits)


@dataclass
class PoissonMonotonicityReport:
    """Outcome of certifying both Poisson monotonicity chains up to ``m_max``."""

    m_max: int
    precision_bits: int
    checks: int = 0
    violations: list = field(default_factory=list)
    uncertified: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.uncertified


def verify_poisson_monotonicity(m_max: int, precision_bits: int = DEFAULT_PRECISION_BITS,
                                progress=None) -> PoissonMonotonicityReport:
    """Certify, for every ``1 <= m <= m_max``,

    ``P(Po(m) < m) < P(Po(m+1) < m+1) < 1/2`` and
    ``P(Po(m) <= m) > P(Po(m+1) <= m+1) > 1/2``.

    Comparisons whose margin does not exceed twice the combined error bound
    are listed as uncertified rather than passed.
    """
    if m_max < 1:
        raise DomainError("m_max must be >= 1")
    report = PoissonMonotonicityReport(m_max=m_max, precision_bits=precision_bits)
    half = Fraction(1, 2)

    def values(m):
        return poisson_cdf(m, m, True, precision_bits), poisson_cdf(m, m, False, precision_bits)

    def record(label, m, sign, expected):
        report.checks += 1
        if sign == 0:
            report.uncertified.append((label, m))
        elif sign != expected:
            report.violations.append((label, m))

    prev_lt, prev_le = values(1)
    record("lt<1/2", 1, prev_lt.compare(half), -1)
    record("le>1/2", 1, prev_le.compare(half), 1)
    for m in range(1, m_max + 1):
        cur_lt, cur_le = values(m + 1)
        record("lt<1/2", m + 1, cur_lt.compare(half), -1)
        record("le>1/2", m + 1, cur_le.compare(half), 1)
        record("lt increasing", m, prev_lt.compare(cur_lt), -1)
        record("le decreasing", m, prev_le.compare(cur_le), 1)
        prev_lt, prev_le = cur_lt, cur_le
        if progress is not None:
            progress(m)
    return report
