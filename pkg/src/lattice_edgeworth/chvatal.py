"""Binomial specialization: closed-form expansion coefficients, the
difference predictor, and exact verification of Chvatal's conjecture that
``q_m = P(Bi(n, m/n) <= m)`` is smallest at the integer nearest ``2n/3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Optional

import mpmath

from .cumulants import bernoulli_distribution, poisson1_analytic
from .edgeworth import mean_expansion
from .errors import DomainError
from .exactprob import binomial_cdf, chvatal_numerators

__all__ = [
    "h1_closed",
    "h3_closed",
    "h1_prime",
    "h1_prime_numeric",
    "critical_constants",
    "CoefficientSet",
    "coefficient_set",
    "Prediction",
    "predict_q_difference",
    "ChvatalReport",
    "verify_chvatal",
    "verify_range",
    "target_m",
    "ScanRow",
    "two_term_approx",
    "scan_fixed_n",
    "figure_grid",
    "rigollet_tong_check",
]

SQRT_2PI = math.sqrt(2 * math.pi)
CRITICAL_HALF_WIDTH = 10


def _check_p(p) -> None:
    if not 0 < p < 1:
        raise DomainError("p must lie strictly between 0 and 1")


def h1_closed(p) -> float:
    """Coefficient of ``n^{-1/2}`` in ``q = 1/2 + h1 n^{-1/2} + ...``."""
    _check_p(p)
    p = float(p)
    return (2 - p) / (3 * SQRT_2PI * math.sqrt(p * (1 - p)))


def h3_closed(p) -> float:
    """Coefficient of ``n^{-3/2}``."""
    _check_p(p)
    p = float(p)
    return (2 - p) * (p * p + 23 * p - 23) / (540 * SQRT_2PI * (p * (1 - p)) ** 1.5)


def h1_prime(p) -> float:
    _check_p(p)
    p = float(p)
    return (3 * p - 2) / (6 * SQRT_2PI * (p * (1 - p)) ** 1.5)


def _h1_mp(p):
    return (2 - p) / (3 * mpmath.sqrt(2 * mpmath.pi) * mpmath.sqrt(p * (1 - p)))


def _h3_mp(p):
    return (2 - p) * (p * p + 23 * p - 23) / (540 * mpmath.sqrt(2 * mpmath.pi) * (p * (1 - p)) ** 1.5)


def _richardson_derivative(f, x, order: int, h0=Fraction(1, 64), levels: int = 8):
    """Central-difference derivative with Richardson extrapolation in ``h^2``."""
    with mpmath.workdps(60):
        x = mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else mpmath.mpf(x)

        def central(h):
            if order == 1:
                return (f(x + h) - f(x - h)) / (2 * h)
            if order == 2:
                return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)
            raise DomainError("order must be 1 or 2")

        table = []
        h = mpmath.mpf(h0.numerator) / h0.denominator
        for i in range(levels):
            row = [central(h)]
            for j in range(1, i + 1):
                row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (4 ** j - 1))
            table.append(row)
            h /= 2
        return table[-1][-1]


def h1_prime_numeric(p) -> float:
    _check_p(p)
    return float(_richardson_derivative(_h1_mp, Fraction(p), 1))


def critical_constants() -> dict:
    """``h1''(2/3)``, ``h3'(2/3)`` by extrapolated finite differences, and their ratio."""
    a = _richardson_derivative(_h1_mp, Fraction(2, 3), 2)
    b = _richardson_derivative(_h3_mp, Fraction(2, 3), 1)
    return {"h1_pp_23": float(a), "h3_p_23": float(b), "ratio": float(b / a)}


@lru_cache(maxsize=None)
def _bernoulli_mean_expansion(p: Fraction, k: int, strict: bool):
    return mean_expansion(bernoulli_distribution(p, k + 2), k, strict)


@dataclass(frozen=True)
class CoefficientSet:
    p: Fraction
    h1: float
    h3: float
    h5: float
    h1_prime: float


def coefficient_set(p) -> CoefficientSet:
    """Closed forms for ``h1, h3, h1'``; ``h5`` read off the generic expansion."""
    p = Fraction(p)
    _check_p(p)
    exp6 = _bernoulli_mean_expansion(p, 6, False)
    return CoefficientSet(p=p, h1=h1_closed(p), h3=h3_closed(p), h5=exp6.coefficient(5), h1_prime=h1_prime(p))


# ---------------------------------------------------------------------------
# Difference predictor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Prediction:
    predicted: float
    regime: str


@lru_cache(maxsize=None)
def _poisson_expansion(strict: bool):
    return mean_expansion(poisson1_analytic(6), 4, strict)


def predict_q_difference(n: int, m: int) -> Prediction:
    """Leading-order prediction of ``q_{m+1} - q_m``.

    Regimes (boundary constants are diagnostic choices): Poisson
    approximation when ``m`` or ``n - m`` is below ``2 log^2 n``; the
    second-order Taylor form within ``CRITICAL_HALF_WIDTH`` of ``2n/3``; the
    ``h1'`` form elsewhere.
    """
    if n < 2 or not 0 <= m < n:
        raise DomainError("need n >= 2 and 0 <= m < n")
    cut = 2 * math.log(n) ** 2
    if m < cut:
        f = _poisson_expansion(False)

        def q(j):
            return 1.0 if j == 0 else f.value(j)

        return Prediction(q(m + 1) - q(m), "low_poisson")
    if m > n - cut:
        g = _poisson_expansion(True)

        def q_strict(j):
            return 0.0 if j == 0 else g.value(j)

        # q_{m+1} - q_m = q'_{n-m} - q'_{n-m-1}
        j = n - m
        return Prediction(q_strict(j) - q_strict(j - 1), "high_poisson")
    offset = m - Fraction(2 * n, 3)
    if abs(offset) <= CRITICAL_HALF_WIDTH:
        h1pp = 27 / (8 * math.sqrt(math.pi))
        h3p = 9 / (40 * math.sqrt(math.pi))
        return Prediction((h1pp * float(offset + Fraction(1, 2)) + h3p) * n ** -2.5, "critical")
    pbar = (m + 0.5) / n
    regime = "bulk_lower" if 2 * m <= n else ("bulk_middle" if offset < 0 else "bulk_upper")
    return Prediction(h1_prime(pbar) * n ** -1.5, regime)


# ---------------------------------------------------------------------------
# Exact verification
# ---------------------------------------------------------------------------


def target_m(n: int) -> int:
    """Integer nearest ``2n/3``; ``frac(2n/3)`` is never 1/2, so no ties."""
    return (2 * n + 1) // 3


def _sign(x) -> int:
    return (x > 0) - (x < 0)


@dataclass
class ChvatalReport:
    """Per-``n`` verdict from exact comparison of all ``q_m``."""

    n: int
    argmin_m: int
    target_m: int
    sign_pattern: tuple
    unimodal: bool
    matches_conjecture: bool
    argmin_tie: bool = False
    q_values: Optional[tuple] = field(default=None, repr=False)

    @property
    def sign_changes(self) -> list:
        s = self.sign_pattern
        return [m for m in range(1, len(s)) if s[m] != s[m - 1]]

    @property
    def sign_exceptions(self) -> list:
        """``m`` where ``sign(q_{m+1} - q_m) != sign(m + 1/2 - 2n/3)``."""
        return [m for m, s in enumerate(self.sign_pattern) if s != _sign(6 * m + 3 - 4 * self.n)]

    @property
    def rigollet_tong(self) -> bool:
        """``q_{m-1} > q_m`` for every ``1 <= m <= n/2``."""
        return all(s == -1 for s in self.sign_pattern[: self.n // 2])

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "argmin": self.argmin_m,
            "target": self.target_m,
            "unimodal": self.unimodal,
            "matches": self.matches_conjecture,
            "sign_changes": self.sign_changes,
        }


def verify_chvatal(n: int, keep_values: bool = True) -> ChvatalReport:
    if n < 2:
        raise DomainError("n must be >= 2")
    nums = chvatal_numerators(n)
    signs = tuple(_sign(nums[m + 1] - nums[m]) for m in range(n))
    low = min(nums)
    minima = [m for m, v in enumerate(nums) if v == low]
    argmin = minima[0]
    first_pos = next((i for i, s in enumerate(signs) if s >= 0), n)
    unimodal = all(s == -1 for s in signs[:first_pos]) and all(s == 1 for s in signs[first_pos:])
    target = target_m(n)
    values = None
    if keep_values:
        den = n ** n
        values = tuple(Fraction(int(v), den) for v in nums)
    return ChvatalReport(
        n=n,
        argmin_m=argmin,
        target_m=target,
        sign_pattern=signs,
        unimodal=unimodal,
        matches_conjecture=(len(minima) == 1 and argmin == target),
        argmin_tie=len(minima) > 1,
        q_values=values,
    )


def _verify_lean(n: int) -> ChvatalReport:
    return verify_chvatal(n, keep_values=False)


def verify_range(ns: Iterable[int], jobs: int = 1) -> Iterator[ChvatalReport]:
    """Reports for each ``n`` in order, computed by ``jobs`` worker processes."""
    ns = list(ns)
    if jobs <= 1:
        for n in ns:
            yield _verify_lean(n)
        return
    import multiprocessing

    # largest n first keeps workers busy; results are reordered by n
    order = sorted(ns, reverse=True)
    with multiprocessing.get_context("spawn").Pool(jobs) as pool:
        done = {}
        it = pool.imap_unordered(_verify_lean, order)
        pending = list(ns)
        for report in it:
            done[report.n] = report
            while pending and pending[0] in done:
                yield done.pop(pending.pop(0))


def rigollet_tong_check(n: int) -> bool:
    """Exact check that ``q_{m-1} > q_m`` for all ``1 <= m <= n/2``."""
    if n < 2:
        raise DomainError("n must be >= 2")
    nums = chvatal_numerators(n)
    return all(nums[m - 1] > nums[m] for m in range(1, n // 2 + 1))


# ---------------------------------------------------------------------------
# Fixed-n scans in p
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    """One point of ``p -> P(Bi(n,p) <= np)``; ``left`` rows hold the limit
    from below at ``p = m/n``."""

    p: Fraction
    cdf_le: Fraction
    cdf_lt: Fraction
    rp_approx: float
    left: bool = False

    @property
    def rp_residual(self) -> float:
        return float(self.cdf_le) - self.rp_approx


def two_term_approx(n: int, p, frac_np: Optional[float] = None) -> float:
    """Two-term approximation ``1/2 + (4 - 2p - 6 frac(np)) / (6 sqrt(2 pi n p (1-p)))``."""
    p = Fraction(p)
    _check_p(p)
    if frac_np is None:
        np_ = n * p
        frac_np = float(np_ - math.floor(np_))
    pf = float(p)
    return 0.5 + (4 - 2 * pf - 6 * frac_np) / (6 * math.sqrt(2 * math.pi * n * pf * (1 - pf)))


def scan_fixed_n(n: int, p_grid: Iterable, include_left_limits: bool = False) -> list:
    """Exact ``P(Bi(n,p) <= np)`` and ``P(Bi(n,p) < np)`` over ``p_grid``.

    With ``include_left_limits`` every ``p = m/n`` in the grid is preceded by
    its limit from below, where ``floor(np)`` has not yet jumped.
    """
    rows = []
    for p in p_grid:
        p = Fraction(p)
        _check_p(p)
        np_ = n * p
        if include_left_limits and np_.denominator == 1:
            m = int(np_)
            below = binomial_cdf(n, p, m - 1)
            rows.append(ScanRow(p, below, below, two_term_approx(n, p, 1.0), left=True))
        le = binomial_cdf(n, p, math.floor(np_))
        lt = binomial_cdf(n, p, math.ceil(np_) - 1)
        rows.append(ScanRow(p, le, lt, two_term_approx(n, p)))
    return rows


def figure_grid(n: int, points: int) -> list:
    """``points`` equispaced rationals in (0, 1) merged with every ``m/n``."""
    if points < 2:
        raise DomainError("need at least 2 grid points")
    grid = {Fraction(i, points + 1) for i in range(1, points + 1)}
    grid |= {Fraction(m, n) for m in range(1, n)}
    return sorted(grid)
