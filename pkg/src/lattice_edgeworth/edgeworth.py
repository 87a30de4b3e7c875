"""Edgeworth expansions with lattice corrections for sums of i.i.d.
integer-valued variables.

Notation follows the usual one: ``lambda_j = gamma_j / sigma^j``, the
polynomials ``P_j(u) = sum_r pi_{jr} u^r`` come from exponentiating
``sum_i lambda_{i+2} u^{i+2} z^i / (i+2)!``, and
``Q_j(x) = -phi(x) sum_r pi_{jr} He_{r-1}(x)``.

The coefficient tables are built exactly.  Because ``pi_{jr}`` is only
nonzero for ``r = j (mod 2)``, ``sigma^j pi_{jr}`` is a rational function of
the cumulants and of ``sigma^2``; the model stores that scaled table, so for
rational laws every ``Q_j`` is exact up to the single factor ``sigma^-j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .cumulants import LatticeDistribution
from .errors import DomainError
from .series import (
    Polynomial,
    TruncatedUSeries,
    bernoulli_numbers,
    bernoulli_polynomial,
    hermite,
    series_exp,
)

__all__ = [
    "GaussCombo",
    "EdgeworthModel",
    "ExpansionEvaluation",
    "MeanExpansion",
    "ResidualScan",
    "build_model",
    "edgeworth_polynomials",
    "q_functions",
    "h_function",
    "lattice_cdf_approx",
    "uniform_regime",
    "integer_mean_expansion",
    "mean_expansion",
    "default_oracle",
    "scan_grid",
    "residual_scan",
    "loglog_slope",
]

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _phi(x):
    return np.exp(-0.5 * np.square(x)) * INV_SQRT_2PI


class GaussCombo:
    """The function ``a * Phi(x) + phi(x) * P(x)``.

    Closed under differentiation:
    ``(a Phi + phi P)' = phi (a + P' - x P)``.
    """

    __slots__ = ("a", "poly")

    def __init__(self, a=0, poly: Optional[Polynomial] = None):
        self.a = a
        self.poly = poly if poly is not None else Polynomial()

    def __repr__(self) -> str:
        return f"GaussCombo(a={self.a!r}, poly={self.poly!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, GaussCombo):
            return NotImplemented
        return self.a == other.a and self.poly == other.poly

    def __add__(self, other: "GaussCombo") -> "GaussCombo":
        return GaussCombo(self.a + other.a, self.poly + other.poly)

    def __neg__(self) -> "GaussCombo":
        return GaussCombo(-self.a, -self.poly)

    def __sub__(self, other: "GaussCombo") -> "GaussCombo":
        return self + (-other)

    def scale(self, c) -> "GaussCombo":
        return GaussCombo(self.a * c, self.poly * c)

    def derivative(self, order: int = 1) -> "GaussCombo":
        g = self
        for _ in range(order):
            p = g.poly.derivative() - g.poly.shift_degree(1) + g.a
            g = GaussCombo(0, p)
        return g

    def to_float(self) -> "GaussCombo":
        return GaussCombo(float(self.a), self.poly.to_float())

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return float(self.a) * ndtr(x) + _phi(x) * self.poly(x)
        x = float(x)
        return float(self.a) * float(ndtr(x)) + float(_phi(x)) * float(self.poly.to_float()(x))


@dataclass(frozen=True)
class ExpansionEvaluation:
    x: float
    approx: float
    exact: float
    strict: bool = False

    @property
    def residual(self) -> float:
        return self.approx - self.exact


@dataclass(eq=False)
class EdgeworthModel:
    """Order-``k`` expansion artifacts for one distribution.

    ``pi_scaled[(j, r)] = sigma^j * pi_{jr}`` and ``q_scaled[j] = sigma^j Q_j``
    (with ``q_scaled[0] = Phi``) are exact for rational laws.
    """

    dist: LatticeDistribution
    k: int
    pi_scaled: dict
    q_scaled: list
    _float_q: dict = field(default_factory=dict, repr=False)

    @property
    def sigma(self) -> float:
        return self.dist.sigma

    def pi(self, j: int, r: int) -> float:
        return float(self.pi_scaled.get((j, r), 0)) / self.sigma ** j

    def p_polynomial(self, j: int) -> Polynomial:
        """``P_j(u)`` with float coefficients."""
        return Polynomial(self.pi(j, r) for r in range(3 * j + 1))

    def q(self, j: int) -> GaussCombo:
        """``Q_j`` with float coefficients."""
        if j not in self._float_q:
            self._float_q[j] = self.q_scaled[j].to_float().scale(self.sigma ** -j)
        return self._float_q[j]

    def h(self, n: int, order: Optional[int] = None) -> GaussCombo:
        """``H_{n,order} = Phi + sum_{j<=order} n^{-j/2} Q_j``."""
        order = self.k if order is None else order
        if order > self.k:
            raise DomainError(f"model built to order {self.k}, asked for {order}")
        g = GaussCombo(1.0, Polynomial())
        for j in range(1, order + 1):
            g = g + self.q(j).scale(n ** (-j / 2))
        return g


def _scaled_pi_table(dist: LatticeDistribution, k: int) -> dict:
    if k < 1:
        raise DomainError("k must be >= 1")
    if dist.order < k + 2 or any(j not in dist.cumulants for j in range(2, k + 3)):
        raise DomainError(f"cumulants up to order {k + 2} are required")
    gam = dist.cumulants
    var = dist.variance
    # S(v, z) with v = u / sigma, so coefficients involve gamma_j only
    s = TruncatedUSeries(
        k, [Polynomial()] + [Polynomial.monomial(i + 2, gam[i + 2] / math.factorial(i + 2))
                             for i in range(1, k + 1)],
    )
    e = series_exp(s)
    table = {}
    for j in range(1, k + 1):
        for r, c in enumerate(e[j]):
            if c == 0:
                continue
            if (r - j) % 2:
                raise AssertionError(f"pi_{j},{r} nonzero with r - j odd")
            # sigma^j pi_{jr} = pihat_{jr} / (sigma^2)^((r-j)/2)
            table[(j, r)] = c / var ** ((r - j) // 2)
    return table


def build_model(dist: LatticeDistribution, k: int) -> EdgeworthModel:
    table = _scaled_pi_table(dist, k)
    qs = [GaussCombo(1, Polynomial())]
    for j in range(1, k + 1):
        poly = Polynomial()
        for r in range(j + 2, 3 * j + 1):
            c = table.get((j, r), 0)
            if c:
                poly = poly + hermite(r - 1) * c
        qs.append(GaussCombo(0, -poly))
    return EdgeworthModel(dist=dist, k=k, pi_scaled=table, q_scaled=qs)


def edgeworth_polynomials(dist: LatticeDistribution, k: int) -> dict:
    """Table ``{(j, r): pi_{jr}}`` (floats) of the nonzero coefficients, ``1 <= j <= k``."""
    model = build_model(dist, k)
    return {key: model.pi(*key) for key in sorted(model.pi_scaled)}


def q_functions(model: EdgeworthModel) -> list:
    """``[Q_0, ..., Q_k]`` as float GaussCombos, ``Q_0 = Phi``."""
    return [model.q(j) for j in range(model.k + 1)]


def h_function(model: EdgeworthModel, n: int, order: Optional[int] = None) -> GaussCombo:
    if n < 1:
        raise DomainError("n must be >= 1")
    return model.h(n, order)


def uniform_regime(dist: LatticeDistribution, n: int) -> bool:
    """Whether ``sigma sqrt(n) >= log n`` (the regime with a uniform error bound)."""
    return dist.sigma * math.sqrt(n) >= math.log(n)


def _psi_array(r: int, s: np.ndarray, left: bool) -> np.ndarray:
    f = s - np.floor(s)
    if r == 1:
        out = 0.5 - f
        if left:
            out = np.where(f == 0, out - 1.0, out)
        return out
    return -bernoulli_polynomial(r).to_float()(f) / math.factorial(r)


class _LatticeApprox:
    """Precomputed pieces of the lattice-corrected expansion at fixed ``n``."""

    def __init__(self, model: EdgeworthModel, n: int, variant: str = "simplified"):
        if variant not in ("simplified", "full"):
            raise DomainError("variant must be 'simplified' or 'full'")
        if model.dist.span != 1:
            raise DomainError("the lattice expansion needs span 1")
        self.model, self.n, self.variant = model, n, variant
        self.sigma = model.sigma
        self.base = model.h(n)
        self.derivs = []
        for ell in range(1, model.k + 1):
            src = model.h(n, model.k - ell) if variant == "simplified" else self.base
            self.derivs.append(src.derivative(ell))

    def lattice_arg(self, x: np.ndarray) -> np.ndarray:
        return float(self.n * self.model.dist.mean) + x * self.sigma * math.sqrt(self.n)

    def __call__(self, x, s=None, strict: bool = False):
        x = np.asarray(x, dtype=float)
        s = self.lattice_arg(x) if s is None else np.asarray(s, dtype=float)
        val = self.base(x)
        for ell, d in enumerate(self.derivs, start=1):
            coef = (-1) ** (ell - 1) * (self.n ** (-ell / 2)) * self.sigma ** (-ell)
            val = val + coef * _psi_array(ell, s, strict and ell == 1) * d(x)
        return val


def lattice_cdf_approx(model: EdgeworthModel, n: int, x: float, variant: str = "simplified",
                       strict: bool = False) -> float:
    """Lattice-corrected approximation of ``P(S_n <= n mu + x sigma sqrt(n))``.

    ``variant="simplified"`` pairs ``psi_l`` with derivatives of
    ``H_{n,k-l}``; ``"full"`` uses ``H_{n,k}`` throughout.  ``strict`` swaps
    ``psi_1`` for its left limit, approximating ``P(S_n < ...)``.
    """
    return float(_LatticeApprox(model, n, variant)(np.array([x]), strict=strict)[0])


# ---------------------------------------------------------------------------
# Integer-mean specialization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanExpansion:
    """``P(S_n <= n mu) ~ 1/2 + sum_m c_m n^{-m/2}`` for integer ``n mu``.

    ``c_m = phi(0) * rational[m] / sigma^m``; ``rational[0]`` is unused.
    """

    rational: tuple
    sigma: float
    strict: bool

    @property
    def k(self) -> int:
        return len(self.rational) - 1

    def coefficient(self, m: int) -> float:
        if m == 0:
            return 0.5
        return INV_SQRT_2PI * float(self.rational[m]) / self.sigma ** m

    def value(self, n: int, order: Optional[int] = None) -> float:
        order = self.k if order is None else order
        return 0.5 + math.fsum(self.coefficient(m) * n ** (-m / 2) for m in range(1, order + 1))


def mean_expansion(dist: LatticeDistribution, k: int, strict: bool = False,
                   model: Optional[EdgeworthModel] = None) -> MeanExpansion:
    """Assemble the integer-mean expansion as a polynomial in ``n^{-1/2}``.

    ``c_m = sum_{l=0}^m sigma^{-l} (-1)^l B_l / l! * Q_{m-l}^{(l)}(0)``; the
    strict version flips the sign of the ``l = 1`` terms.
    """
    model = model or build_model(dist, k)
    if model.k < k:
        raise DomainError("model order too small")
    bern = bernoulli_numbers(k)
    rational = [Fraction(0)]
    for m in range(1, k + 1):
        acc = 0
        for ell in range(0, m + 1):
            j = m - ell
            factor = (-1) ** ell * bern[ell] / math.factorial(ell)
            if ell == 1 and strict:
                factor = -factor
            if factor == 0:
                continue
            d = model.q_scaled[j].derivative(ell)
            # for (j, l) != (0, 0) the Phi part is gone, leaving phi(0) * poly(0)
            acc += factor * d.poly[0]
        rational.append(acc)
    return MeanExpansion(rational=tuple(rational), sigma=dist.sigma, strict=strict)


def integer_mean_expansion(dist: LatticeDistribution, n: int, k: int, strict: bool = False) -> float:
    """Expansion of ``P(S_n <= n mu)`` (``<`` if strict) when ``n mu`` is an integer."""
    if dist.span != 1:
        raise DomainError("the lattice expansion needs span 1")
    nm = n * Fraction(dist.mean)
    if nm.denominator != 1:
        raise DomainError(f"n * mean = {nm} is not an integer")
    return mean_expansion(dist, k, strict).value(n)


# ---------------------------------------------------------------------------
# Residual scans
# ---------------------------------------------------------------------------


def default_oracle(dist: LatticeDistribution, n: int) -> Callable[[int], float]:
    """``t -> P(S_n <= t)`` from an exact (Bernoulli), certified (Poisson(1)) or
    float-convolved (general pmf) CDF table."""
    from .exactprob import binomial_cdf_table, poisson_cdf_table

    if dist.family == "poisson1":
        t_hi = int(n + 12 * math.sqrt(n) + 60)
        table = poisson_cdf_table(n, t_hi)
        offset = 0
    elif dist.pmf is not None and [x for x, _ in dist.pmf] == [0, 1]:
        table = binomial_cdf_table(n, Fraction(dict(dist.pmf)[1]))
        offset = 0
    elif dist.pmf is not None:
        xs = [x for x, _ in dist.pmf]
        offset = min(xs) * n
        base = np.zeros(max(xs) - min(xs) + 1)
        for x, p in dist.pmf:
            base[x - min(xs)] = float(p)
        pmf = np.array([1.0])
        for _ in range(n):
            pmf = np.convolve(pmf, base)
        table = list(np.cumsum(pmf))
    else:
        raise DomainError("no oracle available for this distribution")

    def oracle(t: int) -> float:
        i = t - offset
        if i < 0:
            return 0.0
        if i >= len(table):
            return 1.0
        return table[i]

    return oracle


@dataclass
class ResidualScan:
    n: int
    k: int
    qualified: bool
    sup_residual: float
    per_point: list

    @property
    def worst(self) -> ExpansionEvaluation:
        return max(self.per_point, key=lambda e: abs(e.residual))


def scan_grid(dist: LatticeDistribution, n: int, points: int = 401, half_width: float = 5.0):
    """Scan points as ``(x, lattice argument, strict)``.

    A uniform grid on ``[-half_width, half_width]`` plus both one-sided
    limits at every lattice point whose ``x`` falls in that range.
    """
    mu = Fraction(dist.mean)
    sd = dist.sigma * math.sqrt(n)
    centre = n * mu
    out = []
    for x in np.linspace(-half_width, half_width, points):
        out.append((float(x), float(centre) + float(x) * sd, False))
    t_lo = math.ceil(centre - half_width * sd)
    t_hi = math.floor(centre + half_width * sd)
    for t in range(t_lo, t_hi + 1):
        x = float(t - centre) / sd
        out.append((x, float(t), False))
        out.append((x, float(t), True))
    return out


def residual_scan(model: EdgeworthModel, n: int, oracle: Optional[Callable[[int], float]] = None,
                  grid=None, variant: str = "simplified") -> ResidualScan:
    """Sup over a scan grid of ``|approximation - P(S_n <= ...)|``.

    ``oracle(t)`` must return ``P(S_n <= t)`` for integer ``t``; lattice points
    are checked from both sides (``strict`` rows compare with ``P(S_n < t)``).
    """
    dist = model.dist
    oracle = oracle or default_oracle(dist, n)
    grid = grid if grid is not None else scan_grid(dist, n)
    approx = _LatticeApprox(model, n, variant)
    xs = np.array([g[0] for g in grid])
    ss = np.array([g[1] for g in grid])
    strict = np.array([g[2] for g in grid])
    vals = np.where(strict, approx(xs, ss, strict=True), approx(xs, ss, strict=False))
    evals = []
    for x, s, st, v in zip(xs, ss, strict, vals):
        t = math.floor(s)
        if st:
            t -= 1
        evals.append(ExpansionEvaluation(x=float(x), approx=float(v), exact=float(oracle(t)), strict=bool(st)))
    sup = max(abs(e.residual) for e in evals)
    return ResidualScan(n=n, k=model.k, qualified=uniform_regime(dist, n), sup_residual=sup, per_point=evals)


def loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
