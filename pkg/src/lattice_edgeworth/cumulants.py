"""Moments, cumulants and scale-free descriptors of integer-valued laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "LatticeDistribution",
    "CharFunctionReport",
    "moments_to_cumulants",
    "cumulants_to_moments",
    "cumulant_bound_constant",
    "lattice_stats",
    "bernoulli_distribution",
    "poisson1_analytic",
    "char_function_bound_check",
]


def moments_to_cumulants(raw_moments: Sequence) -> list:
    """Cumulants ``[g_1, ..., g_J]`` from raw moments ``[m_1, ..., m_J]``.

    Recursion: ``g_n = m_n - sum_{k=1}^{n-1} C(n-1, k-1) g_k m_{n-k}``.
    Exact for exact inputs.
    """
    m = [1] + list(raw_moments)
    g = [0]
    for n in range(1, len(m)):
        acc = m[n]
        for k in range(1, n):
            acc -= math.comb(n - 1, k - 1) * g[k] * m[n - k]
        g.append(acc)
    return g[1:]


def cumulants_to_moments(cumulants: Sequence) -> list:
    """Inverse of :func:`moments_to_cumulants`."""
    g = [0] + list(cumulants)
    m = [1]
    for n in range(1, len(g)):
        m.append(sum(math.comb(n - 1, k - 1) * g[k] * m[n - k] for k in range(1, n + 1)))
    return m[1:]


def _partitions_min2(j: int, smallest: int = 2):
    """Integer partitions of ``j`` into parts ``>= smallest`` (nondecreasing)."""
    if j == 0:
        yield ()
        return
    for part in range(smallest, j + 1):
        for rest in _partitions_min2(j - part, part):
            yield (part,) + rest


@lru_cache(maxsize=None)
def cumulant_bound_constant(j: int) -> int:
    """Constant ``C_j`` with ``|gamma_j| <= C_j beta_j``.

    The cumulant is a sum over set partitions of ``{1..j}`` without singleton
    blocks of ``(-1)^(b-1) (b-1)! prod mu_|B|`` (``b`` blocks, central moments
    ``mu``); by Hoelder each product is at most ``beta_j`` in absolute value, so
    ``C_j`` is the sum of ``(b-1)!`` over those partitions.
    """
    if j < 2:
        raise DomainError("j must be >= 2")
    total = 0
    for parts in _partitions_min2(j):
        count = math.factorial(j)
        for p in parts:
            count //= math.factorial(p)
        for p in set(parts):
            count //= math.factorial(parts.count(p))
        total += count * math.factorial(len(parts) - 1)
    return total


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    """Descriptor of an integer-valued random variable.

    ``cumulants`` and ``abs_moments`` are keyed by order. For finite rational
    pmfs everything up to ``order`` is exact; the analytic Poisson(1)
    descriptor has no pmf table and exposes only what the expansions need.
    """

    name: str
    order: int
    mean: object
    variance: object
    cumulants: Mapping[int, object]
    abs_moments: Mapping[int, object]
    span: int
    pmf: Optional[tuple] = None
    family: str = "pmf"
    _probs: dict = field(default_factory=dict, repr=False)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def lam(self, j: int) -> float:
        """``lambda_j = gamma_j / sigma^j``."""
        return float(self.cumulants[j]) / self.sigma ** j

    def Lam(self, j: int) -> float:
        """``Lambda_j = beta_j / sigma^j``."""
        return float(self.abs_moments[j]) / self.sigma ** j

    def prob(self, k: int):
        if self.family == "poisson1":
            return math.exp(-1.0) / math.factorial(k) if k >= 0 else 0.0
        return self._probs.get(k, 0)

    def char_function(self, t):
        """``E exp(i t X)``; accepts scalars or numpy arrays."""
        if self.family == "poisson1":
            return np.exp(np.exp(1j * np.asarray(t)) - 1.0)
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t, dtype=complex)
        for x, p in self.pmf:
            acc = acc + float(p) * np.exp(1j * t * x)
        return acc

    def two_point_mass_constant(self) -> float:
        """Largest ``c`` with ``min(P(X=0), P(X=1)) >= c sigma^2``."""
        return float(min(self.prob(0), self.prob(1))) / float(self.variance)


def _normalize_pmf(pmf) -> dict:
    items = pmf.items() if isinstance(pmf, Mapping) else pmf
    out: dict = {}
    for x, p in items:
        if int(x) != x:
            raise DomainError(f"support point {x!r} is not an integer")
        if isinstance(p, str):
            p = Fraction(p)
        if p < 0:
            raise DomainError("negative probability")
        if p == 0:
            continue
        out[int(x)] = out.get(int(x), 0) + p
    total = sum(out.values())
    exact = all(isinstance(p, (int, Fraction)) for p in out.values())
    if (exact and total != 1) or (not exact and abs(total - 1) > 1e-12):
        raise DomainError(f"probabilities sum to {total}, not 1")
    return dict(sorted(out.items()))


def lattice_stats(pmf, J: int, name: str = "pmf") -> LatticeDistribution:
    """Build a :class:`LatticeDistribution` from a finite pmf.

    ``pmf`` is a mapping ``value -> probability`` or an iterable of pairs.
    """
    if J < 2:
        raise DomainError("J must be >= 2")
    probs = _normalize_pmf(pmf)
    if len(probs) < 2:
        raise DomainError("support must have at least two points (sigma > 0)")
    mean = sum(x * p for x, p in probs.items())
    central = [sum(p * (x - mean) ** j for x, p in probs.items()) for j in range(1, J + 1)]
    absolute = {j: sum(p * abs(x - mean) ** j for x, p in probs.items()) for j in range(1, J + 1)}
    cums = moments_to_cumulants(central)
    cumulants = {1: mean}
    cumulants.update({j: cums[j - 1] for j in range(2, J + 1)})
    xs = list(probs)
    span = reduce(math.gcd, (x - xs[0] for x in xs[1:]))
    return LatticeDistribution(
        name=name,
        order=J,
        mean=mean,
        variance=central[1],
        cumulants=cumulants,
        abs_moments=absolute,
        span=span,
        pmf=tuple(probs.items()),
        _probs=probs,
    )


def _as_probability(p) -> Fraction:
    if isinstance(p, str):
        p = Fraction(p)
    elif isinstance(p, float):
        p = Fraction(p)
    return p


def bernoulli_distribution(p, J: int = 8) -> LatticeDistribution:
    """``Be(p)``; pass ``p`` as a Fraction (or ``"num/den"``) to stay exact."""
    p = _as_probability(p)
    if not 0 < p < 1:
        raise DomainError("p must lie strictly between 0 and 1")
    return lattice_stats({0: 1 - p, 1: p}, J, name=f"Be({p})")


def poisson1_analytic(J: int = 8) -> LatticeDistribution:
    """Analytic descriptor of ``Po(1)``: every cumulant equals 1."""
    if J < 2:
        raise DomainError("J must be >= 2")
    cumulants = {j: Fraction(1) for j in range(1, J + 1)}
    central = cumulants_to_moments([0] + [1] * (J - 1))
    absolute: dict = {}
    for j in range(1, J + 1):
        if j % 2 == 0:
            absolute[j] = Fraction(central[j - 1])
        else:
            # E|X-1|^j = sum_k e^{-1} |k-1|^j / k!; terms are negligible past k ~ 60 + 4j
            absolute[j] = math.fsum(
                math.exp(-1.0 - math.lgamma(k + 1) + (j * math.log(abs(k - 1)) if k != 1 else -math.inf))
                for k in range(0, 60 + 4 * j)
            )
    return LatticeDistribution(
        name="Po(1)",
        order=J,
        mean=Fraction(1),
        variance=Fraction(1),
        cumulants=cumulants,
        abs_moments=absolute,
        span=1,
        family="poisson1",
    )


@dataclass(frozen=True)
class CharFunctionReport:
    a: float
    worst_margin: float
    worst_t: float
    holds: bool


def char_function_bound_check(dist: LatticeDistribution, a: float, t_grid: Iterable[float]) -> CharFunctionReport:
    """Check ``|E e^{itX}| <= 1 - (a / pi^2) t^2`` on ``t_grid`` within ``|t| <= pi``.

    Requires ``P(X=0) >= a`` and ``P(X=1) >= a``.
    """
    if a < 0 or dist.prob(0) < a or dist.prob(1) < a:
        raise DomainError("need P(X=0) >= a and P(X=1) >= a")
    t = np.asarray(list(t_grid), dtype=float)
    if np.any(np.abs(t) > math.pi + 1e-15):
        raise DomainError("grid must lie in [-pi, pi]")
    bound = 1.0 - float(a) / math.pi ** 2 * t ** 2
    margin = bound - np.abs(dist.char_function(t))
    i = int(np.argmin(margin))
    # equality at t = 0 is attained exactly; allow rounding there
    holds = bool(np.all(margin >= -1e-14))
    return CharFunctionReport(a=float(a), worst_margin=float(margin[i]), worst_t=float(t[i]), holds=holds)
