"""Exact polynomial kernel: Hermite and Bernoulli polynomials, the periodic
functions psi_r, and exponentials of truncated bivariate power series.

Coefficients are kept as :class:`fractions.Fraction` whenever the inputs are
rational; floats are accepted too and simply propagate.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError

Number = Union[int, Fraction, float]

__all__ = [
    "Polynomial",
    "TruncatedUSeries",
    "hermite",
    "bernoulli_numbers",
    "bernoulli_polynomial",
    "frac",
    "psi",
    "psi_fourier",
    "series_exp",
]


def _is_zero(c) -> bool:
    return c == 0


class Polynomial:
    """Dense univariate polynomial; ``coeffs[i]`` multiplies ``x**i``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Number] = ()):
        cs = list(coeffs)
        while cs and _is_zero(cs[-1]):
            cs.pop()
        self.coeffs: tuple = tuple(cs)

    @classmethod
    def constant(cls, c: Number) -> "Polynomial":
        return cls([c])

    @classmethod
    def monomial(cls, degree: int, c: Number = 1) -> "Polynomial":
        return cls([0] * degree + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, i: int):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return 0

    def __iter__(self):
        return iter(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction, float)):
            return self.coeffs == Polynomial([other]).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "Polynomial(0)"
        terms = []
        for i, c in enumerate(self.coeffs):
            if _is_zero(c):
                continue
            terms.append(f"({c})" + ("" if i == 0 else "*x" if i == 1 else f"*x^{i}"))
        return "Polynomial(" + " + ".join(terms) + ")"

    def __neg__(self) -> "Polynomial":
        return Polynomial(-c for c in self.coeffs)

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial([other])
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial(self[i] + other[i] for i in range(n))

    __radd__ = __add__

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial([other])
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(c * other for c in self.coeffs)
        if not self.coeffs or not other.coeffs:
            return Polynomial()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if _is_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def shift_degree(self, k: int) -> "Polynomial":
        """Multiply by ``x**k``."""
        if not self.coeffs:
            return self
        return Polynomial([0] * k + list(self.coeffs))

    def derivative(self) -> "Polynomial":
        return Polynomial(i * c for i, c in enumerate(self.coeffs) if i > 0)

    def map(self, f) -> "Polynomial":
        return Polynomial(f(c) for c in self.coeffs)

    def to_float(self) -> "Polynomial":
        return self.map(float)

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            acc = np.zeros_like(x, dtype=float)
            for c in reversed(self.coeffs):
                acc = acc * x + float(c)
            return acc
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


class TruncatedUSeries:
    """Power series in ``z`` truncated after ``z**order``, with polynomial
    coefficients in ``u``."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: Sequence[Polynomial] = ()):
        if order < 0:
            raise ValueError("order must be nonnegative")
        cs = [c if isinstance(c, Polynomial) else Polynomial([c]) for c in coeffs]
        cs = cs[: order + 1]
        cs += [Polynomial()] * (order + 1 - len(cs))
        self.order = order
        self.coeffs: tuple = tuple(cs)

    @classmethod
    def one(cls, order: int) -> "TruncatedUSeries":
        return cls(order, [Polynomial([1])])

    def __getitem__(self, j: int) -> Polynomial:
        return self.coeffs[j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedUSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        return f"TruncatedUSeries(order={self.order}, coeffs={list(self.coeffs)!r})"

    def _check(self, other: "TruncatedUSeries") -> None:
        if other.order != self.order:
            raise ValueError("truncation orders differ")

    def __add__(self, other: "TruncatedUSeries") -> "TruncatedUSeries":
        self._check(other)
        return TruncatedUSeries(self.order, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "TruncatedUSeries":
        return TruncatedUSeries(self.order, [-a for a in self.coeffs])

    def __sub__(self, other: "TruncatedUSeries") -> "TruncatedUSeries":
        return self + (-other)

    def __mul__(self, other: "TruncatedUSeries") -> "TruncatedUSeries":
        self._check(other)
        K = self.order
        out = [Polynomial() for _ in range(K + 1)]
        for i in range(K + 1):
            if self.coeffs[i].is_zero():
                continue
            for j in range(K + 1 - i):
                out[i + j] = out[i + j] + self.coeffs[i] * other.coeffs[j]
        return TruncatedUSeries(K, out)


def series_exp(s: TruncatedUSeries) -> TruncatedUSeries:
    """``exp(s)`` truncated at the order of ``s``.

    Uses ``E' = S' E`` in ``z``, i.e. ``j E_j = sum_{i=1..j} i S_i E_{j-i}``.
    The constant coefficient of ``s`` must vanish.
    """
    if not s[0].is_zero():
        raise DomainError("series_exp requires a zero constant term")
    K = s.order
    e = [Polynomial([1])]
    for j in range(1, K + 1):
        acc = Polynomial()
        for i in range(1, j + 1):
            if not s[i].is_zero():
                acc = acc + s[i] * e[j - i] * i
        e.append(acc * Fraction(1, j))
    return TruncatedUSeries(K, e)


@lru_cache(maxsize=None)
def hermite(r: int) -> Polynomial:
    """Probabilists' Hermite polynomial ``He_r``."""
    if r < 0:
        raise DomainError("r must be nonnegative")
    if r == 0:
        return Polynomial([1])
    if r == 1:
        return Polynomial([0, 1])
    return hermite(r - 1).shift_degree(1) - hermite(r - 2) * (r - 1)


@lru_cache(maxsize=None)
def _bernoulli_tuple(r_max: int) -> tuple:
    b = [Fraction(1)]
    for r in range(1, r_max + 1):
        # sum_{j=0}^{r} C(r+1, j) B_j = 0
        acc = sum(math.comb(r + 1, j) * b[j] for j in range(r))
        b.append(-acc / (r + 1))
    return tuple(b)


def bernoulli_numbers(r_max: int) -> list:
    """``[B_0, ..., B_{r_max}]`` with ``B_1 = -1/2``."""
    if r_max < 0:
        raise DomainError("r_max must be nonnegative")
    return list(_bernoulli_tuple(r_max))


@lru_cache(maxsize=None)
def bernoulli_polynomial(r: int) -> Polynomial:
    if r < 0:
        raise DomainError("r must be nonnegative")
    b = _bernoulli_tuple(r)
    return Polynomial(math.comb(r, r - i) * b[r - i] for i in range(r + 1))


def frac(x):
    """Fractional part in ``[0, 1)``; exact for ints and Fractions."""
    return x - math.floor(x)


def psi(r: int, x, left: bool = False):
    """Periodic Bernoulli function ``psi_r(x) = -B_r(frac(x)) / r!``.

    ``psi_1`` is the right-continuous sawtooth ``1/2 - frac(x)``; with
    ``left=True`` the left limit is returned instead, which differs only at
    integers (by ``-1``).
    """
    if r < 1:
        raise DomainError("r must be >= 1")
    f = frac(x)
    if r == 1:
        val = Fraction(1, 2) - f if isinstance(f, (int, Fraction)) else 0.5 - f
        if left and f == 0:
            val = val - 1
        return val
    if isinstance(f, (int, Fraction)):
        return -bernoulli_polynomial(r)(Fraction(f)) / math.factorial(r)
    return -bernoulli_polynomial(r).to_float()(f) / math.factorial(r)


def psi_fourier(r: int, x: float, kmax: int) -> tuple[float, float]:
    """Partial Fourier sum of ``psi_r`` over ``0 < |k| <= kmax``.

    Returns ``(value, tail_bound)``; the bound is only meaningful for
    ``r >= 2``, where the series converges absolutely.
    """
    k = np.arange(1, kmax + 1, dtype=float)
    w = 2.0 * np.pi * k
    # k and -k terms pair up to 2 Re(e^{i w x} / (i w)^r)
    terms = np.exp(1j * w * x) / (1j * w) ** r
    value = float(2.0 * np.sum(terms.real))
    tail = 2.0 / ((2.0 * np.pi) ** r * (r - 1) * kmax ** (r - 1)) if r >= 2 else math.inf
    return value, tail
