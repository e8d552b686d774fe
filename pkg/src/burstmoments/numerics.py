"""Combinatorial primitives and Poisson expectations with a certified tail.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from .errors import BinomialOverflow, InvalidParam, NonConvergent

DEFAULT_REL_TOL = 1e-12

# Largest k whose binomial weights C(k, j) are all exact float64 integers.
MAX_DIFFERENCE_ORDER = max(k for k in range(200) if math.comb(k, k // 2) <= 2**53)

_MAX_WIDTH_FACTOR = 400


@dataclass(frozen=True)
class Growth:
    """Envelope on |f(a)| used to bound the discarded Poisson tail.

    ``kind`` is one of ``"bounded"``, ``"polynomial"`` or ``"unknown"``.
    The envelope is ``scale * (a + shift) ** degree`` and must dominate
    |f(a)| for every a >= 0; bounded functions use ``degree = 0``.
    """

    kind: str
    scale: float = 1.0
    degree: int = 0
    shift: float = 1.0

    @classmethod
    def bounded(cls, bound: float) -> Growth:
        return cls("bounded", float(bound), 0, 1.0)

    @classmethod
    def polynomial(cls, degree: int, scale: float = 1.0, shift: float = 1.0) -> Growth:
        return cls("polynomial", float(scale), int(degree), float(shift))

    @classmethod
    def unknown(cls) -> Growth:
        return cls("unknown")

    def envelope(self, a):
        return self.scale * (np.asarray(a, dtype=float) + self.shift) ** self.degree

    def times(self, other: Growth) -> Growth:
        """Envelope of a product of two functions."""
        if "unknown" in (self.kind, other.kind):
            return Growth.unknown()
        degree = self.degree + other.degree
        kind = "bounded" if degree == 0 else "polynomial"
        return Growth(kind, self.scale * other.scale, degree, max(self.shift, other.shift))

    def ratio_bound(self, m: int, lam: float) -> float:
        """Upper bound on term(a+1)/term(a) for all a >= m."""
        growth = ((m + 1 + self.shift) / (m + self.shift)) ** self.degree
        return lam / (m + 1) * growth


def falling_factorial(a: int, k: int) -> float:
    """(a)_k = a (a-1) ... (a-k+1), with (a)_0 = 1 and 0 whenever k > a."""
    if a < 0 or k < 0:
        raise InvalidParam("a" if a < 0 else "k", "must be a nonnegative integer")
    return float(math.perm(int(a), int(k)))


def falling_factorial_array(a, k: int) -> np.ndarray:
    """Vectorised falling factorial over an array of nonnegative integers."""
    a = np.asarray(a, dtype=float)
    out = np.ones_like(a)
    for j in range(k):
        out = out * (a - j)
    return out


def forward_difference_at_zero(f: Callable, k: int) -> float:
    """k-th unit-step forward difference of ``f`` at 0.

    The alternating sum is accumulated in exact rational arithmetic on the
    float values f(0), ..., f(k), so the only rounding is in those values.

    Raises
    ------
    BinomialOverflow
        If ``k`` exceeds MAX_DIFFERENCE_ORDER, where the binomial weights stop
        being exactly representable in double precision.
    """
    if k < 0:
        raise InvalidParam("k", "must be nonnegative")
    if k > MAX_DIFFERENCE_ORDER:
        raise BinomialOverflow(
            f"difference order {k} exceeds {MAX_DIFFERENCE_ORDER}; binomial weights not exact"
        )
    values = np.asarray(f(np.arange(k + 1)), dtype=float)
    total = Fraction(0)
    for j in range(k + 1):
        term = math.comb(k, j) * Fraction(float(values[j]))
        total += term if (k - j) % 2 == 0 else -term
    return float(total)


def poisson_pmf(a, lam: float) -> np.ndarray:
    return stats.poisson.pmf(np.asarray(a), lam)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise InvalidParam("lambda", f"Poisson mean must be positive and finite, got {lam}")
    return lam


def _resolve_growth(f, growth: Growth | None) -> Growth:
    if growth is None:
        growth = getattr(f, "growth", None)
    if growth is None:
        return Growth.unknown()
    return growth


def poisson_sum(f: Callable, lam: float, rel_tol: float = DEFAULT_REL_TOL,
                growth: Growth | None = None) -> tuple[float, int]:
    """Truncated E_P[f(A)] for A ~ Poisson(lam), and the truncation point.

    The cut-off a_max = ceil(lam + c sqrt(lam) + c^2) is widened (c = 1, 2, ...)
    until a geometric-ratio bound on the discarded tail, built from the
    growth envelope, drops below ``rel_tol`` times sum |f(a)| p(a) over the
    retained range. Measuring against the absolute mass keeps the criterion
    meaningful when the expectation itself is zero.
    """
    lam = _check_lambda(lam)
    growth = _resolve_growth(f, growth)
    if growth.kind == "unknown":
        raise NonConvergent("integrand has unknown growth; tail bound unavailable")
    root = math.sqrt(lam)
    for c in range(1, _MAX_WIDTH_FACTOR):
        m = math.ceil(lam + c * root + c * c)
        rho = growth.ratio_bound(m, lam)
        if rho >= 1.0:
            continue
        a = np.arange(m + 1)
        p = poisson_pmf(a, lam)
        terms = p * np.asarray(f(a), dtype=float)
        mass = math.fsum(np.abs(terms))
        tail = float(p[-1] * growth.envelope(m)) * rho / (1.0 - rho)
        if tail <= rel_tol * mass or tail == 0.0:
            return math.fsum(terms), m
    raise NonConvergent(f"Poisson tail bound not met for lambda={lam}, rel_tol={rel_tol}")


def poisson_expectation(f: Callable, lam: float, rel_tol: float = DEFAULT_REL_TOL,
                        growth: Growth | None = None) -> float:
    """E_P[f(A)] for A ~ Poisson(lam).

    ``f`` must accept an integer ndarray. Its growth envelope is taken from
    ``growth`` or from ``f.growth`` (rate functions carry one); without either
    the call raises NonConvergent rather than guessing a cut-off.
    """
    return poisson_sum(f, lam, rel_tol, growth)[0]
