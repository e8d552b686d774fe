"""Shifted Poisson-Charlier basis and Newton-series coefficients of a rate.

For a Poisson(r) variable the functions

    psi_n(a) = sum_k C(n, k) (-r)^k (a)_{n-k}

are the monic Charlier polynomials: E[psi_n psi_m] = n! r^n delta_nm and
E[psi_n] = delta_n0. Any rate expands as R(a) = sum_n sigma_n psi_n(a).

Two independent routes give sigma_n:

* ``sigma_by_difference`` re-sums the Newton forward-difference series of R
  at zero. Exact for polynomials, but alternating and fragile otherwise.
* ``sigma_by_projection`` projects R on psi_n under the Poisson weight. This
  is the canonical route; it evaluates psi_n with the three-term recurrence
  of the orthonormal family, which stays accurate for large r where the
  binomial sum cancels catastrophically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidParam, UnstableSeries
from .numerics import (DEFAULT_REL_TOL, Growth, falling_factorial_array,
                       forward_difference_at_zero, poisson_expectation)

MAX_ORDER = 30
DEFAULT_ORDER = 20
# extra truncation accuracy for sign-changing projection integrands
CANCELLATION_MARGIN = 1e-3

FORWARD_DIFFERENCE = "ForwardDifference"
POISSON_PROJECTION = "PoissonProjection"


def _check_order(n: int) -> int:
    if n < 0 or n > MAX_ORDER:
        raise InvalidParam("n", f"basis order must lie in 0..{MAX_ORDER}, got {n}")
    return int(n)


def psi(n: int, a, r: float):
    """psi_n(a) by the binomial sum over falling factorials."""
    n = _check_order(n)
    arr = np.asarray(a, dtype=float)
    out = np.zeros_like(arr)
    for k in range(n + 1):
        out = out + math.comb(n, k) * (-r) ** k * falling_factorial_array(arr, n - k)
    return float(out) if np.ndim(a) == 0 else out


def orthonormal_psi(n_max: int, a, r: float) -> np.ndarray:
    """Rows psi_n(a) / sqrt(n! r^n) for n = 0..n_max, via the recurrence

    p_{n+1} = ((a - n - r) p_n - sqrt(n r) p_{n-1}) / sqrt((n + 1) r).
    """
    n_max = _check_order(n_max)
    a = np.asarray(a, dtype=float)
    rows = np.empty((n_max + 1,) + a.shape)
    rows[0] = 1.0
    prev = np.zeros_like(a)
    for n in range(n_max):
        rows[n + 1] = ((a - n - r) * rows[n] - math.sqrt(n * r) * prev) / math.sqrt((n + 1) * r)
        prev = rows[n]
    return rows


def norm_squared(n: int, r: float) -> float:
    """E_P[psi_n^2] = n! r^n."""
    return math.factorial(n) * r**n


class DifferenceSum(NamedTuple):
    value: float
    last_term_ratio: float
    terms_used: int


def sigma_by_difference(f: Callable, n: int, r: float, k_max: int) -> DifferenceSum:
    """Partial Newton re-summation sum_{k=n}^{k_max} C(k,n) Delta^k f(0) / k! r^(k-n).

    Returns the sum with |last term| / |sum| as a convergence report.

    Raises
    ------
    UnstableSeries
        When significant terms grow in magnitude for 5 consecutive k, the
        signature of alternating-cancellation blow-up. Fall back to
        ``sigma_by_projection``.
    """
    n = _check_order(n)
    if k_max < n:
        raise InvalidParam("k_max", f"must be >= n={n}")
    total = 0.0
    last = 0.0
    previous = None
    growing = 0
    for k in range(n, k_max + 1):
        term = math.comb(k, n) * forward_difference_at_zero(f, k) / math.factorial(k) * r ** (k - n)
        total += term
        # terms at rounding level of the running sum do not count as growth
        significant = abs(term) > 1e-13 * max(abs(total), 1e-300)
        if previous is not None and significant and abs(term) > abs(previous):
            growing += 1
            if growing >= 5:
                raise UnstableSeries(
                    f"Newton re-summation for sigma_{n} diverging at k={k} (r={r})"
                )
        else:
            growing = 0
        previous = term
        last = term
    ratio = abs(last) / abs(total) if total != 0 else abs(last)
    return DifferenceSum(total, ratio, k_max - n + 1)


def _projection_growth(f, n: int, r: float) -> Growth:
    base = getattr(f, "growth", None) or Growth.unknown()
    psi_env = Growth.polynomial(n, scale=1.0 / math.sqrt(norm_squared(n, r)), shift=max(r, 1.0))
    return base.times(psi_env)


def projection_weight(f: Callable, n: int, lam: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """E_P[psi_n f] / sqrt(n! lam^n), the coefficient on the orthonormal basis."""
    n = _check_order(n)

    def integrand(a):
        return orthonormal_psi(n, a, lam)[n] * np.asarray(f(a), dtype=float)

    # for n >= 1 the integrand changes sign, so the sum can be much smaller
    # than the envelope the truncation is measured against
    tol = rel_tol if n == 0 else rel_tol * CANCELLATION_MARGIN
    return poisson_expectation(integrand, lam, tol, _projection_growth(f, n, lam))


def sigma_by_projection(f: Callable, n: int, lam: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """sigma_n = E_P[psi_n(A) f(A)] / (n! lam^n), A ~ Poisson(lam)."""
    return projection_weight(f, n, lam, rel_tol) / math.sqrt(norm_squared(n, lam))


@dataclass(frozen=True)
class CharlierExpansion:
    """Coefficients sigma_0..sigma_N of a rate on the basis centred at r."""

    r: float
    coeffs: tuple
    route: str = POISSON_PROJECTION
    requested_order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidParam("r", "basis centre must be positive")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def weights(self) -> np.ndarray:
        """sigma_n^2 n! r^n, each coefficient's share of Var_P[R]."""
        return np.array([c * c * norm_squared(n, self.r) for n, c in enumerate(self.coeffs)])

    @property
    def sigma0(self) -> float:
        return self.coeffs[0]

    @property
    def sigma1(self) -> float:
        return self.coeffs[1] if len(self.coeffs) > 1 else 0.0

    def __call__(self, a):
        return reconstruct(self, a)


def reconstruct(expansion: CharlierExpansion, a):
    """sum_n sigma_n psi_n(a)."""
    total = 0.0
    for n, c in enumerate(expansion.coeffs):
        total = total + c * psi(n, a, expansion.r)
    return total


def expand(f: Callable, lam: float, order: int = DEFAULT_ORDER, rel_tol: float = DEFAULT_REL_TOL,
           route: str = POISSON_PROJECTION, early_stop: bool = True,
           k_max: int | None = None) -> CharlierExpansion:
    """Expand ``f`` on psi_0..psi_order centred at r = lam.

    With ``early_stop`` the projection route stops once two consecutive
    weights sigma_n^2 n! lam^n fall below ``rel_tol`` times the weight
    accumulated over n >= 1 (the part that feeds the variance series).
    """
    order = _check_order(order)
    if route == FORWARD_DIFFERENCE:
        k_max = order + 40 if k_max is None else k_max
        coeffs = [sigma_by_difference(f, n, lam, k_max).value for n in range(order + 1)]
        return CharlierExpansion(lam, tuple(coeffs), route, order)
    if route != POISSON_PROJECTION:
        raise InvalidParam("route", f"unknown route {route!r}")

    weights = []
    small = 0
    for n in range(order + 1):
        c = projection_weight(f, n, lam, rel_tol)
        weights.append(c)
        if early_stop and n >= 2:
            acc = math.fsum(w * w for w in weights[1:-1]) or weights[0] ** 2
            small = small + 1 if c * c <= rel_tol * acc else 0
            if small >= 2:
                break
    coeffs = [w / math.sqrt(norm_squared(n, lam)) for n, w in enumerate(weights)]
    return CharlierExpansion(lam, tuple(coeffs), route, order)
