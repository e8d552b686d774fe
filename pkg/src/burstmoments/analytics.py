"""Closed-form stationary moments of B.

With lambda = F / gamma_A and sigma_n the coefficients of R on the shifted
Charlier basis (``charlier``):

* E[B] = E[Q] sigma_0 / gamma_B
* var(B) = [(E[Q^2] - E[Q]) sigma_0
            + 2 E[Q]^2 sum_{n>=1} sigma_n^2 n! lambda^n / (n gamma_A + gamma_B)] / (2 gamma_B)
           + E[Q] sigma_0 / gamma_B
* keeping only n = 1 gives a strict lower bound, exact for linear R
* cov(A, B) = E[Q] sigma_1 lambda / (gamma_A + gamma_B), exact for any R
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import charlier
from .charlier import CharlierExpansion
from .errors import DegenerateVariance, InvalidParam, WrongRateKind
from .model import SystemParams
from .numerics import DEFAULT_REL_TOL, poisson_sum
from .rates import Linear

__all__ = [
    "MomentReport", "SystemParams", "correlation_lower_bound", "covariance_AB",
    "expansion", "mean_B", "moment_report", "series_terms", "sigma0", "sigma1",
    "variance_bound", "variance_linear_exact", "variance_series",
]


@lru_cache(maxsize=512)
def _expand(rate, lam, order, rel_tol, early_stop):
    return charlier.expand(rate, lam, order, rel_tol, early_stop=early_stop)


def expansion(params: SystemParams, order: int = charlier.DEFAULT_ORDER,
              rel_tol: float = DEFAULT_REL_TOL, early_stop: bool = True) -> CharlierExpansion:
    """Projection-route expansion of the rate, centred at lambda (cached)."""
    return _expand(params.rate, params.lam, int(order), float(rel_tol), bool(early_stop))


def sigma0(params: SystemParams, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """E_P[R(A)]."""
    return expansion(params, 1, rel_tol, early_stop=False).sigma0


def sigma1(params: SystemParams, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """E_P[A R(A)] / lambda - sigma_0."""
    return expansion(params, 1, rel_tol, early_stop=False).sigma1


def mean_B(params: SystemParams, rel_tol: float = DEFAULT_REL_TOL) -> float:
    return params.mean_q * sigma0(params, rel_tol) / params.gamma_B


def variance_bound(params: SystemParams, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Hard lower bound on var(B) from sigma_0 and sigma_1 alone."""
    s0, s1 = sigma0(params, rel_tol), sigma1(params, rel_tol)
    gA, gB, lam = params.gamma_A, params.gamma_B, params.lam
    eq, eq2 = params.mean_q, params.second_moment_q
    return (s0 * (gA + gB) * (eq2 + eq) + 2.0 * s1**2 * eq**2 * lam) / (2.0 * gB * (gB + gA))


def series_terms(params: SystemParams, order: int = charlier.DEFAULT_ORDER,
                 rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Contribution of each n = 1..order to the variance series.

    Entries past the early-stop point are zero.
    """
    if order < 1:
        raise InvalidParam("N", "series order must be >= 1")
    exp = expansion(params, order, rel_tol)
    w = exp.weights
    eq, gA, gB = params.mean_q, params.gamma_A, params.gamma_B
    out = np.zeros(order)
    for n in range(1, min(order, exp.order) + 1):
        out[n - 1] = eq**2 * w[n] / (gB * (n * gA + gB))
    return out


def variance_series(params: SystemParams, order: int = charlier.DEFAULT_ORDER,
                    rel_tol: float = DEFAULT_REL_TOL) -> float:
    """var(B) with the Charlier sum truncated at n = order."""
    s0 = sigma0(params, rel_tol)
    eq, eq2, gB = params.mean_q, params.second_moment_q, params.gamma_B
    base = (eq2 - eq) * s0 / (2.0 * gB) + eq * s0 / gB
    return base + math.fsum(series_terms(params, order, rel_tol))


def covariance_AB(params: SystemParams, rel_tol: float = DEFAULT_REL_TOL) -> float:
    return params.mean_q * sigma1(params, rel_tol) * params.lam / (params.gamma_A + params.gamma_B)


def correlation_lower_bound(params: SystemParams, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """cov(A, B) / (sqrt(var A) sqrt(bound)).

    A lower bound on the correlation coefficient only when sigma_1 >= 0; for
    decreasing rates the same expression is an upper bound.
    """
    bound = variance_bound(params, rel_tol)
    if not bound > 0:
        raise DegenerateVariance("variance bound is zero; correlation undefined")
    return covariance_AB(params, rel_tol) / (math.sqrt(params.lam) * math.sqrt(bound))


def variance_linear_exact(params: SystemParams) -> float:
    """Exact var(B) for R(a) = R_c a."""
    if not isinstance(params.rate, Linear):
        raise WrongRateKind(f"exact variance needs a linear rate, got {params.rate.kind}")
    rc, lam = params.rate.R_c, params.lam
    gA, gB = params.gamma_A, params.gamma_B
    eq, eq2 = params.mean_q, params.second_moment_q
    return rc * lam * ((gA + gB) * (eq2 + eq) + 2.0 * rc * eq**2) / (2.0 * gB * (gA + gB))


@dataclass
class MomentReport:
    mean_A: float
    var_A: float
    mean_B: float
    var_bound: float
    var_series: float
    series_order: int
    series_tail: float
    cov_AB: float
    corr_lower_bound: float | None
    sigma0: float
    sigma1: float
    sigma1_sign: int
    var_linear_exact: float | None = None
    lna_var: float | None = None
    lna_convention: str | None = None
    ssa: dict | None = None
    cme: dict | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def moment_report(params: SystemParams, order: int = charlier.DEFAULT_ORDER,
                  rel_tol: float = DEFAULT_REL_TOL, with_lna: bool = True) -> MomentReport:
    """All analytic quantities for one parameter point."""
    from . import lna

    s0, s1 = sigma0(params, rel_tol), sigma1(params, rel_tol)
    bound = variance_bound(params, rel_tol)
    terms = series_terms(params, order, rel_tol)
    exp = expansion(params, order, rel_tol)
    try:
        corr = correlation_lower_bound(params, rel_tol)
    except DegenerateVariance:
        corr = None
    lin = variance_linear_exact(params) if isinstance(params.rate, Linear) else None
    lna_var = convention = None
    if with_lna:
        try:
            sys = lna.lna_build(params)
            lna_var = float(lna.lyapunov_solve_2x2(sys)[1, 1])
            convention = sys.convention
        except WrongRateKind:
            pass
    return MomentReport(
        mean_A=params.lam,
        var_A=params.lam,
        mean_B=mean_B(params, rel_tol),
        var_bound=bound,
        var_series=variance_series(params, order, rel_tol),
        series_order=exp.order,
        series_tail=float(terms[min(exp.order, order) - 1]) if exp.order >= 1 else 0.0,
        cov_AB=covariance_AB(params, rel_tol),
        corr_lower_bound=corr,
        sigma0=s0,
        sigma1=s1,
        sigma1_sign=int(np.sign(s1)),
        var_linear_exact=lin,
        lna_var=lna_var,
        lna_convention=convention,
        metadata={
            "requested_order": int(order),
            "rel_tol": rel_tol,
            "poisson_cutoff": poisson_sum(params.rate, params.lam, rel_tol)[1],
            "burst_max_q": params.burst.max_q,
            "params": params.to_dict(),
        },
    )
