"""Fast self-checks of the analytic machinery against independent references.

Each check takes well under a second and the whole suite runs in a few
seconds, so it is safe to run after installation or on a new platform.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from . import analytics, charlier, cme, lna
from .burst import build_burst
from .model import SystemParams
from .numerics import Growth, poisson_expectation
from .rates import Hill, Linear, Polynomial


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def _rel(x: float, y: float) -> float:
    return abs(x - y) / max(abs(y), 1e-300)


def linear_exactness() -> Check:
    worst = 0.0
    for rc in (0.3, 2.0):
        for gA, gB in ((0.5, 3.0), (3.0, 0.5)):
            for burst in (build_burst("deterministic", q0=1), build_burst("uniform", a=1, b=4)):
                p = SystemParams(4.0 * gA, gA, gB, Linear(rc), burst)
                exact = analytics.variance_linear_exact(p)
                worst = max(worst, _rel(analytics.variance_bound(p), exact),
                            _rel(lna.lna_variance_B(p), exact))
    return Check("linear rate: bound = exact = LNA", worst < 1e-10, f"max rel diff {worst:.2e}")


def orthogonality() -> Check:
    worst = 0.0
    for lam in (0.5, 10.0):
        for n in range(7):
            for m in range(n, 7):
                g = Growth.polynomial(n + m, 1.0, lam)
                val = poisson_expectation(
                    lambda a: charlier.psi(n, a, lam) * charlier.psi(m, a, lam), lam, growth=g)
                if n == m:
                    worst = max(worst, _rel(val, charlier.norm_squared(n, lam)))
                else:
                    worst = max(worst, abs(val) / charlier.norm_squared(m, lam))
    return Check("basis orthogonality under Poisson weight", worst < 1e-8, f"worst {worst:.2e}")


def route_agreement() -> Check:
    rate = Polynomial((0.3, 1.1, 0.2, 0.05))
    worst = 0.0
    for lam in (1.0, 5.0):
        for n in range(4):
            a = charlier.sigma_by_projection(rate, n, lam)
            b = charlier.sigma_by_difference(rate, n, lam, max(n, rate.degree)).value
            worst = max(worst, abs(a - b) / max(abs(b), 1e-12))
    return Check("sigma_n: projection = forward difference", worst < 1e-8, f"worst {worst:.2e}")


def oracle_agreement() -> Check:
    p = SystemParams(1.0, 0.2, 0.5, Hill(2, 5), build_burst("trunc_geometric", p=0.5, m_N=21))
    sol = cme.solve_auto(p)
    _, _, mean_b, var_b, cov = cme.moments(sol)
    errs = {
        "mean_B": _rel(analytics.mean_B(p), mean_b),
        "cov_AB": _rel(analytics.covariance_AB(p), cov),
        "series": _rel(analytics.variance_series(p), var_b),
    }
    below = analytics.variance_bound(p) < var_b
    ok = below and errs["mean_B"] < 1e-8 and errs["cov_AB"] < 1e-6 and errs["series"] < 1e-6
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + f", bound below: {below}"
    return Check("analytics against truncated master equation", ok, detail)


def poisson_marginal() -> Check:
    p = SystemParams(3.0, 1.0, 1.0, Hill(3, 2), build_burst("uniform", a=1, b=3))
    tv = cme.a_marginal_tv(cme.solve_auto(p), p.lam)
    return Check("A-marginal of the oracle is Poisson", tv < 1e-8, f"TV {tv:.1e}")


def generator_rows() -> Check:
    p = SystemParams(2.0, 1.0, 0.5, Hill(2, 3), build_burst("uniform", a=1, b=3))
    Q = cme.generator(p, 10, 12)
    rows = np.asarray(Q.sum(axis=1)).ravel().reshape(11, 13)
    interior = np.abs(rows[:-1, :-3]).max()
    ok = bool(rows.max() <= 1e-12 and interior <= 1e-12)
    return Check("generator rows sum to <= 0, = 0 inside", ok, f"interior max {interior:.1e}")


CHECKS: tuple[Callable[[], Check], ...] = (
    linear_exactness, orthogonality, route_agreement, oracle_agreement, poisson_marginal,
    generator_rows,
)


def run_all() -> list[Check]:
    out = []
    for fn in CHECKS:
        try:
            out.append(fn())
        except Exception as exc:  # a crash is reported as a failed check
            out.append(Check(fn.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out


def all_passed(checks) -> bool:
    return bool(checks) and all(c.passed for c in checks)
