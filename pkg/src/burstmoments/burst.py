"""Finite-support burst-size laws for the B-birth channel.

All moments are computed from the stored pmf, so analytics, the SSA and the
CME oracle see exactly the same E[Q] and E[Q^2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InvalidParam

DEFAULT_TRUNCATION = 21

# Binomial(n, p) includes 0, but bursts must be positive: q = 1 + Binomial(n, p).
BINOMIAL_SHIFT_CONVENTION = "q = 1 + Binomial(n, p), support 1..n+1"


@dataclass(frozen=True)
class BurstDistribution:
    kind: str
    params: tuple
    support: np.ndarray = field(repr=False, compare=False)
    pmf: np.ndarray = field(repr=False, compare=False)

    @property
    def mean_q(self) -> float:
        return math.fsum(self.support * self.pmf)

    @property
    def second_moment_q(self) -> float:
        return math.fsum(self.support.astype(float) ** 2 * self.pmf)

    @property
    def max_q(self) -> int:
        return int(self.support[-1])

    @property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.pmf)
        c[-1] = 1.0
        return c

    def __hash__(self):
        return hash((self.kind, self.params))

    def __eq__(self, other):
        return (isinstance(other, BurstDistribution)
                and (self.kind, self.params) == (other.kind, other.params))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, **dict(self.params)}
        if self.kind == "shifted_binomial":
            out["convention"] = BINOMIAL_SHIFT_CONVENTION
        return out


def _normalised(kind, params, support, weights) -> BurstDistribution:
    support = np.asarray(support, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0
    support, weights = support[keep], weights[keep]
    pmf = weights / math.fsum(weights)
    pmf.setflags(write=False)
    support.setflags(write=False)
    return BurstDistribution(kind, tuple(params.items()), support, pmf)


def _positive_int(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise InvalidParam(name, f"must be an integer >= {minimum}, got {value}")
    return int(value)


def build_burst(kind: str, **params) -> BurstDistribution:
    """Construct a burst law.

    Kinds and parameters::

        deterministic      q0
        uniform            a, b            (support a..b)
        trunc_poisson      lambda_q, m_N   (mass ~ lambda^(q-1) e^-lambda / (q-1)!)
        trunc_geometric    p, m_N          (mass ~ p (1-p)^(q-1))
        shifted_binomial   n, p            (q = 1 + Binomial(n, p))
    """
    kind = kind.lower()
    if kind == "deterministic":
        q0 = _positive_int("q0", params.get("q0", 1))
        return _normalised(kind, {"q0": q0}, [q0], [1.0])
    if kind == "uniform":
        a = _positive_int("a", params.get("a", 1))
        b = _positive_int("b", params["b"] if "b" in params else a)
        if b < a:
            raise InvalidParam("b", f"upper end {b} below lower end {a}")
        return _normalised(kind, {"a": a, "b": b}, np.arange(a, b + 1), np.ones(b - a + 1))
    if kind == "trunc_poisson":
        lam = float(params.get("lambda_q", 8.0))
        if not lam > 0:
            raise InvalidParam("lambda_q", "must be positive")
        m = _positive_int("m_N", params.get("m_N", DEFAULT_TRUNCATION))
        q = np.arange(1, m + 1)
        return _normalised(kind, {"lambda_q": lam, "m_N": m}, q, stats.poisson.pmf(q - 1, lam))
    if kind == "trunc_geometric":
        p = float(params.get("p", 0.5))
        if not 0 < p <= 1:
            raise InvalidParam("p", "must lie in (0, 1]")
        m = _positive_int("m_N", params.get("m_N", DEFAULT_TRUNCATION))
        q = np.arange(1, m + 1)
        return _normalised(kind, {"p": p, "m_N": m}, q, p * (1.0 - p) ** (q - 1))
    if kind == "shifted_binomial":
        n = _positive_int("n", params.get("n", 20))
        p = float(params.get("p", 0.4))
        if not 0 <= p <= 1:
            raise InvalidParam("p", "must lie in [0, 1]")
        k = np.arange(0, n + 1)
        return _normalised(kind, {"n": n, "p": p}, k + 1, stats.binom.pmf(k, n, p))
    raise InvalidParam("kind", f"unknown burst kind {kind!r}")


def burst_from_dict(spec: dict) -> BurstDistribution:
    spec = dict(spec)
    spec.pop("convention", None)
    kind = spec.pop("kind", None)
    if kind is None:
        raise InvalidParam("kind", "burst kind missing")
    try:
        return build_burst(str(kind), **spec)
    except TypeError as exc:
        raise InvalidParam("burst", str(exc)) from None


def sample_burst(dist: BurstDistribution, rng: np.random.Generator) -> int:
    """Draw one burst size by inversion of the cumulative table."""
    return invert_cdf(dist, rng.random())


def sample_bursts(dist: BurstDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws; consumes the generator exactly like repeated ``sample_burst``."""
    idx = np.searchsorted(dist.cdf, rng.random(size), side="right")
    return dist.support[np.minimum(idx, len(dist.support) - 1)]


def invert_cdf(dist: BurstDistribution, u: float) -> int:
    idx = int(np.searchsorted(dist.cdf, u, side="right"))
    return int(dist.support[min(idx, len(dist.support) - 1)])
