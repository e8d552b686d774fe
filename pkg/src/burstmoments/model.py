"""The two-species network

    0 --F--> A,   A --gamma_A a--> 0,   B --R(a)--> B + Q,   B --gamma_B b--> 0

parametrised by rates, a production-rate function and a burst law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .burst import BurstDistribution, burst_from_dict
from .errors import InvalidParam
from .numerics import DEFAULT_REL_TOL, poisson_sum
from .rates import RateFunction, rate_from_dict


@dataclass(frozen=True)
class SystemParams:
    """Model parameters. The Poisson mean of A is always F / gamma_A."""

    F: float
    gamma_A: float
    gamma_B: float
    rate: RateFunction
    burst: BurstDistribution

    def __post_init__(self):
        for name in ("F", "gamma_A", "gamma_B"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParam(name, f"must be positive and finite, got {value}")
        if not isinstance(self.rate, RateFunction):
            raise InvalidParam("rate", "expected a RateFunction")
        a_max = self.poisson_cutoff()
        values = np.asarray(self.rate(np.arange(a_max + 1)), dtype=float)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidParam("rate", f"must be finite and nonnegative on 0..{a_max}")

    @property
    def lam(self) -> float:
        """E_P[A] = var(A) = F / gamma_A."""
        return self.F / self.gamma_A

    @property
    def mean_q(self) -> float:
        return self.burst.mean_q

    @property
    def second_moment_q(self) -> float:
        return self.burst.second_moment_q

    def poisson_cutoff(self, rel_tol: float = DEFAULT_REL_TOL) -> int:
        """Truncation point of E_P[R(A)] for this rate."""
        return poisson_sum(self.rate, self.lam, rel_tol)[1]

    @classmethod
    def from_mean_a(cls, F, mean_a, gamma_B, rate, burst) -> SystemParams:
        """Parametrise by E_P[A]: gamma_A is set to F / mean_a."""
        if not mean_a > 0:
            raise InvalidParam("mean_A", "must be positive")
        return cls(F, F / mean_a, gamma_B, rate, burst)

    def replace(self, **changes) -> SystemParams:
        fields = dict(F=self.F, gamma_A=self.gamma_A, gamma_B=self.gamma_B,
                      rate=self.rate, burst=self.burst)
        fields.update(changes)
        return SystemParams(**fields)

    def to_dict(self) -> dict:
        return {"F": self.F, "gamma_A": self.gamma_A, "gamma_B": self.gamma_B,
                "mean_A": self.lam, "rate": self.rate.to_dict(), "burst": self.burst.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> SystemParams:
        return cls(float(d["F"]), float(d["gamma_A"]), float(d["gamma_B"]),
                   rate_from_dict(d["rate"]), burst_from_dict(d["burst"]))
