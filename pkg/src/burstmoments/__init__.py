"""Stationary moments of a bursty birth-death species driven by a Poisson input.

Species A is born at rate F and degrades at gamma_A a, so A ~ Poisson(F/gamma_A)
at stationarity. Species B is produced in bursts of size Q at rate R(a) and
degrades at gamma_B b. The package computes a hard lower bound on var(B), its
convergent series completion, cov(A, B) and the LNA estimate, and checks them
against stochastic simulation and a truncated master-equation solve.
"""

from .analytics import (MomentReport, correlation_lower_bound, covariance_AB, mean_B,
                        moment_report, sigma0, sigma1, variance_bound, variance_linear_exact,
                        variance_series)
from .burst import BurstDistribution, build_burst
from .cme import TruncatedCme, moments, solve_stationary
from .errors import (BurstMomentsError, ConfigError, InvalidParam, NumericalError,
                     WrongRateKind)
from .lna import lna_covariance, lna_variance_B
from .model import SystemParams
from .rates import Blend, Constant, Hill, Linear, Polynomial, RateFunction, Tabulated
from .ssa import estimate_stationary

__all__ = [
    "Blend", "BurstDistribution", "BurstMomentsError", "ConfigError", "Constant", "Hill",
    "InvalidParam", "Linear", "MomentReport", "NumericalError", "Polynomial", "RateFunction",
    "SystemParams", "Tabulated", "TruncatedCme", "WrongRateKind", "build_burst",
    "correlation_lower_bound", "covariance_AB", "estimate_stationary", "lna_covariance",
    "lna_variance_B", "mean_B", "moment_report", "moments", "sigma0", "sigma1",
    "solve_stationary", "variance_bound", "variance_linear_exact", "variance_series",
]
