"""Linear-noise approximation of the stationary (A, B) covariance.

The drift is linearised at the deterministic fixed point a* = F / gamma_A,
b* = E[Q] R(a*) / gamma_B; bursts enter the drift through E[Q] and the
diffusion through E[Q^2]. For R(a) = R_c a this is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotDifferentiable, NotHurwitz
from .model import SystemParams
from .rates import Linear, Tabulated

LINEARISED_AT_FIXED_POINT = "P21 = E[Q] R'(a*), D22 = E[Q^2] R(a*) + gamma_B b*, a* = F/gamma_A"


@dataclass(frozen=True)
class LnaSystem:
    P: np.ndarray
    D: np.ndarray
    fixed_point: tuple
    convention: str = LINEARISED_AT_FIXED_POINT


def lna_build(params: SystemParams) -> LnaSystem:
    """Drift Jacobian P and diffusion D of the LNA."""
    if isinstance(params.rate, Tabulated):
        raise NotDifferentiable("tabulated rates cannot be linearised")
    a_star = params.lam
    r_star = params.rate.at_real(a_star)
    slope = params.rate.derivative(a_star)
    eq, eq2 = params.mean_q, params.second_moment_q
    b_star = eq * r_star / params.gamma_B
    P = np.array([[-params.gamma_A, 0.0],
                  [eq * slope, -params.gamma_B]])
    D = np.array([[params.F + params.gamma_A * a_star, 0.0],
                  [0.0, eq2 * r_star + params.gamma_B * b_star]])
    convention = "exact (linear rate)" if isinstance(params.rate, Linear) else LINEARISED_AT_FIXED_POINT
    return LnaSystem(P, D, (a_star, b_star), convention)


def lyapunov_solve_2x2(sys: LnaSystem) -> np.ndarray:
    """Solve P S + S P^T + D = 0 for lower-triangular, Hurwitz P."""
    P, D = np.asarray(sys.P, dtype=float), np.asarray(sys.D, dtype=float)
    p11, p12, p21, p22 = P[0, 0], P[0, 1], P[1, 0], P[1, 1]
    if p12 != 0.0:
        raise ValueError("closed form requires a lower-triangular drift matrix")
    if not (p11 < 0 and p22 < 0):
        raise NotHurwitz(f"drift eigenvalues {p11}, {p22} are not both negative")
    d12 = 0.5 * (D[0, 1] + D[1, 0])
    s11 = -D[0, 0] / (2.0 * p11)
    s12 = -(d12 + p21 * s11) / (p11 + p22)
    s22 = -(D[1, 1] + 2.0 * p21 * s12) / (2.0 * p22)
    return np.array([[s11, s12], [s12, s22]])


def lna_covariance(params: SystemParams) -> np.ndarray:
    return lyapunov_solve_2x2(lna_build(params))


def lna_variance_B(params: SystemParams) -> float:
    return float(lna_covariance(params)[1, 1])
