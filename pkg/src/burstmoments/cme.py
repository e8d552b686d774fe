"""Stationary solve of the master equation on a finite grid.

States (a, b) with 0 <= a <= a_max, 0 <= b <= b_max are flattened as
i = a (b_max + 1) + b. Transitions that would leave the grid are deleted:
A births at a_max are suppressed and bursts overshooting b_max are dropped.
The probability those deleted moves would have carried is reported as
``mass_defect`` instead of being assumed negligible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse, stats
from scipy.sparse import linalg as splinalg

from .errors import GridTooLarge, GridTooSmall, InvalidParam, NonConverged
from .model import SystemParams

MAX_STATES = 4_000_000
DIRECT_SOLVE_LIMIT = 150_000
RESIDUAL_TOL = 1e-12
POISSON_TAIL_TOL = 1e-10
DEFAULT_DEFECT_TOL = 1e-9


@dataclass
class TruncatedCme:
    a_max: int
    b_max: int
    stationary: np.ndarray = field(repr=False)  # shape (a_max + 1, b_max + 1)
    mass_defect: float
    residual: float
    poisson_tail: float

    @property
    def n_states(self) -> int:
        return (self.a_max + 1) * (self.b_max + 1)

    @property
    def a_marginal(self) -> np.ndarray:
        return self.stationary.sum(axis=1)

    @property
    def b_marginal(self) -> np.ndarray:
        return self.stationary.sum(axis=0)

    def to_dict(self) -> dict:
        return {"a_max": self.a_max, "b_max": self.b_max, "mass_defect": self.mass_defect,
                "residual": self.residual, "poisson_tail": self.poisson_tail}


def default_grid(params: SystemParams) -> tuple[int, int]:
    """a_max = lambda + 10 sqrt(lambda) + 10, b_max = mean_B + 12 sd from the bound."""
    from . import analytics

    lam = params.lam
    a_max = int(math.ceil(lam + 10.0 * math.sqrt(lam) + 10.0))
    mean_b = analytics.mean_B(params)
    var_b = analytics.variance_bound(params)
    b_max = int(math.ceil(mean_b + 12.0 * math.sqrt(max(var_b, 0.0))))
    return a_max, max(b_max, params.burst.max_q)


def _transitions(params: SystemParams, a_max: int, b_max: int):
    """Kept transitions (src, dst, rate) plus per-state deleted outflow and its sojourn weight."""
    nb = b_max + 1
    n = (a_max + 1) * nb
    a = np.repeat(np.arange(a_max + 1), nb)
    b = np.tile(np.arange(nb), a_max + 1)
    idx = np.arange(n)
    rtab = np.asarray(params.rate(np.arange(a_max + 1)), dtype=float)[a]

    src, dst, val = [], [], []

    def add(mask, offset, rate):
        src.append(idx[mask])
        dst.append(idx[mask] + offset)
        val.append(np.broadcast_to(rate, idx.shape)[mask])

    add(a < a_max, nb, params.F)
    add(a > 0, -nb, params.gamma_A * a)
    add(b > 0, -1, params.gamma_B * b)

    out = np.zeros(n)
    # expected time spent beyond the grid per deleted jump
    weighted = np.where(a == a_max, params.F / (params.gamma_A * (a_max + 1)), 0.0)
    out[a == a_max] += params.F
    for q, pq in zip(params.burst.support, params.burst.pmf):
        q = int(q)
        rate = rtab * pq
        inside = b + q <= b_max
        add(inside & (rate > 0), q, rate)
        over = ~inside
        out[over] += rate[over]
        overshoot = b[over] + q - b_max
        weighted[over] += rate[over] * overshoot / (params.gamma_B * (b_max + 1))
    return (np.concatenate(src), np.concatenate(dst), np.concatenate(val)), out, weighted


def generator(params: SystemParams, a_max: int, b_max: int, conserving: bool = False) -> sparse.csr_matrix:
    """Rate matrix restricted to the grid, rows indexed by source state.

    By default the diagonal includes deleted outflow, so row sums are <= 0
    and vanish away from the boundary. With ``conserving=True`` deleted moves
    are dropped from the diagonal too and every row sums to zero.
    """
    _check_grid(a_max, b_max)
    (src, dst, val), out, _ = _transitions(params, a_max, b_max)
    n = (a_max + 1) * (b_max + 1)
    off = sparse.coo_matrix((val, (src, dst)), shape=(n, n)).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    if not conserving:
        diag -= out
    return (off + sparse.diags(diag)).tocsr()


def _check_grid(a_max, b_max):
    for name, v in (("a_max", a_max), ("b_max", b_max)):
        if int(v) != v or v < 0:
            raise InvalidParam(name, f"must be a nonnegative integer, got {v}")
    n = (a_max + 1) * (b_max + 1)
    if n > MAX_STATES:
        raise GridTooLarge(f"grid of {n} states exceeds the cap of {MAX_STATES}")


def _null_vector(Q: sparse.csr_matrix, pivot: int) -> tuple[np.ndarray, float]:
    """Solve p Q = 0, sum p = 1; returns (p, scaled residual).

    p[pivot] is pinned to 1 and its balance equation dropped, which keeps the
    reduced system sparse; ``pivot`` should be a well-populated state.
    """
    n = Q.shape[0]
    QT = Q.T.tocsc()
    keep = np.delete(np.arange(n), pivot)
    A = QT[keep][:, keep].tocsc()
    rhs = -QT[keep][:, [pivot]].toarray().ravel()
    scale = float(np.max(np.abs(Q.diagonal()))) or 1.0

    def residual(p):
        return float(np.max(np.abs(QT @ p))) / scale

    if n - 1 <= DIRECT_SOLVE_LIMIT:
        lu = splinalg.splu(A)
        x = lu.solve(rhs)
        x += lu.solve(rhs - A @ x)  # one refinement step
    else:
        ilu = splinalg.spilu(A, drop_tol=1e-6, fill_factor=20)
        M = splinalg.LinearOperator(A.shape, ilu.solve)
        x, info = splinalg.gmres(A, rhs, M=M, rtol=1e-14, atol=0.0, restart=100, maxiter=2000)
        if info != 0:
            raise NonConverged(f"GMRES stopped with info={info}")
    p = np.insert(x, pivot, 1.0)
    p = np.clip(p, 0.0, None)
    p /= math.fsum(p)
    return p, residual(p)


def _pivot(params: SystemParams, a_max: int, b_max: int) -> int:
    from . import analytics

    a = min(int(round(params.lam)), a_max)
    b = min(int(round(analytics.mean_B(params))), b_max)
    return a * (b_max + 1) + b


def solve_stationary(params: SystemParams, a_max: int | None = None, b_max: int | None = None,
                     defect_tol: float = DEFAULT_DEFECT_TOL) -> TruncatedCme:
    """Stationary distribution on the grid {0..a_max} x {0..b_max}."""
    da, db = default_grid(params) if a_max is None or b_max is None else (a_max, b_max)
    a_max = da if a_max is None else int(a_max)
    b_max = db if b_max is None else int(b_max)
    _check_grid(a_max, b_max)
    tail = float(stats.poisson.sf(a_max, params.lam))
    if tail > POISSON_TAIL_TOL:
        raise GridTooSmall(f"Poisson mass {tail:.3e} of A lies beyond a_max={a_max}", axis="a")

    (src, dst, val), out, weighted = _transitions(params, a_max, b_max)
    n = (a_max + 1) * (b_max + 1)
    off = sparse.coo_matrix((val, (src, dst)), shape=(n, n)).tocsr()
    Q = (off - sparse.diags(np.asarray(off.sum(axis=1)).ravel())).tocsr()
    p, res = _null_vector(Q, _pivot(params, a_max, b_max))
    if res > RESIDUAL_TOL:
        raise NonConverged(f"stationary residual {res:.3e} above {RESIDUAL_TOL:.0e}")
    defect = math.fsum(p * weighted)
    if defect > defect_tol:
        raise GridTooSmall(f"estimated mass {defect:.3e} beyond the grid "
                           f"(a_max={a_max}, b_max={b_max}) exceeds {defect_tol:.0e}")
    return TruncatedCme(a_max, b_max, p.reshape(a_max + 1, b_max + 1), defect, res, tail)


def solve_auto(params: SystemParams, defect_tol: float = DEFAULT_DEFECT_TOL,
               max_states: int = MAX_STATES) -> TruncatedCme:
    """Start from the default grid and double b_max until the defect is acceptable."""
    a_max, b_max = default_grid(params)
    while True:
        if (a_max + 1) * (b_max + 1) > max_states:
            raise GridTooLarge(f"grid {a_max}x{b_max} exceeds {max_states} states")
        try:
            return solve_stationary(params, a_max, b_max, defect_tol)
        except GridTooSmall as exc:
            if exc.axis != "b":
                raise
            b_max *= 2


def moments(cme: TruncatedCme) -> tuple[float, float, float, float, float]:
    """(mean_A, var_A, mean_B, var_B, cov_AB) summed exactly over the grid."""
    P = cme.stationary
    a = np.arange(cme.a_max + 1, dtype=float)
    b = np.arange(cme.b_max + 1, dtype=float)
    pa, pb = P.sum(axis=1), P.sum(axis=0)
    ma, mb = math.fsum(a * pa), math.fsum(b * pb)
    va = math.fsum((a - ma) ** 2 * pa)
    vb = math.fsum((b - mb) ** 2 * pb)
    cov = math.fsum((np.outer(a - ma, b - mb) * P).ravel())
    return ma, va, mb, vb, cov


def a_marginal_tv(cme: TruncatedCme, lam: float) -> float:
    """Total-variation distance between the A-marginal and Poisson(lam)."""
    k = np.arange(cme.a_max + 1)
    ref = stats.poisson.pmf(k, lam)
    return 0.5 * (math.fsum(np.abs(cme.a_marginal - ref)) + float(stats.poisson.sf(cme.a_max, lam)))


def write_stationary_csv(cme: TruncatedCme, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a", "b", "probability"])
        for a in range(cme.a_max + 1):
            for b in range(cme.b_max + 1):
                writer.writerow([a, b, repr(float(cme.stationary[a, b]))])
