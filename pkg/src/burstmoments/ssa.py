"""Gillespie direct-method simulation with burst jumps, and ensemble moments.

Channels, in order: A birth (F), A death (gamma_A a), B burst (R(a), size Q),
B death (gamma_B b). Rates R(a) are tabulated once per parameter set; the
hot loop is compiled with numba and takes a caller-owned numpy Generator, so
a (params, seed) pair always replays the same path.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import InvalidParam, SimulationError
from .model import SystemParams

# Codes returned by the compiled trajectory loop.
_OK, _A_OVERFLOW, _EVENT_CAP = 0, 1, 2

DEFAULT_MAX_EVENTS = 2_000_000_000


@dataclass
class TrajectoryState:
    a: int
    b: int
    t: float
    rng: np.random.Generator = field(repr=False)

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise InvalidParam("state", "copy numbers must be nonnegative")


@lru_cache(maxsize=64)
def _tables(params: SystemParams):
    lam = params.lam
    a_cap = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 60.0))
    rtab = np.ascontiguousarray(params.rate(np.arange(a_cap + 1)), dtype=np.float64)
    cdf = np.ascontiguousarray(params.burst.cdf, dtype=np.float64)
    support = np.ascontiguousarray(params.burst.support, dtype=np.int64)
    return rtab, cdf, support


@njit(cache=True, nogil=True)
def _fire(a, b, rng, F, gA, gB, rtab, cdf, support):
    """Draw the waiting time and apply one reaction; returns (a, b, tau, burst)."""
    w0 = F
    w1 = gA * a
    w2 = rtab[a]
    w3 = gB * b
    total = w0 + w1 + w2 + w3
    tau = rng.exponential(1.0 / total)
    u = rng.random() * total
    burst = 0
    if u < w0:
        a += 1
    elif u < w0 + w1:
        a -= 1
    elif u < w0 + w1 + w2:
        burst = support[np.searchsorted(cdf, rng.random(), side="right")]
        b += burst
    else:
        b -= 1
    return a, b, tau, burst


@njit(cache=True, nogil=True)
def _trajectory(rng, a, b, F, gA, gB, rtab, cdf, support, t_burn, dt, n_samples,
                max_events, sums, hist):
    """Run one path, accumulating grid samples into ``sums`` and ``hist``.

    sums = [n, sum a, sum b, sum a^2, sum b^2, sum a b]. Returns
    (status, events, bursts).
    """
    t = 0.0
    k = 0
    next_sample = t_burn
    events = 0
    bursts = 0
    a_cap = rtab.shape[0] - 1
    while k < n_samples:
        a_new, b_new, tau, burst = _fire(a, b, rng, F, gA, gB, rtab, cdf, support)
        t_next = t + tau
        # the state is piecewise constant: samples before t_next see (a, b)
        while k < n_samples and next_sample < t_next:
            sums[0] += 1.0
            sums[1] += a
            sums[2] += b
            sums[3] += a * a
            sums[4] += b * b
            sums[5] += a * b
            hist[a] += 1
            k += 1
            next_sample = t_burn + k * dt
        a, b, t = a_new, b_new, t_next
        events += 1
        if burst > 0:
            bursts += 1
        if a > a_cap:
            return _A_OVERFLOW, events, bursts
        if events >= max_events:
            return _EVENT_CAP, events, bursts
    return _OK, events, bursts


def step(state: TrajectoryState, params: SystemParams) -> TrajectoryState:
    """Advance one reaction event. The generator inside ``state`` is consumed."""
    rtab, cdf, support = _tables(params)
    if state.a >= len(rtab):
        raise SimulationError(f"a={state.a} beyond tabulated rate range")
    a, b, tau, _ = _fire(state.a, state.b, state.rng, params.F, params.gamma_A,
                         params.gamma_B, rtab, cdf, support)
    return TrajectoryState(int(a), int(b), state.t + float(tau), state.rng)


def simulate_path(params: SystemParams, t_end: float, sample_dt: float, seed: int = 0):
    """Sampled single trajectory from a = b = 0; returns arrays (t, a, b)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    state = TrajectoryState(0, 0, 0.0, rng)
    times = np.arange(0.0, t_end + 0.5 * sample_dt, sample_dt)
    out_a = np.empty(len(times), dtype=np.int64)
    out_b = np.empty(len(times), dtype=np.int64)
    nxt = step(state, params)
    for i, s in enumerate(times):
        while nxt.t <= s:
            state, nxt = nxt, step(nxt, params)
        out_a[i], out_b[i] = state.a, state.b
    return times, out_a, out_b


def write_trajectory_csv(path, times, a, b) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "a", "b"])
        for row in zip(times, a, b):
            writer.writerow([repr(float(row[0])), int(row[1]), int(row[2])])


@dataclass
class EnsembleStats:
    n_traj: int
    n_samples: int
    mean_A: float
    var_A: float
    mean_B: float
    var_B: float
    cov_AB: float
    corr_AB: float
    se_mean_A: float
    se_var_A: float
    se_mean_B: float
    se_var_B: float
    se_cov_AB: float
    se_corr_AB: float
    events: int
    bursts: int
    a_histogram: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "a_histogram"}
        return out


def default_burn_in(params: SystemParams) -> float:
    return 10.0 * max(1.0 / params.gamma_A, 1.0 / params.gamma_B)


def default_sample_dt(params: SystemParams) -> float:
    return 0.5 / max(params.gamma_A, params.gamma_B)


def _batch_se(values: np.ndarray) -> float:
    if len(values) < 2:
        return float("nan")
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def estimate_stationary(params: SystemParams, n_traj: int = 200, t_burn: float | None = None,
                        t_sample: float = 500.0, sample_dt: float | None = None, seed: int = 0,
                        workers: int = 1, max_events: int = DEFAULT_MAX_EVENTS) -> EnsembleStats:
    """Pooled stationary moments over ``n_traj`` independent paths.

    Each path starts from a ~ Poisson(lambda), b = 0, discards [0, t_burn)
    and samples on the grid t_burn + k sample_dt. Standard errors are batch
    means with one batch per trajectory. Trajectory k draws from the k-th
    child of ``np.random.SeedSequence(seed)``, so neither ``workers`` nor
    scheduling order affects the result.
    """
    if n_traj < 1:
        raise InvalidParam("n_traj", "need at least one trajectory")
    t_burn = default_burn_in(params) if t_burn is None else float(t_burn)
    sample_dt = default_sample_dt(params) if sample_dt is None else float(sample_dt)
    if not (t_burn >= 0 and t_sample > 0 and sample_dt > 0):
        raise InvalidParam("t_sample", "t_burn >= 0, t_sample > 0 and sample_dt > 0 required")
    n_samples = max(1, int(round(t_sample / sample_dt)))
    rtab, cdf, support = _tables(params)
    children = np.random.SeedSequence(seed).spawn(n_traj)
    per_traj_cap = max(1, int(max_events // n_traj))

    sums = np.zeros((n_traj, 6))
    hists = np.zeros((n_traj, len(rtab)), dtype=np.int64)
    status = np.zeros(n_traj, dtype=np.int64)
    events = np.zeros(n_traj, dtype=np.int64)
    bursts = np.zeros(n_traj, dtype=np.int64)

    def run(i):
        rng = np.random.Generator(np.random.PCG64(children[i]))
        a0 = int(rng.poisson(params.lam))
        if a0 >= len(rtab):
            a0 = len(rtab) - 1
        status[i], events[i], bursts[i] = _trajectory(
            rng, a0, 0, params.F, params.gamma_A, params.gamma_B, rtab, cdf, support,
            t_burn, sample_dt, n_samples, per_traj_cap, sums[i], hists[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_traj)))
    else:
        for i in range(n_traj):
            run(i)

    if np.any(status == _A_OVERFLOW):
        raise SimulationError("A left the tabulated range; rate table too short")
    if np.any(status == _EVENT_CAP):
        raise SimulationError(f"event budget {max_events} exhausted before sampling finished")
    return _pool(params, sums, hists, int(events.sum()), int(bursts.sum()),
                 {"t_burn": t_burn, "t_sample": float(t_sample), "sample_dt": sample_dt,
                  "samples_per_traj": n_samples, "seed": int(seed)})


def _pool(params, sums, hists, events, bursts, meta) -> EnsembleStats:
    n_i = sums[:, 0]
    total = math.fsum(n_i)
    mu_a = math.fsum(sums[:, 1]) / total
    mu_b = math.fsum(sums[:, 2]) / total
    mean_a_i = sums[:, 1] / n_i
    mean_b_i = sums[:, 2] / n_i
    # per-trajectory second moments about the pooled means
    va_i = (sums[:, 3] - 2 * mu_a * sums[:, 1]) / n_i + mu_a**2
    vb_i = (sums[:, 4] - 2 * mu_b * sums[:, 2]) / n_i + mu_b**2
    c_i = (sums[:, 5] - mu_a * sums[:, 2] - mu_b * sums[:, 1]) / n_i + mu_a * mu_b
    w = n_i / total
    var_a = math.fsum(w * va_i)
    var_b = math.fsum(w * vb_i)
    cov = math.fsum(w * c_i)
    if var_a > 0 and var_b > 0:
        corr = cov / math.sqrt(var_a * var_b)
        z_i = corr * (c_i / cov - 0.5 * va_i / var_a - 0.5 * vb_i / var_b) if cov != 0 else \
            c_i / math.sqrt(var_a * var_b)
        se_corr = _batch_se(z_i)
    else:
        corr = 0.0
        se_corr = 0.0
    return EnsembleStats(
        n_traj=len(n_i), n_samples=int(total),
        mean_A=mu_a, var_A=var_a, mean_B=mu_b, var_B=var_b, cov_AB=cov, corr_AB=corr,
        se_mean_A=_batch_se(mean_a_i), se_var_A=_batch_se(va_i), se_mean_B=_batch_se(mean_b_i),
        se_var_B=_batch_se(vb_i), se_cov_AB=_batch_se(c_i), se_corr_AB=se_corr,
        events=events, bursts=bursts, a_histogram=hists.sum(axis=0), metadata=meta,
    )
