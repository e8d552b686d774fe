import csv

import numpy as np
import pytest
from scipy import stats

from burstmoments import analytics, ssa
from burstmoments.burst import build_burst
from burstmoments.errors import InvalidParam, SimulationError
from burstmoments.model import SystemParams
from burstmoments.rates import Constant, Hill, Linear

Q1 = build_burst("deterministic", q0=1)
GEO = build_burst("trunc_geometric", p=0.5, m_N=21)
HILL = SystemParams(1.0, 0.2, 0.5, Hill(2, 5), GEO)


def within(value, target, se, k=3.0):
    return abs(value - target) <= k * se


def test_first_step_from_empty_state_is_a_birth():
    p = SystemParams(1.0, 1.0, 1.0, Linear(1.0), Q1)
    for seed in range(5):
        rng = np.random.Generator(np.random.PCG64(seed))
        nxt = ssa.step(ssa.TrajectoryState(0, 0, 0.0, rng), p)
        assert (nxt.a, nxt.b) == (1, 0) and nxt.t > 0


def test_negative_state_rejected():
    with pytest.raises(InvalidParam):
        ssa.TrajectoryState(-1, 0, 0.0, np.random.default_rng(0))


def test_death_never_goes_negative():
    p = SystemParams(0.5, 3.0, 3.0, Linear(2.0), GEO)
    state = ssa.TrajectoryState(0, 0, 0.0, np.random.Generator(np.random.PCG64(1)))
    for _ in range(5000):
        state = ssa.step(state, p)
        assert state.a >= 0 and state.b >= 0


def test_path_replays_for_same_seed():
    a = ssa.simulate_path(HILL, 50.0, 0.5, seed=9)
    b = ssa.simulate_path(HILL, 50.0, 0.5, seed=9)
    c = ssa.simulate_path(HILL, 50.0, 0.5, seed=10)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert not np.array_equal(a[2], c[2])


def test_trajectory_csv(tmp_path):
    t, a, b = ssa.simulate_path(HILL, 5.0, 1.0, seed=2)
    path = tmp_path / "traj.csv"
    ssa.write_trajectory_csv(path, t, a, b)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "a", "b"]
    assert len(rows) == len(t) + 1
    assert [int(r[1]) for r in rows[1:]] == a.tolist()


def test_zero_rate_never_produces_b():
    p = SystemParams(1.0, 1.0, 1.0, Constant(0.0), GEO)
    est = ssa.estimate_stationary(p, n_traj=8, t_sample=50.0, seed=1)
    assert est.mean_B == 0.0 and est.var_B == 0.0 and est.bursts == 0


def test_linear_variance_within_three_se():
    p = SystemParams(4.0, 1.0, 1.0, Linear(1.0), Q1)
    est = ssa.estimate_stationary(p, n_traj=100, t_sample=400.0, seed=3)
    assert within(est.var_B, 6.0, est.se_var_B)
    assert within(est.mean_B, 4.0, est.se_mean_B)
    assert within(est.cov_AB, 2.0, est.se_cov_AB)
    assert within(est.mean_A, 4.0, est.se_mean_A)


def test_hill_instance_against_analytics():
    est = ssa.estimate_stationary(HILL, n_traj=100, t_sample=1000.0, seed=5)
    assert within(est.mean_A, HILL.lam, est.se_mean_A)
    assert within(est.mean_B, analytics.mean_B(HILL), est.se_mean_B)
    assert within(est.cov_AB, analytics.covariance_AB(HILL), est.se_cov_AB)
    assert est.var_B >= analytics.variance_bound(HILL) - 3 * est.se_var_B
    assert abs(est.corr_AB) <= 1.0


def test_estimate_is_deterministic_and_worker_independent():
    kw = dict(n_traj=12, t_sample=40.0, seed=77)
    one = ssa.estimate_stationary(HILL, **kw)
    two = ssa.estimate_stationary(HILL, **kw)
    par = ssa.estimate_stationary(HILL, workers=3, **kw)
    assert one.to_dict() == two.to_dict() == par.to_dict()
    np.testing.assert_array_equal(one.a_histogram, par.a_histogram)


def test_event_cap_raises():
    with pytest.raises(SimulationError):
        ssa.estimate_stationary(HILL, n_traj=2, t_sample=1000.0, max_events=100)


def test_invalid_run_lengths():
    with pytest.raises(InvalidParam):
        ssa.estimate_stationary(HILL, t_sample=0.0)
    with pytest.raises(InvalidParam):
        ssa.estimate_stationary(HILL, n_traj=0)


def test_defaults_follow_slowest_relaxation():
    assert ssa.default_burn_in(HILL) == pytest.approx(50.0)
    assert ssa.default_sample_dt(HILL) == pytest.approx(1.0)


@pytest.mark.slow
def test_a_marginal_passes_poisson_chi_square():
    # thin samples to several A-relaxation times so they are close to independent
    p = SystemParams(1.0, 0.2, 0.5, Hill(2, 5), GEO)
    est = ssa.estimate_stationary(p, n_traj=50, t_burn=10 / p.gamma_A, t_sample=5000.0,
                                  sample_dt=5 / p.gamma_A, seed=8)
    counts = est.a_histogram.astype(float)
    n = counts.sum()
    a = np.arange(len(counts))
    expected = n * stats.poisson.pmf(a, p.lam)
    expected[-1] += n * stats.poisson.sf(a[-1], p.lam)
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    assert chi2 < stats.chi2.ppf(0.999, len(exp) - 1)


@pytest.mark.slow
def test_mean_burst_rate_matches_stationary_mean():
    # with unit bursts, births per unit time equal gamma_B E[B] at stationarity
    p = SystemParams(1.0, 0.2, 0.5, Hill(2, 5), Q1)
    est = ssa.estimate_stationary(p, n_traj=40, t_burn=50.0, t_sample=2000.0, seed=4)
    rate = est.bursts / (40 * (50.0 + 2000.0))
    assert rate == pytest.approx(p.gamma_B * analytics.mean_B(p), rel=0.02)
