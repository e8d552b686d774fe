"""Parameter sweeps comparing the bound, series, LNA, SSA and CME.

Each sweep point is independent; points run on a process pool and rows are
written in axis order, so the CSV is a function of the config and seed only.
A method that fails at a point leaves ``ERR:<ExceptionName>`` in its cell;
a method that was not requested leaves ``NA``.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytics, cme, lna, ssa
from .burst import BINOMIAL_SHIFT_CONVENTION
from .config import RunConfig
from .errors import GridTooLarge, NumericalError, WrongRateKind
from .model import SystemParams

SWEEP_COLUMNS = ("MeanA", "BoundVarB", "SeriesVarB", "VarFromLNA", "VarB_SSA", "VarB_SSA_SE",
                 "VarB_CME", "CovAB", "MeanB")
GRID_COLUMNS = ("gamma_B", "MeanA", "RelErrBoundPct", "RelErrLnaPct", "Reference", "VarBRef")
NA = "NA"
# fraction of the event budget a planned SSA run may use
_EVENT_HEADROOM = 0.9

_RECOVERABLE = (NumericalError, WrongRateKind)


def error_marker(exc: BaseException) -> str:
    return f"ERR:{type(exc).__name__}"


def point_seed(seed: int, *key: int) -> int:
    """Independent 64-bit seed for the sweep point with index ``key``."""
    return int(np.random.SeedSequence([seed, *key]).generate_state(1, np.uint64)[0])


def ssa_plan(params: SystemParams, config: RunConfig) -> dict:
    """Run lengths for one SSA estimate.

    Trajectories are stretched until about ``target_bursts`` bursts are
    expected in total, within the event budget; this matters when R is tiny
    and the B channel almost never fires.
    """
    s = config.ssa
    relax = max(1.0 / params.gamma_A, 1.0 / params.gamma_B)
    t_burn = ssa.default_burn_in(params) if s.t_burn is None else s.t_burn
    t_sample = 100.0 * relax if s.t_sample is None else s.t_sample
    s0 = analytics.sigma0(params, config.rel_tol)
    if s0 > 0:
        t_sample = max(t_sample, s.target_bursts / (s0 * s.n_traj))
    event_rate = 2.0 * params.F + s0 * (1.0 + params.mean_q)
    budget = _EVENT_HEADROOM * s.max_events / (s.n_traj * event_rate)
    t_sample = min(t_sample, budget - t_burn)
    if t_sample <= 0:
        raise GridTooLarge("event budget cannot cover the burn-in period")
    return {"n_traj": s.n_traj, "t_burn": t_burn, "t_sample": t_sample,
            "sample_dt": s.sample_dt, "max_events": s.max_events,
            "expected_bursts": s0 * s.n_traj * t_sample}


def _ssa(params, config, seed):
    plan = ssa_plan(params, config)
    est = ssa.estimate_stationary(params, plan["n_traj"], plan["t_burn"], plan["t_sample"],
                                  plan["sample_dt"], seed=seed, max_events=plan["max_events"])
    return est, {**plan, "seed": seed, "events": est.events, "bursts": est.bursts}


def _cme(params, config):
    a_max, b_max = cme.default_grid(params)
    if (a_max + 1) * (b_max + 1) > config.cme.max_states:
        raise GridTooLarge(f"default grid {a_max}x{b_max} exceeds {config.cme.max_states} states")
    return cme.solve_auto(params, config.cme.defect_tol, config.cme.max_states)


def _attempt(cell: dict, meta: dict, name: str, fn):
    try:
        return fn()
    except _RECOVERABLE as exc:
        cell[name] = error_marker(exc)
        meta.setdefault("errors", {})[name] = str(exc)
        return None


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt(row[c]) for c in self.columns])
        sidecar = path.with_suffix(".json")
        sidecar.write_text(json.dumps(self.metadata, indent=2, sort_keys=True, default=to_jsonable) + "\n")
        return path


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return repr(float(value))


def to_jsonable(value):
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _sweep_point(args) -> tuple[dict, dict]:
    config, index, mean_a = args
    params = config.params(mean_a, config.gamma_B)
    methods = set(config.methods)
    row = {c: NA for c in SWEEP_COLUMNS}
    meta = {"MeanA": mean_a, "gamma_A": params.gamma_A}
    row["MeanA"] = mean_a
    row["MeanB"] = analytics.mean_B(params, config.rel_tol)
    row["CovAB"] = analytics.covariance_AB(params, config.rel_tol)
    if "bound" in methods:
        v = _attempt(row, meta, "BoundVarB", lambda: analytics.variance_bound(params, config.rel_tol))
        if v is not None:
            row["BoundVarB"] = v
    if "series" in methods:
        v = _attempt(row, meta, "SeriesVarB",
                     lambda: analytics.variance_series(params, config.order, config.rel_tol))
        if v is not None:
            row["SeriesVarB"] = v
    if "lna" in methods:
        v = _attempt(row, meta, "VarFromLNA", lambda: lna.lna_variance_B(params))
        if v is not None:
            row["VarFromLNA"] = v
    if "ssa" in methods:
        out = _attempt(row, meta, "VarB_SSA", lambda: _ssa(params, config, point_seed(config.seed, index)))
        if out is not None:
            row["VarB_SSA"], row["VarB_SSA_SE"] = out[0].var_B, out[0].se_var_B
            meta["ssa"] = out[1]
        else:
            row["VarB_SSA_SE"] = row["VarB_SSA"]
    if "cme" in methods:
        sol = _attempt(row, meta, "VarB_CME", lambda: _cme(params, config))
        if sol is not None:
            row["VarB_CME"], meta["cme"] = cme.moments(sol)[3], sol.to_dict()
    return row, meta


def _grid_point(args) -> tuple[dict, dict]:
    config, i, j, gamma_b, mean_a = args
    params = config.params(mean_a, gamma_b)
    row = {"gamma_B": gamma_b, "MeanA": mean_a, "RelErrBoundPct": NA, "RelErrLnaPct": NA,
           "Reference": NA, "VarBRef": NA}
    meta = {"gamma_B": gamma_b, "MeanA": mean_a}

    ref = None
    if "cme" in config.methods:
        sol = _attempt(meta, meta, "cme_failure", lambda: _cme(params, config))
        if sol is not None:
            ref, meta["cme"] = cme.moments(sol)[3], sol.to_dict()
            row["Reference"] = "CME"
    if ref is None and "ssa" in config.methods:
        out = _attempt(row, meta, "VarBRef", lambda: _ssa(params, config, point_seed(config.seed, i, j)))
        if out is not None:
            ref, meta["ssa"] = out[0].var_B, out[1]
            meta["ssa"]["se_var_B"] = out[0].se_var_B
            row["Reference"] = "SSA"
    if ref is None:
        if row["VarBRef"] == NA:
            row["VarBRef"] = "ERR:NoReference"
        row["RelErrBoundPct"] = row["RelErrLnaPct"] = row["VarBRef"]
        return row, meta
    row["VarBRef"] = ref

    def rel(estimate):
        return 100.0 * abs(ref - estimate) / ref

    v = _attempt(row, meta, "RelErrBoundPct", lambda: analytics.variance_bound(params, config.rel_tol))
    if v is not None:
        meta["bound"] = v
        row["RelErrBoundPct"] = rel(v)
    v = _attempt(row, meta, "RelErrLnaPct", lambda: lna.lna_variance_B(params))
    if v is not None:
        meta["lna"] = v
        row["RelErrLnaPct"] = rel(v)
    return row, meta


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def _common_metadata(config: RunConfig) -> dict:
    params = config.params(config.mean_A_axis[0], config.gamma_B_axis[0])
    try:
        convention = lna.lna_build(params).convention
    except WrongRateKind:
        convention = None
    return {
        "N": config.order,
        "rel_tol": config.rel_tol,
        "seed": config.seed,
        "burst": config.burst.to_dict(),
        "burst_m_N": config.burst.max_q,
        "burst_shift_convention": BINOMIAL_SHIFT_CONVENTION,
        "lna_convention": convention,
        "methods": list(config.methods),
        "config": config.to_dict(),
    }


def run_sweep(config: RunConfig) -> Table:
    """One row per value of E_P[A] at gamma_B = ``config.gamma_B``."""
    jobs = [(config, i, float(m)) for i, m in enumerate(config.mean_A_axis)]
    results = _map(_sweep_point, jobs, config.workers)
    meta = _common_metadata(config)
    meta.update(gamma_B=config.gamma_B, mean_A_grid=list(config.mean_A_axis),
                points=[m for _, m in results])
    return Table(SWEEP_COLUMNS, [r for r, _ in results], meta)


def run_grid(config: RunConfig) -> Table:
    """Relative errors of bound and LNA over gamma_B x E_P[A], gamma_B outermost."""
    jobs = [(config, i, j, float(g), float(m))
            for i, g in enumerate(config.gamma_B_axis)
            for j, m in enumerate(config.mean_A_axis)]
    results = _map(_grid_point, jobs, config.workers)
    meta = _common_metadata(config)
    meta.update(gamma_B_grid=list(config.gamma_B_axis), mean_A_grid=list(config.mean_A_axis),
                points=[m for _, m in results])
    return Table(GRID_COLUMNS, [r for r, _ in results], meta)


def run_report(config: RunConfig) -> dict:
    """All quantities at the single point (config.mean_A, config.gamma_B)."""
    params = config.params()
    report = analytics.moment_report(params, config.order, config.rel_tol, with_lna="lna" in config.methods)
    out = report.to_dict()
    if "ssa" in config.methods:
        errs = {}
        res = _attempt(errs, errs, "ssa", lambda: _ssa(params, config, point_seed(config.seed, 0)))
        out["ssa"] = errs or {**res[0].to_dict(), "plan": res[1]}
    if "cme" in config.methods:
        errs = {}
        res = _attempt(errs, errs, "cme", lambda: _cme_full(params, config))
        out["cme"] = errs or res
    out["expansion"] = {
        "weights": list(analytics.expansion(params, config.order, config.rel_tol).weights),
        "series_terms": analytics.series_terms(params, config.order, config.rel_tol).tolist(),
    }
    return out


def _cme_full(params, config) -> dict:
    sol = _cme(params, config)
    mean_a, var_a, mean_b, var_b, cov = cme.moments(sol)
    return {**sol.to_dict(), "mean_A": mean_a, "var_A": var_a, "mean_B": mean_b, "var_B": var_b,
            "cov_AB": cov, "a_marginal_tv": cme.a_marginal_tv(sol, params.lam)}


def finite(value) -> bool:
    return not isinstance(value, str) and math.isfinite(value)
