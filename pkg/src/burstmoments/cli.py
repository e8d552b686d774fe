"""Variance bounds, series and oracles for a bursty two-species birth-death network.

    burstmoments report   [--config PATH] ...   one parameter point, JSON
    burstmoments sweep    [--config PATH] ...   var(B) against E_P[A], CSV
    burstmoments grid     [--config PATH] ...   relative errors over (gamma_B, E_P[A]), CSV
    burstmoments validate                       invariant self-checks

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import cme, sweep, validate
from .config import METHODS, RunConfig, load_config
from .errors import ConfigError, NumericalError, WrongRateKind

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _methods(text: str) -> tuple:
    items = tuple(m.strip().lower() for m in text.split(",") if m.strip())
    bad = [m for m in items if m not in METHODS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"methods must be a comma list from {','.join(METHODS)}")
    return items


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--seed", type=_seed, help="master seed for all simulations")
    common.add_argument("--methods", type=_methods, help=f"comma list from {','.join(METHODS)}")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--rel-tol", type=float, help="relative tolerance of Poisson sums")
    common.add_argument("--order", type=int, help="series truncation order N")
    common.add_argument("--workers", type=int, help="parallel sweep points")
    common.add_argument("--no-plot", action="store_true", help="skip figure output")

    parser = argparse.ArgumentParser(prog="burstmoments", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    rep = sub.add_parser("report", parents=[common], help="moments at a single point")
    rep.add_argument("--mean-a", type=float, help="E_P[A]; sets gamma_A = F / mean_A")
    rep.add_argument("--gamma-b", type=float)
    rep.add_argument("--dump-stationary", action="store_true",
                     help="also write the oracle's stationary distribution as CSV")
    sub.add_parser("sweep", parents=[common], help="var(B) against E_P[A]")
    sub.add_parser("grid", parents=[common], help="relative-error grid")
    sub.add_parser("validate", parents=[common], help="run the invariant self-checks")
    return parser


def resolve_config(args) -> RunConfig:
    config = load_config(args.config)
    changes = dict(seed=args.seed, methods=args.methods, out=args.out, rel_tol=args.rel_tol,
                   order=args.order, workers=args.workers)
    if getattr(args, "mean_a", None) is not None:
        changes["mean_A"] = args.mean_a
    if getattr(args, "gamma_b", None) is not None:
        changes["gamma_B"] = args.gamma_b
    if args.no_plot:
        changes["plot"] = False
    try:
        return config.with_overrides(**changes)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def _report(config: RunConfig, args) -> int:
    result = sweep.run_report(config)
    config.out.mkdir(parents=True, exist_ok=True)
    path = config.out / "report.json"
    path.write_text(json.dumps(result, indent=2, sort_keys=True, default=sweep.to_jsonable) + "\n")
    print(f"mean_B      {result['mean_B']:.10g}")
    print(f"var_B bound {result['var_bound']:.10g}")
    print(f"var_B N={result['series_order']:<3d} {result['var_series']:.10g}")
    if result["lna_var"] is not None:
        print(f"var_B LNA   {result['lna_var']:.10g}")
    print(f"cov(A,B)    {result['cov_AB']:.10g}")
    if config.plot:
        from .plotting import plot_spectrum

        plot_spectrum(result, config.out / "report_spectrum.png")
    if args.dump_stationary:
        sol = cme.solve_auto(config.params(), config.cme.defect_tol, config.cme.max_states)
        cme.write_stationary_csv(sol, config.out / "stationary.csv")
    print(f"wrote {path}")
    return EXIT_OK


def _table(config: RunConfig, kind: str) -> int:
    table = sweep.run_sweep(config) if kind == "sweep" else sweep.run_grid(config)
    path = table.write(config.out / f"{kind}.csv")
    if config.plot:
        from .plotting import plot_grid, plot_sweep

        (plot_sweep if kind == "sweep" else plot_grid)(table, config.out / f"{kind}.png")
    n_err = sum(1 for row in table.rows for v in row.values()
                if isinstance(v, str) and v.startswith("ERR:"))
    print(f"wrote {path} ({len(table.rows)} rows, {n_err} error cells)")
    return EXIT_OK


def _validate() -> int:
    checks = validate.run_all()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    return EXIT_OK if validate.all_passed(checks) else EXIT_NUMERICAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _validate()
        config = resolve_config(args)
        if args.command == "report":
            return _report(config, args)
        return _table(config, args.command)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, WrongRateKind) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
