"""Run configuration: a TOML file plus command-line overrides.

Every default reproduces the Hill(9, 100), F = 1, gamma_B = 0.01,
Uniform{1..16} sweep over 40 log-spaced values of E_P[A] in [0.1, 200].

Example::

    seed = 7
    methods = ["bound", "series", "lna", "cme"]

    [system]
    F = 1.0
    gamma_B = 0.01
    mean_A = 100.0        # single-point report only

    [rate]
    kind = "hill"
    n_h = 9
    A_0 = 100

    [burst]
    kind = "uniform"
    a = 1
    b = 16

    [sweep]
    mean_A = { spacing = "log", start = 0.1, stop = 200, num = 40 }
    gamma_B = [0.01]
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .burst import BurstDistribution, burst_from_dict
from .errors import ConfigError, InvalidParam
from .model import SystemParams
from .numerics import DEFAULT_REL_TOL
from .rates import RateFunction, rate_from_dict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

METHODS = ("bound", "series", "lna", "ssa", "cme")


@dataclass(frozen=True)
class SsaSettings:
    n_traj: int = 200
    t_burn: float | None = None
    # None: 100 relaxation times of the slower species per trajectory
    t_sample: float | None = None
    sample_dt: float | None = None
    # stretch runs so that roughly this many bursts are observed in total
    target_bursts: float = 30.0
    max_events: int = 4_000_000_000


@dataclass(frozen=True)
class CmeSettings:
    max_states: int = 150_000
    defect_tol: float = 1e-9


@dataclass(frozen=True)
class RunConfig:
    F: float = 1.0
    gamma_B: float = 0.01
    mean_A: float = 100.0
    rate: RateFunction = field(default_factory=lambda: rate_from_dict({"kind": "hill", "n_h": 9, "A_0": 100}))
    burst: BurstDistribution = field(default_factory=lambda: burst_from_dict({"kind": "uniform", "a": 1, "b": 16}))
    mean_A_axis: tuple = tuple(np.logspace(np.log10(0.1), np.log10(200.0), 40).tolist())
    gamma_B_axis: tuple = (0.01,)
    methods: tuple = METHODS
    order: int = 20
    rel_tol: float = DEFAULT_REL_TOL
    seed: int = 0
    out: Path = Path("out")
    ssa: SsaSettings = SsaSettings()
    cme: CmeSettings = CmeSettings()
    plot: bool = True
    workers: int = 1

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise InvalidParam("methods", f"unknown method(s) {bad}; choose from {list(METHODS)}")
        if not self.mean_A_axis or not self.gamma_B_axis:
            raise InvalidParam("sweep", "axes must be non-empty")
        if any(not x > 0 for x in (*self.mean_A_axis, *self.gamma_B_axis)):
            raise InvalidParam("sweep", "axis values must be positive")
        if not 0 < self.rel_tol < 1:
            raise InvalidParam("rel_tol", "must lie in (0, 1)")
        if self.order < 1:
            raise InvalidParam("order", "must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidParam("seed", "must be an unsigned 64-bit integer")

    def params(self, mean_a: float | None = None, gamma_b: float | None = None) -> SystemParams:
        mean_a = self.mean_A if mean_a is None else mean_a
        gamma_b = self.gamma_B if gamma_b is None else gamma_b
        return SystemParams.from_mean_a(self.F, mean_a, gamma_b, self.rate, self.burst)

    def with_overrides(self, **changes) -> RunConfig:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        return {
            "F": self.F, "gamma_B": self.gamma_B, "mean_A": self.mean_A,
            "rate": self.rate.to_dict(), "burst": self.burst.to_dict(),
            "mean_A_axis": list(self.mean_A_axis), "gamma_B_axis": list(self.gamma_B_axis),
            "methods": list(self.methods), "order": self.order, "rel_tol": self.rel_tol,
            "seed": self.seed, "ssa": self.ssa.__dict__, "cme": self.cme.__dict__,
        }


def _axis(value, name) -> tuple:
    if isinstance(value, (int, float)):
        return (float(value),)
    if isinstance(value, list):
        return tuple(float(v) for v in value)
    if isinstance(value, dict):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except KeyError as exc:
            raise InvalidParam(name, f"range needs {exc.args[0]!r}") from None
        spacing = value.get("spacing", "linear")
        if spacing == "log":
            if start <= 0:
                raise InvalidParam(name, "log spacing needs a positive start")
            return tuple(np.logspace(np.log10(start), np.log10(stop), num).tolist())
        if spacing == "linear":
            return tuple(np.linspace(start, stop, num).tolist())
        raise InvalidParam(name, f"unknown spacing {spacing!r}")
    raise InvalidParam(name, "expected a number, a list or a range table")


def _settings(cls, table: dict, name: str):
    known = {f.name for f in fields(cls)}
    extra = set(table) - known
    if extra:
        raise InvalidParam(name, f"unknown keys {sorted(extra)}")
    return cls(**table)


def config_from_dict(data: dict) -> RunConfig:
    data = dict(data)
    kwargs = {}
    system = data.pop("system", {})
    extra = set(system) - {"F", "gamma_B", "mean_A"}
    if extra:
        raise InvalidParam("system", f"unknown keys {sorted(extra)}")
    for key in ("F", "gamma_B", "mean_A"):
        if key in system:
            kwargs[key] = float(system[key])
    if "rate" in data:
        kwargs["rate"] = rate_from_dict(data.pop("rate"))
    if "burst" in data:
        kwargs["burst"] = burst_from_dict(data.pop("burst"))
    sweep = data.pop("sweep", {})
    if "mean_A" in sweep:
        kwargs["mean_A_axis"] = _axis(sweep["mean_A"], "sweep.mean_A")
    if "gamma_B" in sweep:
        kwargs["gamma_B_axis"] = _axis(sweep["gamma_B"], "sweep.gamma_B")
    elif "gamma_B" in kwargs:
        kwargs["gamma_B_axis"] = (kwargs["gamma_B"],)
    if "ssa" in data:
        kwargs["ssa"] = _settings(SsaSettings, data.pop("ssa"), "ssa")
    if "cme" in data:
        kwargs["cme"] = _settings(CmeSettings, data.pop("cme"), "cme")
    if "methods" in data:
        kwargs["methods"] = tuple(str(m).lower() for m in data.pop("methods"))
    for key, cast in (("order", int), ("rel_tol", float), ("seed", int), ("plot", bool),
                      ("workers", int)):
        if key in data:
            kwargs[key] = cast(data.pop(key))
    if "out" in data:
        kwargs["out"] = Path(data.pop("out"))
    if data:
        raise InvalidParam("config", f"unknown keys {sorted(data)}")
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return config_from_dict(data)
