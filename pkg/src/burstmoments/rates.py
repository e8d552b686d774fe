"""Production-rate functions R(a) for the B-birth channel.

Each rate is an immutable, hashable object that evaluates on integer arrays,
declares a growth envelope for Poisson tail control, and (where defined)
extends to real arguments with a derivative for the LNA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam, NotDifferentiable
from .numerics import Growth


class RateFunction:
    """Base class. Subclasses implement ``_eval`` on float arrays."""

    kind = "abstract"

    def __call__(self, a):
        arr = np.asarray(a, dtype=float)
        out = self._eval(arr)
        return float(out) if np.ndim(a) == 0 else out

    def _eval(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def growth(self) -> Growth:
        raise NotImplementedError

    def at_real(self, x: float) -> float:
        """R extended to a real argument (used at the LNA fixed point)."""
        return float(self._eval(np.asarray(float(x))))

    def derivative(self, x: float) -> float:
        raise NotDifferentiable(f"{self.kind} rate has no derivative")

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(RateFunction):
    c: float
    kind = "constant"

    def __post_init__(self):
        if self.c < 0:
            raise InvalidParam("c", "rate must be nonnegative")

    def _eval(self, a):
        return np.full(np.shape(a), float(self.c))

    @property
    def growth(self):
        return Growth.bounded(self.c)

    def derivative(self, x):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class Linear(RateFunction):
    """R(a) = R_c * a."""

    R_c: float
    kind = "linear"

    def __post_init__(self):
        if self.R_c < 0:
            raise InvalidParam("R_c", "slope must be nonnegative")

    def _eval(self, a):
        return self.R_c * a

    @property
    def growth(self):
        return Growth.polynomial(1, scale=self.R_c, shift=1.0)

    def derivative(self, x):
        return float(self.R_c)

    def to_dict(self):
        return {"kind": self.kind, "R_c": self.R_c}


@dataclass(frozen=True)
class Hill(RateFunction):
    """R(a) = u / (1 + u) with u = (a / A_0) ** n_h; bounded by 1."""

    n_h: float
    A_0: float
    kind = "hill"

    def __post_init__(self):
        if not self.n_h > 0:
            raise InvalidParam("n_h", "Hill coefficient must be positive")
        if not self.A_0 > 0:
            raise InvalidParam("A_0", "threshold must be positive")

    def _eval(self, a):
        u = (a / self.A_0) ** self.n_h
        # u / (1 + u) loses everything once u overflows; 1 / (1 + 1/u) does not
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(u > 1.0, 1.0 / (1.0 + 1.0 / u), u / (1.0 + u))

    @property
    def growth(self):
        return Growth.bounded(1.0)

    def derivative(self, x):
        x = float(x)
        if x <= 0:
            return float(self.n_h / self.A_0) if self.n_h == 1 else 0.0
        u = (x / self.A_0) ** self.n_h
        return self.n_h * u / (x * (1.0 + u) ** 2)

    def to_dict(self):
        return {"kind": self.kind, "n_h": self.n_h, "A_0": self.A_0}


@dataclass(frozen=True)
class Polynomial(RateFunction):
    """R(a) = sum_i coeffs[i] * a**i, coefficients in ascending order."""

    coeffs: tuple
    kind = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise InvalidParam("coeffs", "need at least one coefficient")

    @property
    def degree(self):
        nonzero = [i for i, c in enumerate(self.coeffs) if c != 0.0]
        return nonzero[-1] if nonzero else 0

    def _eval(self, a):
        return np.polynomial.polynomial.polyval(a, self.coeffs)

    @property
    def growth(self):
        scale = math.fsum(abs(c) for c in self.coeffs)
        return Growth.polynomial(self.degree, scale=scale, shift=1.0)

    def derivative(self, x):
        d = np.polynomial.polynomial.polyder(self.coeffs)
        return float(np.polynomial.polynomial.polyval(float(x), d))

    def to_dict(self):
        return {"kind": self.kind, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Tabulated(RateFunction):
    """R(a) = values[a] for a < len(values), else ``tail_value``."""

    values: tuple
    tail_value: float
    kind = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(v < 0 for v in self.values) or self.tail_value < 0:
            raise InvalidParam("values", "tabulated rates must be nonnegative")

    def _eval(self, a):
        table = np.append(np.asarray(self.values, dtype=float), self.tail_value)
        idx = np.clip(a, 0, len(self.values)).astype(np.int64)
        return table[idx]

    @property
    def growth(self):
        return Growth.bounded(max(self.values + (self.tail_value,)))

    def at_real(self, x):
        raise NotDifferentiable("tabulated rates are only defined on integers")

    def to_dict(self):
        return {"kind": self.kind, "values": list(self.values), "tail_value": self.tail_value}


@dataclass(frozen=True)
class Blend(RateFunction):
    """(1 - theta) * first + theta * second; homotopy between two rates."""

    first: RateFunction
    second: RateFunction
    theta: float
    kind = "blend"

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidParam("theta", "must lie in [0, 1]")

    def _eval(self, a):
        return (1.0 - self.theta) * self.first._eval(a) + self.theta * self.second._eval(a)

    @property
    def growth(self):
        g1, g2 = self.first.growth, self.second.growth
        if "unknown" in (g1.kind, g2.kind):
            return Growth.unknown()
        degree = max(g1.degree, g2.degree)
        scale = (1.0 - self.theta) * g1.scale + self.theta * g2.scale
        shift = max(g1.shift, g2.shift, 1.0)
        if degree == 0:
            return Growth.bounded(scale)
        return Growth.polynomial(degree, scale=scale, shift=shift)

    def at_real(self, x):
        return (1.0 - self.theta) * self.first.at_real(x) + self.theta * self.second.at_real(x)

    def derivative(self, x):
        return ((1.0 - self.theta) * self.first.derivative(x)
                + self.theta * self.second.derivative(x))

    def to_dict(self):
        return {"kind": self.kind, "theta": self.theta,
                "first": self.first.to_dict(), "second": self.second.to_dict()}


def rate_from_dict(spec: dict) -> RateFunction:
    """Build a rate from its serialized form (see ``to_dict``)."""
    spec = dict(spec)
    kind = str(spec.pop("kind", "")).lower()
    try:
        if kind == "constant":
            return Constant(float(spec["c"]))
        if kind == "linear":
            return Linear(float(spec["R_c"]))
        if kind == "hill":
            return Hill(float(spec["n_h"]), float(spec["A_0"]))
        if kind == "polynomial":
            return Polynomial(tuple(spec["coeffs"]))
        if kind == "tabulated":
            return Tabulated(tuple(spec["values"]), float(spec["tail_value"]))
        if kind == "blend":
            return Blend(rate_from_dict(spec["first"]), rate_from_dict(spec["second"]),
                         float(spec["theta"]))
    except KeyError as exc:
        raise InvalidParam(str(exc.args[0]), f"missing for rate kind {kind!r}") from None
    raise InvalidParam("kind", f"unknown rate kind {kind!r}")
