"""Odd scalar nonlinearities f with closed-form primitives F.

Every variant works elementwise on numpy arrays and on Python floats.
Primitives of the logarithmic variants use the Gauss hypergeometric
function through

    Q_b(x) = ∫_0^x t^b / (1 + t) dt = x^{b+1}/(b+1) · ₂F₁(1, b+1; b+2; -x),   b > -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import hyp2f1

from .errors import ConfigurationError, DomainError

__all__ = [
    "Nonlinearity",
    "PurePower",
    "PowerLog",
    "SaturatedPower",
    "PiecewisePower",
    "PiecewisePowerLog",
    "f_eval",
    "F_eval",
    "g_alpha_eval",
    "fprime_eval",
    "growth_bound",
    "from_dict",
]

_LN2 = math.log(2.0)


def _q_int(b: float, x):
    """Q_b(x) for b > -1, x >= 0."""
    x = np.asarray(x, dtype=float)
    return x ** (b + 1) / (b + 1) * hyp2f1(1.0, b + 1.0, b + 2.0, -x)


def _q_from_one(b: float, x):
    """∫_1^x t^b/(1+t) dt for x >= 1 and any real b."""
    x = np.asarray(x, dtype=float)
    if b > -1:
        return _q_int(b, x) - _q_int(b, 1.0)
    # t -> 1/t maps the integrand to w^{-b-1}/(1+w) on [1/x, 1]
    c = -b - 1
    return _q_int(c, 1.0) - _q_int(c, 1.0 / x)


def _odd(fun, s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    return np.sign(s) * fun(a)


def _scalar_out(s, out):
    return float(out) if np.ndim(s) == 0 else out


class Nonlinearity:
    """Base class; subclasses implement the branch on s >= 0."""

    kind = "abstract"
    # interior points where f' jumps (on s > 0)
    junctions: tuple[float, ...] = ()

    def _f_pos(self, a):
        raise NotImplementedError

    def _F_pos(self, a):
        raise NotImplementedError

    def _fp_pos(self, a):
        raise NotImplementedError

    def singular_at_zero(self) -> bool:
        return False

    def f(self, s):
        return _scalar_out(s, _odd(self._f_pos, s))

    def F(self, s):
        return _scalar_out(s, self._F_pos(np.abs(np.asarray(s, dtype=float))))

    def fprime(self, s):
        s_arr = np.asarray(s, dtype=float)
        a = np.abs(s_arr)
        if self.singular_at_zero() and np.any(a == 0):
            raise DomainError(f"{self.kind}: f' undefined at s = 0")
        return _scalar_out(s, self._fp_pos(a))

    def growth(self) -> tuple[float, float]:
        """Declared (C, r) with |f(s)| <= C (1 + |s|^{r-1})."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        d.update(self.__dict__)
        return d


@dataclass(frozen=True)
class PurePower(Nonlinearity):
    """f(s) = |s|^{r-2} s."""

    r: float
    kind = "pure_power"

    def __post_init__(self):
        if not self.r > 1:
            raise ConfigurationError(f"pure_power needs r > 1, got {self.r}")

    def singular_at_zero(self):
        return self.r < 2

    def _f_pos(self, a):
        return a ** (self.r - 1)

    def _F_pos(self, a):
        return a**self.r / self.r

    def _fp_pos(self, a):
        if self.r == 2:
            return np.ones_like(a)
        return (self.r - 1) * a ** (self.r - 2)

    def growth(self):
        return 1.0, self.r

    def to_dict(self):
        return {"kind": self.kind, "r": self.r}


@dataclass(frozen=True)
class PowerLog(Nonlinearity):
    """f(s) = |s|^{p-2} s ln(|s| + 1)."""

    p: float
    kind = "power_log"

    def __post_init__(self):
        if not self.p > 1:
            raise ConfigurationError(f"power_log needs p > 1, got {self.p}")

    def _f_pos(self, a):
        return a ** (self.p - 1) * np.log1p(a)

    def _F_pos(self, a):
        p = self.p
        # ∫ t^{p-1} ln(1+t) = t^p ln(1+t)/p - (1/p) ∫ t^p/(1+t)
        return (a**p * np.log1p(a) - _q_int(p, a)) / p

    def _fp_pos(self, a):
        p = self.p
        a = np.asarray(a, dtype=float)
        safe = np.where(a > 0, a, 1.0)
        first = np.where(a > 0, (p - 1) * safe ** (p - 2) * np.log1p(a), 0.0)
        return first + a ** (p - 1) / (1 + a)

    def growth(self):
        # ln(1+a) <= sqrt(a) for a >= 0
        return 1.0, self.p + 0.5

    def to_dict(self):
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class SaturatedPower(Nonlinearity):
    """f(s) = |s|^{p-1} s / (|s| + 1)."""

    p: float
    kind = "saturated_power"

    def __post_init__(self):
        if not self.p > 1:
            raise ConfigurationError(f"saturated_power needs p > 1, got {self.p}")

    def _f_pos(self, a):
        return a**self.p / (1 + a)

    def _F_pos(self, a):
        return _q_int(self.p, a)

    def _fp_pos(self, a):
        p = self.p
        return p * a ** (p - 1) / (1 + a) - a**p / (1 + a) ** 2

    def growth(self):
        return 1.0, self.p

    def to_dict(self):
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class PiecewisePower(Nonlinearity):
    """Odd extension of s^beta on [0, 1] and s^r on [1, ∞)."""

    beta: float
    r: float
    kind = "piecewise_power"
    junctions = (1.0,)

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigurationError(f"piecewise_power needs beta > 0, got {self.beta}")

    def singular_at_zero(self):
        return self.beta < 1

    def _f_pos(self, a):
        a = np.asarray(a, dtype=float)
        low = np.minimum(a, 1.0) ** self.beta
        high = np.maximum(a, 1.0) ** self.r
        return np.where(a <= 1.0, low, high)

    def _F_pos(self, a):
        a = np.asarray(a, dtype=float)
        b, r = self.beta, self.r
        low = np.minimum(a, 1.0) ** (b + 1) / (b + 1)
        hi_a = np.maximum(a, 1.0)
        if r == -1:
            upper = np.log(hi_a)
        else:
            upper = (hi_a ** (r + 1) - 1.0) / (r + 1)
        return low + np.where(a > 1.0, upper, 0.0)

    def _fp_pos(self, a):
        a = np.asarray(a, dtype=float)
        b, r = self.beta, self.r
        with np.errstate(divide="ignore"):
            low = b * np.minimum(a, 1.0) ** (b - 1) if b != 1 else np.ones_like(a)
        high = r * np.maximum(a, 1.0) ** (r - 1)
        # right-hand derivative at the junction
        return np.where(a < 1.0, low, high)

    def growth(self):
        return 1.0, max(self.r + 1.0, 2.0)

    def to_dict(self):
        return {"kind": self.kind, "beta": self.beta, "r": self.r}


@dataclass(frozen=True)
class PiecewisePowerLog(Nonlinearity):
    """Odd extension of s^beta on [0, 1] and s^{theta-1} ln(s+1)/ln 2 on [1, ∞)."""

    beta: float
    theta: float
    kind = "piecewise_power_log"
    junctions = (1.0,)

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigurationError(f"piecewise_power_log needs beta > 0, got {self.beta}")
        if self.theta == 0:
            raise ConfigurationError("piecewise_power_log needs theta != 0")

    def singular_at_zero(self):
        return self.beta < 1

    def _f_pos(self, a):
        a = np.asarray(a, dtype=float)
        low = np.minimum(a, 1.0) ** self.beta
        hi_a = np.maximum(a, 1.0)
        high = hi_a ** (self.theta - 1) * np.log1p(hi_a) / _LN2
        return np.where(a <= 1.0, low, high)

    def _F_pos(self, a):
        a = np.asarray(a, dtype=float)
        b, th = self.beta, self.theta
        low = np.minimum(a, 1.0) ** (b + 1) / (b + 1)
        x = np.maximum(a, 1.0)
        # ∫_1^x t^{θ-1} ln(1+t) dt = [t^θ ln(1+t)/θ]_1^x - (1/θ) ∫_1^x t^θ/(1+t) dt
        upper = ((x**th * np.log1p(x) - _LN2) - _q_from_one(th, x)) / (th * _LN2)
        return low + np.where(a > 1.0, upper, 0.0)

    def _fp_pos(self, a):
        a = np.asarray(a, dtype=float)
        b, th = self.beta, self.theta
        with np.errstate(divide="ignore"):
            low = b * np.minimum(a, 1.0) ** (b - 1) if b != 1 else np.ones_like(a)
        x = np.maximum(a, 1.0)
        high = ((th - 1) * x ** (th - 2) * np.log1p(x) + x ** (th - 1) / (1 + x)) / _LN2
        return np.where(a < 1.0, low, high)

    def growth(self):
        # for s >= 1: s^{θ-1} <= 1 (θ <= 1) and ln(1+s)/ln 2 <= 2 s
        return 2.0, max(self.theta + 1.0, 2.0)

    def to_dict(self):
        return {"kind": self.kind, "beta": self.beta, "theta": self.theta}


def f_eval(spec: Nonlinearity, s):
    return spec.f(s)


def F_eval(spec: Nonlinearity, s):
    return spec.F(s)


def g_alpha_eval(spec: Nonlinearity, s, alpha: float):
    """s f(s) - alpha F(s)."""
    s_arr = np.asarray(s, dtype=float)
    out = s_arr * spec.f(s_arr) - alpha * spec.F(s_arr)
    return _scalar_out(s, out)


def fprime_eval(spec: Nonlinearity, s, with_flag: bool = False):
    """f'(s).  At a junction the right-hand derivative is returned.

    With ``with_flag=True`` returns ``(value, nonsmooth)`` where ``nonsmooth``
    marks evaluation at a junction point.
    """
    value = spec.fprime(s)
    if not with_flag:
        return value
    a = np.abs(np.asarray(s, dtype=float))
    nonsmooth = np.zeros(a.shape, dtype=bool)
    for j in spec.junctions:
        nonsmooth |= a == j
    if np.ndim(s) == 0:
        return value, bool(nonsmooth)
    return value, nonsmooth


def growth_bound(spec: Nonlinearity) -> tuple[float, float]:
    return spec.growth()


_KINDS = {
    "pure_power": PurePower,
    "power_log": PowerLog,
    "saturated_power": SaturatedPower,
    "piecewise_power": PiecewisePower,
    "piecewise_power_log": PiecewisePowerLog,
}


def from_dict(d: dict) -> Nonlinearity:
    """Build a nonlinearity from ``{"kind": ..., <params>}``."""
    d = dict(d)
    try:
        cls = _KINDS[d.pop("kind")]
    except KeyError as exc:
        raise ConfigurationError(f"unknown or missing nonlinearity kind: {exc}") from None
    try:
        return cls(**{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
