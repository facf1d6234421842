"""Projection of a ray t ↦ t·u onto a Nehari set.

Two scalar equations are solved for t > 0:

* quotient path: H(tu) + αc = 0, the critical points of t ↦ λ_c(tu);
* direct path:   d/dt Φ(tu) = Φ'(tu)u = 0.

Both use geometric bracketing from t = 1 (factor 2, capped at 2^{±60})
followed by Brent's method to full precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, DegenerateInputError, NoRootError

__all__ = [
    "FiberingResult",
    "solve_t_c",
    "solve_t_nehari",
    "fibering_profile",
    "fibering_derivative",
]

T_MIN = 2.0**-60
T_MAX = 2.0**60
_CHECK_FACTORS = (2.0, 4.0, 8.0, 16.0)


@dataclass(frozen=True)
class FiberingResult:
    t: float
    bracket: tuple[float, float]
    iterations: int
    kind: str
    residual: float
    flags: frozenset = field(default_factory=frozenset)


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _bracket_and_solve(fun, small_sign: int, t0: float = 1.0, check: bool = True):
    """Root of ``fun`` with sign ``small_sign`` left of it and the opposite sign right of it."""
    flags = set()
    expansions = 0
    t = float(t0)
    v = fun(t)
    if not math.isfinite(v):
        raise DegenerateInputError(f"fibering function is not finite at t = {t}")
    if v == 0:
        return t, (t, t), 0, flags
    going_up = _sign(v) == small_sign
    lo = hi = t
    while True:
        t = t * 2.0 if going_up else t * 0.5
        expansions += 1
        if not T_MIN <= t <= T_MAX:
            raise NoRootError("no sign change of the fibering equation for t in [2^-60, 2^60]")
        v = fun(t)
        if v == 0:
            return t, (t, t), expansions, {"bracket-expanded"}
        if going_up:
            if _sign(v) != small_sign:
                hi = t
                break
            lo = t
        else:
            if _sign(v) == small_sign:
                lo = t
                break
            hi = t
    if expansions > 1:
        flags.add("bracket-expanded")
    root, info = brentq(fun, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                        maxiter=500, full_output=True)
    if check:
        # orientation check a few octaves either side of the root
        for fct in _CHECK_FACTORS:
            left, right = root / fct, root * fct
            if (left >= T_MIN and _sign(fun(left)) != small_sign) or (
                right <= T_MAX and _sign(fun(right)) != -small_sign
            ):
                flags.add("nonunimodal-suspected")
                break
    return root, (lo, hi), expansions + info.iterations, flags


def solve_t_c(model, u, c: float, tol: float = 1e-10, t0: float = 1.0,
              check: bool = True) -> FiberingResult:
    """Unique t > 0 with H(tu) = -αc.

    ``t0`` is the bracketing start; ``check=False`` skips the orientation
    probes around the root.
    """
    u = model.grid.check_field(u)
    if not np.any(u):
        raise DegenerateInputError("cannot project the zero field")
    if c == 0:
        raise ConfigurationError("solve_t_c needs c != 0")
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    if model.path != "ngrq":
        raise ConfigurationError(f"{model.kind} is projected with solve_t_nehari")
    alpha = model.alpha

    def psi(t):
        return model.h(t * u) + alpha * c

    t, bracket, iters, flags = _bracket_and_solve(psi, _sign(c), t0, check)
    residual = abs(psi(t))
    if residual > tol * (1 + alpha * abs(c)):
        flags.add("residual-above-tol")
    kind = "max" if c > 0 else "min"
    return FiberingResult(t, bracket, iters, kind, residual, frozenset(flags))


def fibering_derivative(functional, u, t: float) -> float:
    """d/dt Φ(tu) = Φ'(tu)·u for a direct-path functional."""
    return float(functional.grad(t * u) @ u)


def solve_t_nehari(functional, u, tol: float = 1e-10, t0: float = 1.0,
                   check: bool = True) -> FiberingResult:
    """Unique t > 0 with d/dt Φ(tu) = 0 (global maximum of the fiber)."""
    u = functional.grid.check_field(u)
    if not np.any(u):
        raise DegenerateInputError("cannot project the zero field")

    def dphi(t):
        return fibering_derivative(functional, u, t)

    t, bracket, iters, flags = _bracket_and_solve(dphi, +1, t0, check)
    residual = abs(dphi(t))
    # relative to one of the two balancing terms
    scale = abs(float(functional.nonlin.f(t * u) @ u) * functional.grid.cell_volume)
    if residual > tol * max(scale, 1.0):
        flags.add("residual-above-tol")
    return FiberingResult(t, bracket, iters, "max", residual, frozenset(flags))


def fibering_profile(model, u, c, t_grid) -> np.ndarray:
    """Rows ``(t, value, derivative)`` along the ray.

    With a level ``c`` the profile is t ↦ λ_c(tu) with derivative
    (H(tu) + αc)/(t^{α+1} I2(u)); with ``c=None`` it is t ↦ Φ(tu).
    """
    u = model.grid.check_field(u)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise ConfigurationError("t_grid must be positive and increasing")
    rows = []
    if c is not None:
        if model.path != "ngrq":
            raise ConfigurationError(f"{model.kind} has no λ_c profile; pass c=None")
        i2 = model.i2(u)
        if i2 <= 0:
            raise DegenerateInputError("I2(u) = 0")
        a = model.alpha
        for t in t_grid:
            tu = t * u
            value = (model.i1(tu) - c) / (t**a * i2)
            deriv = (model.h(tu) + a * c) / (t ** (a + 1) * i2)
            rows.append((t, value, deriv))
    else:
        if model.path != "direct":
            raise ConfigurationError(f"{model.kind} needs a level c for its profile")
        for t in t_grid:
            rows.append((t, model.phi(t * u), fibering_derivative(model, u, t)))
    return np.array(rows, dtype=float).reshape(-1, 3)
