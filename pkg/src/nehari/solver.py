"""Ground states, minimax levels and level sweeps.

All searches work with the reduced functional

    R(u) = λ_c(t_c(u) u)        (quotient path)
    R(u) = Φ(t(u) u)            (direct path)

which is constant along rays.  Because t(u) is a critical point of the
fiber map, ∇R(u) = t·λ_c'(tu) (resp. t·Φ'(tu)), so no derivative of t is
needed.  Descent is a preconditioned gradient method on the sphere
{‖u‖ = 1} of the model norm: the H¹₀ Riesz map turns the nodal gradient into
a search direction, the direction is projected onto the tangent space in
that metric, Armijo backtracking picks the step and the iterate is
rescaled back to the sphere.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import functionals as fn
from .errors import ConfigurationError, DegenerateInputError, NehariError
from .fibering import solve_t_c, solve_t_nehari
from .mesh import laplacian_eigenbasis

__all__ = [
    "SolverOptions",
    "SolveResult",
    "MinimaxEstimate",
    "ReducedFunctional",
    "residual_norm",
    "ground_state",
    "minimax_estimate",
    "minimax_sequence",
    "sweep_c",
    "deflated_search",
]

log = logging.getLogger(__name__)

_NOISE = 64 * np.finfo(float).eps
_STALL_LIMIT = 50  # accepted steps without any decrease of R


@dataclass(frozen=True)
class SolverOptions:
    residual_tol: float = 1e-6
    energy_tol: float = 1e-8
    max_iter: int = 5000
    seed: int = 0
    multistart: int = 5
    armijo_c1: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60
    fiber_tol: float = 1e-10

    def __post_init__(self):
        if self.residual_tol <= 0 or self.energy_tol <= 0:
            raise ConfigurationError("tolerances must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if not 0 < self.shrink < 1:
            raise ConfigurationError("shrink must lie in (0, 1)")


@dataclass
class SolveResult:
    u: np.ndarray
    lam: float | None
    level: float
    energy_gap: float
    residual: float
    iterations: int
    converged: bool
    t: float = 1.0
    trace: list = field(default_factory=list)
    flags: frozenset = field(default_factory=frozenset)

    def summary(self) -> dict:
        return {
            "lambda": self.lam,
            "level": self.level,
            "energy_gap": self.energy_gap,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "flags": sorted(self.flags),
        }


@dataclass(frozen=True)
class MinimaxEstimate:
    n: int
    value: float
    subspace_dim: int
    inner_iterations: int
    coefficients: np.ndarray = field(repr=False, compare=False, default=None)


def residual_norm(model, u, lam) -> float:
    """Scaled l² norm of the nodal gradient of Φ_λ.

    The nodal gradient carries a factor h^dim from the quadrature, so
    ‖g‖_2 · h^{-dim/2} is the discrete L² norm of the strong-form residual
    and does not drift with the grid size.
    """
    g = fn.grad_phi_lambda(model, u, lam)
    return _scaled(model.grid, g)


def _scaled(grid, g) -> float:
    return float(np.linalg.norm(g) * grid.h ** (-grid.dim / 2))


class ReducedFunctional:
    """R(u) and ∇R(u) with the fiber parameter cached for warm starts."""

    def __init__(self, model, c=None, fiber_tol: float = 1e-10):
        if model.path == "ngrq":
            if c is None or c == 0:
                raise ConfigurationError(f"{model.kind} needs a level c != 0")
        self.model = model
        self.c = c
        self.fiber_tol = fiber_tol
        self.t_last = 1.0

    @property
    def direct(self) -> bool:
        return self.model.path == "direct"

    def project(self, u, check: bool = False):
        if self.direct:
            res = solve_t_nehari(self.model, u, self.fiber_tol, t0=self.t_last, check=check)
        else:
            res = solve_t_c(self.model, u, self.c, self.fiber_tol, t0=self.t_last, check=check)
        self.t_last = res.t
        return res

    def value(self, u) -> tuple[float, float]:
        t = self.project(u).t
        w = t * u
        if self.direct:
            return self.model.phi(w), t
        return fn.eval_lambda_c(self.model, w, self.c), t

    def value_and_grad(self, u):
        val, t = self.value(u)
        w = t * u
        if self.direct:
            g = self.model.grad(w)
        else:
            g = fn.grad_lambda_c(self.model, w, self.c)
        return val, t * g, t


def _normalize(model, u):
    nrm = model.norm(u)
    if not nrm > 0:
        raise DegenerateInputError("start field has zero norm")
    return u / nrm


def _default_start(model) -> np.ndarray:
    return laplacian_eigenbasis(model.grid, 1)[0][1]


def _residual_scale(model, red, w) -> float:
    """Tolerance scale for the residual: 1 on the quotient path, else the size
    of the nonlinear term that balances the energy gradient at a critical point."""
    if not red.direct:
        return 1.0
    return max(1.0, _scaled(model.grid, model.nonlin.f(w) * model.grid.cell_volume))


def _gap(model, red, w, value) -> float:
    if red.direct:
        return 0.0
    return abs(fn.eval_phi_lambda(model, w, value) - red.c)


def _finish(model, red: ReducedFunctional, u, t, value, iters, converged, trace, flags):
    w = t * u
    if red.direct:
        lam = None
        level = float(model.phi(w))
        gap = 0.0
    else:
        lam = float(value)
        level = float(red.c)
        gap = _gap(model, red, w, lam)
    res = residual_norm(model, w, lam)
    if model.kind == "kirchhoff" and model.theta < 0 and not level < 0:
        flags.add("nonnegative-level")
        log.warning("kirchhoff level %.3e is not negative", level)
    flags.update(getattr(model, "flags", ()))
    return SolveResult(w, lam, level, float(gap), res, iters, converged, t, trace, frozenset(flags))


def ground_state(model, c=None, opts: SolverOptions | None = None, u0=None,
                 callback=None) -> SolveResult:
    """Minimize the reduced functional over the model sphere.

    Returns the critical point w = t(u)u.  On the quotient path ``lam`` is
    the eigenvalue λ_c(w) and ``level`` is c; on the direct path ``lam`` is
    ``None`` and ``level`` is Φ(w).  ``callback(k, u, value)`` sees every
    iterate on the sphere.
    """
    opts = opts or SolverOptions()
    grid = model.grid
    red = ReducedFunctional(model, c, opts.fiber_tol)
    u = _normalize(model, grid.check_field(_default_start(model) if u0 is None else u0).copy())
    flags = set(red.project(u, check=True).flags)

    value, g, t = red.value_and_grad(u)
    trace = []
    step = 1.0
    prev_s = prev_y = None
    converged = False
    it = 0
    best, stall = value, 0
    for it in range(opts.max_iter + 1):
        res = residual_norm(model, t * u, None if red.direct else value)
        trace.append((float(value), res))
        if callback is not None:
            callback(it, u, value)
        # ∇R = (t/I2)·Φ'_λ(tu) on the quotient path, so the full residual
        # certifies the reduced gradient as well
        if res <= opts.residual_tol * _residual_scale(model, red, t * u) and _gap(model, red, t * u, value) <= opts.energy_tol:
            converged = True
            break
        if it == opts.max_iter:
            break
        if value < best:
            best, stall = value, 0
        else:
            stall += 1
            if stall > _STALL_LIMIT:
                flags.add("stagnated")
                break
        # tangent projection in the Riesz metric: keep (n, d) = 0 to first order
        G = grid.riesz_h1(g)
        nvec = model.norm_grad(u)
        Pn = grid.riesz_h1(nvec)
        G = G - (nvec @ G) / (nvec @ Pn) * Pn
        slope = float(g @ G)
        if not slope > 0:
            flags.add("stagnated")
            break
        if prev_s is not None:
            # Barzilai-Borwein trial step, still subject to Armijo below
            sy = float(prev_s @ prev_y)
            if sy > 0:
                step = float(prev_s @ (grid.laplacian @ prev_s) * grid.cell_volume) / sy
        step = min(max(step, 1e-12), 1e12)
        accepted = False
        for _ in range(opts.max_backtracks):
            trial = _normalize(model, u - step * G)
            try:
                t_val, _ = red.value(trial)
            except NehariError:
                t_val = np.inf
            drop = opts.armijo_c1 * step * slope
            if t_val <= value - drop or (t_val <= value and drop <= _NOISE * abs(value)):
                # second branch: predicted decrease below rounding of R, accept
                # any non-increase so the trace stays monotone
                accepted = True
                break
            step *= opts.shrink
        if not accepted:
            red.t_last = t
            flags.add("line-search-failed")
            break
        new_value, new_g, t = red.value_and_grad(trial)
        prev_s, prev_y = trial - u, new_g - g
        u, value, g = trial, new_value, new_g
    return _finish(model, red, u, t, value, it, converged, trace, flags)


# ---------------------------------------------------------------- minimax


def _subspace_ascent(red: ReducedFunctional, basis: np.ndarray, a0, opts: SolverOptions,
                     max_iter: int = 500):
    """Maximize a ↦ R(basis @ a) on the Euclidean unit sphere of coefficients."""
    a = np.asarray(a0, dtype=float)
    a = a / np.linalg.norm(a)
    if basis.shape[1] == 1:
        return red.value(basis @ a)[0], a, 0
    value, g, _ = red.value_and_grad(basis @ a)
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        ga = basis.T @ g
        ga = ga - (ga @ a) * a
        gn = float(ga @ ga)
        if np.sqrt(gn) <= 1e-12 * max(1.0, abs(value)):
            break
        accepted = False
        step = min(step * 2.0, 1e12)
        for _ in range(opts.max_backtracks):
            trial = a + step * ga
            trial /= np.linalg.norm(trial)
            try:
                tv = red.value(basis @ trial)[0]
            except NehariError:
                tv = -np.inf
            if tv >= value + opts.armijo_c1 * step * gn:
                accepted = True
                break
            step *= opts.shrink
        if not accepted:
            break
        a = trial
        new_value, g, _ = red.value_and_grad(basis @ a)
        done = new_value - value <= 1e-15 * max(1.0, abs(new_value))
        value = new_value
        if done:
            break
    return value, a, it


def minimax_sequence(model, c=None, n_max: int = 5, opts: SolverOptions | None = None):
    """Upper estimates λ_{n,c} ≈ sup of R over the unit sphere of span(φ_1..φ_n).

    The run is nested: the maximizer found for n seeds the search for n + 1
    (padded with a zero coefficient), so the returned values never decrease.
    """
    opts = opts or SolverOptions()
    if n_max < 1:
        raise ConfigurationError("n must be at least 1")
    grid = model.grid
    eig = laplacian_eigenbasis(grid, n_max)
    basis_all = np.column_stack([v for _, v in eig])
    rng = np.random.default_rng(opts.seed)
    red = ReducedFunctional(model, c, opts.fiber_tol)
    out = []
    prev = None
    for n in range(1, n_max + 1):
        basis = basis_all[:, :n]
        starts = []
        if prev is not None:
            starts.append(np.append(prev, 0.0))
        e = np.zeros(n)
        e[-1] = 1.0
        starts.append(e)
        if n > 1:
            centre = starts[0]
            for _ in range(opts.multistart):
                starts.append(centre + 0.3 * rng.standard_normal(n))
        best = None
        inner = 0
        for a0 in starts:
            if not np.linalg.norm(a0) > 0:
                continue
            v, a, k = _subspace_ascent(red, basis, a0, opts)
            inner += k
            if best is None or v > best[0]:
                best = (v, a)
        value, a = best
        if out and value < out[-1].value:
            # the seeded start can only improve on the previous level
            value = out[-1].value
        prev = a
        out.append(MinimaxEstimate(n, float(value), n, inner, a))
    return out


def minimax_estimate(model, c=None, n: int = 1, opts: SolverOptions | None = None) -> MinimaxEstimate:
    return minimax_sequence(model, c, n, opts)[-1]


# ---------------------------------------------------------------- sweeps


def sweep_c(model, c_values, opts: SolverOptions | None = None) -> list[dict]:
    """Ground states along a list of levels, each warm-started from the last.

    Failures are recorded per row (``error``) instead of aborting the sweep.
    """
    opts = opts or SolverOptions()
    rows = []
    u_prev = None
    for c in c_values:
        c = float(c)
        try:
            res = ground_state(model, c, opts, u0=u_prev)
        except NehariError as exc:
            rows.append({"c": c, "lambda_1c": float("nan"), "residual": float("nan"),
                         "converged": False, "error": str(exc)})
            continue
        rows.append({"c": c, "lambda_1c": res.lam, "residual": res.residual,
                     "converged": res.converged, "error": None})
        u_prev = res.u
    return rows


def _distinct(u, found, tol: float) -> bool:
    for v in found:
        scale = max(np.linalg.norm(u), np.linalg.norm(v))
        if min(np.linalg.norm(u - v), np.linalg.norm(u + v)) < tol * scale:
            return False
    return True


def deflated_search(model, c=None, count: int = 2, opts: SolverOptions | None = None,
                    dedup_tol: float = 1e-3, max_starts: int | None = None):
    """Up to ``count`` distinct critical points from eigenfield starts.

    Each start φ_k is L²-orthogonalized against the solutions found so far
    (the start only; the descent itself is unconstrained).  Two solutions
    are the same when their relative L² distance, modulo sign, is below
    ``dedup_tol``.  Returns ``(results, flags)``.
    """
    opts = opts or SolverOptions()
    if count < 1:
        raise ConfigurationError("count must be at least 1")
    grid = model.grid
    max_starts = max_starts or min(grid.size, count + 4)
    eig = laplacian_eigenbasis(grid, max_starts)
    found: list[SolveResult] = []
    for _, phi in eig:
        v = phi.copy()
        for s in found:
            v -= (v @ s.u) / (s.u @ s.u) * s.u
        if np.linalg.norm(v) < 1e-8 * np.linalg.norm(phi):
            continue
        try:
            res = ground_state(model, c, opts, u0=v)
        except NehariError as exc:
            log.info("deflated start failed: %s", exc)
            continue
        if res.converged and _distinct(res.u, [s.u for s in found], dedup_tol):
            found.append(res)
        if len(found) == count:
            break
    flags = set()
    if len(found) < count:
        flags.add("fewer-solutions-than-requested")
    return found, frozenset(flags)
