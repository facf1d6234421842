"""Sampled checks of structural hypotheses and independent 1-D oracles.

A ``pass`` verdict means no violation was found on the declared sample;
``fail`` always comes with a counterexample.  The oracles solve the 1-D
problem -u'' = λu + f(u), u(0) = u(1) = 0, by shooting, independently of the
grid discretization used by :mod:`nehari.solver`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import ConfigurationError, HypothesisViolation, NehariError
from .mesh import Grid, laplacian_eigenbasis

__all__ = [
    "ValidationReport",
    "check_ray_shape",
    "check_h1",
    "check_scalar_condition",
    "check_A_conditions",
    "check_f3_coercivity",
    "bn_threshold",
    "bn_threshold_scan",
    "estimate_sobolev_constant",
    "ShootingBranch",
    "shooting_oracle_1d",
    "prescribed_energy_oracle_1d",
    "count_fibering_roots",
]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class ValidationReport:
    hypothesis: str
    verdict: str
    samples: int
    counterexample: dict | None = None
    notes: str = ""

    def __post_init__(self):
        if self.verdict not in (PASS, FAIL, INCONCLUSIVE):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == FAIL and self.counterexample is None:
            raise ValueError("a failing report needs a counterexample")

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {"hypothesis": self.hypothesis, "verdict": self.verdict,
                "samples": self.samples, "counterexample": self.counterexample,
                "notes": self.notes}


def _random_fields(grid: Grid, count: int, seed: int, modes: int = 6) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    k = min(modes, grid.size)
    basis = np.column_stack([v for _, v in laplacian_eigenbasis(grid, k)])
    out = []
    for _ in range(count):
        a = rng.standard_normal(k) / np.arange(1, k + 1)
        out.append(basis @ a)
    return out


def _sign_pattern(values: np.ndarray, rel_noise: float = 1e-12) -> np.ndarray:
    """Signs of consecutive differences with differences at rounding level dropped."""
    d = np.diff(values)
    scale = max(np.max(np.abs(values)), 1e-300)
    d = d[np.abs(d) > rel_noise * scale]
    return np.sign(d)


# ---------------------------------------------------------------- ray shape


def check_ray_shape(model, c_sign: int, ray_samples: int = 8, t_range=(1e-3, 1e3),
                    points: int = 200, seed: int = 0) -> ValidationReport:
    """Up-then-down (c > 0) or down-then-up (c < 0) shape of t ↦ H(tu).

    The end of the ray must also point the right way: H(t_max u) has the
    sign of -c and is still moving away from zero.
    """
    name = "F1" if c_sign > 0 else "F2"
    lo, hi = t_range
    if not 0 < lo < hi or points < 16:
        raise ConfigurationError("t_range must be positive and increasing and points >= 16")
    if model.path != "ngrq":
        raise ConfigurationError(f"{model.kind} has no H; use check_h1")
    want_up_first = c_sign > 0
    ts = np.logspace(np.log10(lo), np.log10(hi), points)
    for u in _random_fields(model.grid, ray_samples, seed):
        H = np.array([model.h(t * u) for t in ts])
        signs = _sign_pattern(H)
        if want_up_first:
            # allowed: +...+ -...-
            bad = np.any(np.diff(signs) > 0)
            end_ok = H[-1] < 0 and (len(signs) > 0 and signs[-1] < 0)
        else:
            bad = np.any(np.diff(signs) < 0)
            end_ok = H[-1] > 0 and (len(signs) > 0 and signs[-1] > 0)
        if bad or not end_ok:
            reason = "shape has more than one turn" if bad else "no divergence at the upper end"
            return ValidationReport(name, FAIL, ray_samples, {
                "reason": reason, "t": [float(ts[0]), float(ts[-1])],
                "H_first": float(H[0]), "H_last": float(H[-1]),
                "field_l2": float(np.linalg.norm(u))}, "")
    return ValidationReport(name, PASS, ray_samples, None,
                            f"{points} log-spaced t in [{lo:g}, {hi:g}]")


def count_fibering_roots(model, u, c=None, t_range=(2.0**-30, 2.0**30), points: int = 2000) -> int:
    """Sign changes of the fiber derivative on a dense log-spaced scan."""
    ts = np.logspace(np.log2(t_range[0]), np.log2(t_range[1]), points, base=2.0)
    if model.path == "direct":
        vals = np.array([float(model.grad(t * u) @ u) for t in ts])
    else:
        a = model.alpha
        vals = np.array([model.h(t * u) + a * c for t in ts])
    s = np.sign(vals)
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


def check_h1(model, c=None, ray_samples: int = 8, t_range=(2.0**-30, 2.0**30),
             points: int = 2000, seed: int = 0) -> ValidationReport:
    """Exactly one critical point of the fiber map on every sampled ray."""
    for u in _random_fields(model.grid, ray_samples, seed):
        roots = count_fibering_roots(model, u, c, t_range, points)
        if roots != 1:
            return ValidationReport("H1", FAIL, ray_samples,
                                    {"roots": roots, "field_l2": float(np.linalg.norm(u))})
    return ValidationReport("H1", PASS, ray_samples, None,
                            f"{points} log-spaced t in [{t_range[0]:g}, {t_range[1]:g}]")


# ---------------------------------------------------------------- scalar conditions


def _monotone(values: np.ndarray, increasing: bool, rel_tol: float = 1e-12):
    """Index of the first violation of monotonicity, or None."""
    d = np.diff(values)
    scale = np.maximum(np.abs(values[:-1]), np.abs(values[1:])) * rel_tol + 1e-300
    bad = d < -scale if increasing else d > scale
    idx = np.flatnonzero(bad)
    return None if idx.size == 0 else int(idx[0])


def check_scalar_condition(nonlin, condition: str, params: dict | None = None) -> ValidationReport:
    """Sampled verdict for f1, f2, f2prime or f3 on |s| in [1e-6, 1e6].

    ``params``: ``orientation`` ("increasing" for c > 0, "decreasing" for
    c < 0), ``q`` for f3, ``C``/``r`` for f1 (default: the declared growth),
    ``points`` and ``divergence`` (magnitude the quantity must exceed at the
    top of the sample).
    """
    params = dict(params or {})
    points = int(params.get("points", 400))
    s = np.logspace(-6, 6, points)
    inc = params.get("orientation", "increasing") == "increasing"
    div = float(params.get("divergence", 1e3))

    def fail(name, what, i, x, vals):
        return ValidationReport(name, FAIL, points, {
            "reason": what, "s": [float(x[i]), float(x[i + 1])],
            "values": [float(vals[i]), float(vals[i + 1])]})

    if condition == "f1":
        C0, r0 = nonlin.growth()
        C, r = float(params.get("C", C0)), float(params.get("r", r0))
        full = np.concatenate([-s[::-1], s])
        lhs = np.abs(nonlin.f(full))
        rhs = C * (1 + np.abs(full) ** (r - 1))
        bad = np.flatnonzero(lhs > rhs * (1 + 1e-12))
        if bad.size:
            i = int(bad[0])
            return ValidationReport("f1", FAIL, full.size, {
                "s": float(full[i]), "abs_f": float(lhs[i]), "bound": float(rhs[i])})
        two_star = params.get("two_star")
        if two_star is not None and not r < float(two_star):
            return ValidationReport("f1", FAIL, full.size,
                                    {"reason": "growth exponent not subcritical", "r": r,
                                     "two_star": float(two_star)})
        return ValidationReport("f1", PASS, full.size, None, f"C={C:g}, r={r:g}")

    if condition in ("f2", "f2prime"):
        if condition == "f2":
            alpha = float(params.get("alpha", 2.0))
            pos = s * nonlin.f(s) - alpha * nonlin.F(s)
            neg = (-s) * nonlin.f(-s) - alpha * nonlin.F(-s)
            top = pos[-1]
        else:
            pos = nonlin.f(s) / s
            neg = nonlin.f(-s) / s
            top = pos[-1]
        # on (0, ∞) monotone in the orientation, on (-∞, 0) the mirror
        i = _monotone(pos, inc)
        if i is not None:
            return fail(condition, "not monotone on s > 0", i, s, pos)
        # G is even, so its branch on s < 0 runs the other way; f(s)/|s| is
        # monotone in the same sense across all of R \ {0}
        i = _monotone(neg[::-1], inc if condition == "f2prime" else not inc)
        if i is not None:
            return fail(condition, "not monotone on s < 0", i, -s[::-1], neg[::-1])
        if (inc and not top > div) or (not inc and not top < -div):
            return ValidationReport(condition, FAIL, 2 * points, {
                "reason": "no divergence at large |s|", "s": float(s[-1]), "value": float(top)})
        return ValidationReport(condition, PASS, 2 * points, None,
                                "increasing" if inc else "decreasing")

    if condition == "f3":
        if "q" not in params:
            raise ConfigurationError("f3 needs params['q']")
        q = float(params["q"])
        pos = (q - 1) * nonlin.f(s) / s - nonlin.fprime(s)
        neg = (q - 1) * nonlin.f(-s) / (-s) - nonlin.fprime(-s)
        i = _monotone(pos, increasing=False)
        if i is not None:
            return fail("f3", "not decreasing on s > 0", i, s, pos)
        i = _monotone(neg[::-1], increasing=True)
        if i is not None:
            return fail("f3", "not increasing on s < 0", i, -s[::-1], neg[::-1])
        if not pos[-1] < -div:
            return ValidationReport("f3", FAIL, 2 * points, {
                "reason": "no divergence to -inf", "s": float(s[-1]), "value": float(pos[-1])})
        return ValidationReport("f3", PASS, 2 * points, None, f"q={q:g}")

    raise ConfigurationError(f"unknown scalar condition {condition!r}")


# ---------------------------------------------------------------- (A1)-(A3)


def check_A_conditions(p: float, q: float, r: float, k0: float = 1.0, k1: float = 1.0,
                       samples: int = 400) -> list[ValidationReport]:
    """(A1)-(A3) for a(t) = 1 + t^{(q-p)/p}, A(t) = t + (p/q) t^{q/p}."""
    t = np.logspace(-4, 4, samples)

    def a(x):
        return 1.0 + x ** ((q - p) / p)

    def A(x):
        return x + (p / q) * x ** (q / p)

    reports = []
    base = a(t)
    bad = np.flatnonzero((k0 * base > base * (1 + 1e-12)) | (base > k1 * base * (1 + 1e-12)))
    if not k1 < r / p * k0:
        reports.append(ValidationReport("A1", FAIL, samples, {
            "reason": "k1 < (r/p) k0 violated", "k1": k1, "r_over_p_k0": r / p * k0}))
    elif bad.size:
        i = int(bad[0])
        reports.append(ValidationReport("A1", FAIL, samples, {
            "t": float(t[i]), "a": float(base[i]), "k0": k0, "k1": k1}))
    else:
        reports.append(ValidationReport("A1", PASS, samples, None, f"t in [1e-4, 1e4], k0={k0}, k1={k1}"))

    g = a(t**p) * t**p - (r / p) * A(t**p)
    i = _monotone(g, increasing=False)
    if i is not None:
        reports.append(ValidationReport("A2", FAIL, samples, {
            "t": [float(t[i]), float(t[i + 1])], "values": [float(g[i]), float(g[i + 1])]}))
    else:
        reports.append(ValidationReport("A2", PASS, samples, None, ""))

    # divided second differences of t ↦ A(t^p) on the nonuniform grid
    y = A(t**p)
    d1 = np.diff(y) / np.diff(t)
    d2 = np.diff(d1) / (t[2:] - t[:-2])
    scale = np.abs(y[1:-1]) / t[1:-1] ** 2
    bad = np.flatnonzero(d2 < -1e-10 * np.maximum(scale, 1.0))
    if bad.size:
        i = int(bad[0])
        reports.append(ValidationReport("A3", FAIL, samples, {
            "t": float(t[i + 1]), "second_difference": float(d2[i])}))
    else:
        reports.append(ValidationReport("A3", PASS, samples, None, "second differences >= -1e-10"))
    return reports


# ---------------------------------------------------------------- (F3)


def check_f3_coercivity(model, samples: int = 20, beta: float | None = None,
                        eta: float | None = None, seed: int = 0) -> ValidationReport:
    """Fit C1 in J(u) >= C1‖u‖^β and C2 in the monotonicity bound of J'.

    Both constants are existential, so a nonpositive fit is reported as
    inconclusive rather than as a failure.
    """
    p = float(getattr(model, "p", 2.0))
    beta = p if beta is None else beta
    eta = p if eta is None else eta
    rng = np.random.default_rng(seed)
    fields = [s * u for s, u in zip(rng.uniform(0.1, 10.0, samples),
                                    _random_fields(model.grid, samples, seed))]
    c1 = min(model.j(u) / model.norm(u) ** beta for u in fields)
    ratios = []
    for i in range(samples):
        u, v = fields[i], fields[(i + 1) % samples]
        nu, nv = model.norm(u), model.norm(v)
        rhs = (nu ** (eta - 1) - nv ** (eta - 1)) * (nu - nv)
        if rhs > 1e-12 * max(nu, nv) ** eta:
            ratios.append(float((model.grad_j(u) - model.grad_j(v)) @ (u - v)) / rhs)
    if not ratios:
        return ValidationReport("F3-coercivity", INCONCLUSIVE, samples, None, "no usable pairs")
    c2 = min(ratios)
    if c1 > 0 and c2 > 0:
        return ValidationReport("F3-coercivity", PASS, samples, None,
                                f"C1 >= {c1:.3e} (beta={beta:g}), C2 >= {c2:.3e} (eta={eta:g})")
    return ValidationReport("F3-coercivity", INCONCLUSIVE, samples, None,
                            f"fitted C1={c1:.3e}, C2={c2:.3e}")


# ---------------------------------------------------------------- critical threshold


def _two_star(N: int) -> float:
    if N < 3:
        raise ConfigurationError("the critical threshold needs N >= 3")
    return 2.0 * N / (N - 2)


def bn_threshold(N: int, S_est: float, c: float) -> tuple[float, bool]:
    """Closed-form max_{t>0} j(t) and the admissibility c < S^{N/2}/N.

    j(t) = S (Nc)^{2/2*} t² - (2/2*) Nc t^{2*} - 2c with S the Sobolev
    constant in S‖u‖²_{2*} <= ‖∇u‖²_2.
    """
    ts = _two_star(N)
    if not S_est > 0:
        raise ConfigurationError("S_est must be positive")
    max_j = (ts - 2) / ts * S_est ** (ts / (ts - 2)) - 2.0 * c
    return float(max_j), bool(c < S_est ** (N / 2) / N)


def bn_threshold_scan(N: int, S_est: float, c: float, points: int = 4000) -> float:
    """Dense-scan maximum of j(t), refined by a bounded scalar search."""
    ts = _two_star(N)
    if not c > 0:
        raise ConfigurationError("the scan needs c > 0")
    a = S_est * (N * c) ** (2.0 / ts)
    b = (2.0 / ts) * N * c

    def j(t):
        return a * t * t - b * t**ts - 2.0 * c

    t_star = (2 * a / (ts * b)) ** (1 / (ts - 2))  # only used to centre the scan window
    grid = np.logspace(np.log10(t_star) - 6, np.log10(t_star) + 6, points)
    vals = j(grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
    res = minimize_scalar(lambda t: -j(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14 * hi})
    return float(max(vals[i], -res.fun))


def estimate_sobolev_constant(grid: Grid, two_star: float | None = None) -> float:
    """Discrete S = min ‖∇u‖²_2 / ‖u‖²_{2*} (an estimate of the continuum constant)."""
    if two_star is None:
        two_star = _two_star(grid.dim)
    L, hv = grid.laplacian, grid.cell_volume
    ts = float(two_star)

    def obj(u):
        a = float(u @ (L @ u)) * hv
        m = float(np.sum(np.abs(u) ** ts)) * hv
        nq = m ** (2 / ts)
        val = a / nq
        grad = 2 * (L @ u) * hv / nq - val * 2 / ts * ts * np.abs(u) ** (ts - 2) * u * hv / m
        return val, grad

    u0 = laplacian_eigenbasis(grid, 1)[0][1]
    res = minimize(obj, u0, jac=True, method="L-BFGS-B", options={"maxiter": 5000, "gtol": 1e-12})
    return float(res.fun)


# ---------------------------------------------------------------- shooting


@dataclass
class ShootingBranch:
    slope: float          # u'(0)
    energy: float         # Φ_λ of the solution
    interior_zeros: int
    solution: object = field(repr=False)

    def on_grid(self, grid: Grid) -> np.ndarray:
        if grid.dim != 1:
            raise ConfigurationError("shooting solutions live on 1-D grids")
        return self.solution(grid.nodes_1d())[0]


def _shoot(nonlin, lam: float, s: float, dense: bool = False):
    def rhs(x, y):
        u, v, _ = y
        return [v, -lam * u - nonlin.f(u), 0.5 * v * v - 0.5 * lam * u * u - nonlin.F(u)]

    return solve_ivp(rhs, (0.0, 1.0), [0.0, s, 0.0], method="DOP853", rtol=1e-12,
                     atol=1e-12, dense_output=dense)


def _terminal(nonlin, lam, s) -> float:
    sol = _shoot(nonlin, lam, s)
    if not sol.success:
        raise HypothesisViolation(f"shooting integration failed at slope {s}: {sol.message}")
    return float(sol.y[0, -1])


def shooting_oracle_1d(nonlin, lam: float, branches: int = 1, s_range=(1e-6, 1e4),
                       growth: float = 1.25, tol: float = 1e-13) -> list[ShootingBranch]:
    """Positive-slope solutions of -u'' = λu + f(u), u(0) = u(1) = 0.

    Slopes are scanned geometrically; the k-th sign change of u(1; s) gives
    the k-th branch (k - 1 interior zeros for superlinear f).  Returns an
    empty list when no sign change is found.
    """
    out = []
    s_prev = s_range[0]
    v_prev = _terminal(nonlin, lam, s_prev)
    s = s_prev
    while len(out) < branches and s < s_range[1]:
        s = s_prev * growth
        v = _terminal(nonlin, lam, s)
        if v == 0 or v_prev * v < 0:
            root = s if v == 0 else brentq(lambda x: _terminal(nonlin, lam, x), s_prev, s,
                                           xtol=tol * s, rtol=4 * np.finfo(float).eps)
            sol = _shoot(nonlin, lam, root, dense=True)
            xs = np.linspace(0, 1, 2001)[1:-1]
            us = sol.sol(xs)[0]
            zeros = int(np.sum(np.sign(us[1:]) != np.sign(us[:-1])))
            out.append(ShootingBranch(float(root), float(sol.y[2, -1]), zeros, sol.sol))
        s_prev, v_prev = s, v
    return out


@dataclass
class OracleResult:
    verdict: str
    lam: float
    branch: ShootingBranch | None
    notes: str = ""


def prescribed_energy_oracle_1d(nonlin, c: float, tol: float = 1e-10,
                                lam_max: float = math.pi**2) -> OracleResult:
    """λ with Φ_λ(u_λ) = c on the ground shooting branch.

    The ground-branch energy decreases to 0 as λ increases to π²; λ is
    bracketed below π² and found with Brent's method.  A non-monotone
    energy on the bracket samples makes the result inconclusive.
    """
    if not c > 0:
        raise ConfigurationError("the ground-branch oracle needs c > 0")

    def energy(lam):
        br = shooting_oracle_1d(nonlin, lam, 1)
        if not br:
            raise HypothesisViolation(f"no ground branch at λ = {lam}")
        return br[0].energy

    samples = []
    offset = 1.0
    above = lam_max - 1e-6
    lo = None
    try:
        e_hi = energy(above)
        samples.append((above, e_hi))
        if e_hi >= c:
            return OracleResult(INCONCLUSIVE, float("nan"), None, "energy near π² already exceeds c")
        for _ in range(60):
            lam = lam_max - offset
            e = energy(lam)
            samples.append((lam, e))
            if e > c:
                lo = lam
                break
            above = lam
            offset *= 2.0
    except NehariError as exc:
        return OracleResult(INCONCLUSIVE, float("nan"), None, f"bracket failed: {exc}")
    if lo is None:
        return OracleResult(INCONCLUSIVE, float("nan"), None, "no bracket for the level")
    # the energy must decrease in λ across the bracket samples
    samples.sort()
    if np.any(np.diff([e for _, e in samples]) > 0):
        return OracleResult(INCONCLUSIVE, float("nan"), None, "branch energy not monotone in λ")
    lam_star = brentq(lambda x: energy(x) - c, lo, above, xtol=tol, rtol=4 * np.finfo(float).eps)
    branch = shooting_oracle_1d(nonlin, lam_star, 1)[0]
    return OracleResult(PASS, float(lam_star), branch, "")
