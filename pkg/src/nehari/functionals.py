"""Discrete energies Φ_λ = I1 - λ I2, the quotient λ_c = (I1 - c)/I2 and H.

Five grid models are provided.  All integrals use nodal quadrature
(Σ_i g(u_i) h^dim) and gradient energies use the cell differences of
:mod:`nehari.mesh`, so every gradient below is the exact nodal gradient of
the corresponding discrete functional.

For p < 2 gradient terms the density (|∇u|² + eps²)^{p/2} - eps^p is used;
the shift keeps I1(0) = 0 without changing any gradient.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mesh
from .errors import ConfigurationError, DegenerateInputError, NotApplicableError
from .mesh import Grid
from .nonlinearity import Nonlinearity, PurePower

__all__ = [
    "Model",
    "Semilinear",
    "ConcaveConvex",
    "BrezisNirenberg",
    "PQGeneral",
    "Kirchhoff",
    "EnergyBreakdown",
    "eval_phi_lambda",
    "grad_phi_lambda",
    "eval_lambda_c",
    "grad_lambda_c",
    "eval_H",
    "energy_breakdown",
]

DEFAULT_EPS = 1e-8


def _p_energy(grid: Grid, u, p: float, eps: float) -> float:
    """Σ ((|∇u|² + eps²)^{p/2} - eps^p) h^dim."""
    return mesh.dirichlet_energy_p(grid, u, p, eps) - eps**p * grid.n_cells * grid.cell_volume


def _dirichlet(grid: Grid, u) -> float:
    """∫|∇u|² (exact quadratic form, no regularization)."""
    return float(u @ (grid.laplacian @ u)) * grid.cell_volume


def _p_norm_seminorm(grid: Grid, u, p: float, eps: float) -> float:
    if p == 2:
        return np.sqrt(max(_dirichlet(grid, u), 0.0))
    return max(_p_energy(grid, u, p, eps), 0.0) ** (1.0 / p)


def _p_norm_grad(grid: Grid, u, p: float, eps: float) -> np.ndarray:
    nrm = _p_norm_seminorm(grid, u, p, eps)
    if nrm == 0:
        raise DegenerateInputError("norm gradient undefined at u = 0")
    if p == 2:
        return grid.laplacian @ u * grid.cell_volume / nrm
    return mesh.dirichlet_energy_p_grad(grid, u, p, eps) / (p * nrm ** (p - 1))


@dataclass(frozen=True)
class EnergyBreakdown:
    i1: float
    i2: float
    j: float
    k: float
    h: float


class Model:
    """Common interface for the grid models.

    ``path`` is ``"ngrq"`` for models solved through λ_c and ``"direct"``
    for models projected through d/dt Φ(tu) = 0.
    """

    grid: Grid
    path = "ngrq"
    alpha: float
    even = True
    kind = "abstract"

    def i1(self, u) -> float:
        return self.j(u) - self.k(u)

    def grad_i1(self, u) -> np.ndarray:
        return self.grad_j(u) - self.grad_k(u)

    def j(self, u) -> float:
        raise NotImplementedError

    def grad_j(self, u) -> np.ndarray:
        raise NotImplementedError

    def k(self, u) -> float:
        return 0.0

    def grad_k(self, u) -> np.ndarray:
        return np.zeros(self.grid.size)

    def i2(self, u) -> float:
        raise NotImplementedError

    def grad_i2(self, u) -> np.ndarray:
        raise NotImplementedError

    def h(self, u) -> float:
        raise NotImplementedError

    def norm(self, u) -> float:
        return np.sqrt(max(_dirichlet(self.grid, u), 0.0))

    def norm_grad(self, u) -> np.ndarray:
        return _p_norm_grad(self.grid, u, 2.0, 0.0)

    @property
    def flags(self) -> tuple[str, ...]:
        return ()

    def describe(self) -> dict:
        raise NotImplementedError


def _integral(grid: Grid, values) -> float:
    return float(np.sum(values) * grid.cell_volume)


@dataclass(frozen=True)
class Semilinear(Model):
    """½∫|∇u|² - (λ/2)∫u² - ∫F(u); α = 2."""

    grid: Grid
    nonlin: Nonlinearity
    kind = "semilinear"
    alpha = 2.0

    def j(self, u):
        return 0.5 * _dirichlet(self.grid, u)

    def grad_j(self, u):
        return self.grid.laplacian @ u * self.grid.cell_volume

    def k(self, u):
        return _integral(self.grid, self.nonlin.F(u))

    def grad_k(self, u):
        return self.nonlin.f(u) * self.grid.cell_volume

    def i2(self, u):
        return 0.5 * _integral(self.grid, u * u)

    def grad_i2(self, u):
        return u * self.grid.cell_volume

    def h(self, u):
        f = self.nonlin
        return _integral(self.grid, 2.0 * f.F(u) - f.f(u) * u)

    def describe(self):
        return {"model": self.kind, "nonlinearity": self.nonlin.to_dict()}


@dataclass(frozen=True)
class ConcaveConvex(Model):
    """½∫|∇u|² - (λ/q)∫|u|^q - ∫F(u) with 1 < q < 2; α = q."""

    grid: Grid
    nonlin: Nonlinearity
    q: float
    kind = "concave_convex"

    def __post_init__(self):
        if not 1 < self.q < 2:
            raise ConfigurationError(f"concave_convex needs 1 < q < 2, got {self.q}")

    @property
    def alpha(self):
        return self.q

    j = Semilinear.j
    grad_j = Semilinear.grad_j
    k = Semilinear.k
    grad_k = Semilinear.grad_k

    def i2(self, u):
        return _integral(self.grid, np.abs(u) ** self.q) / self.q

    def grad_i2(self, u):
        return np.abs(u) ** (self.q - 1) * np.sign(u) * self.grid.cell_volume

    def h(self, u):
        q, f = self.q, self.nonlin
        return (2 - q) / 2 * _dirichlet(self.grid, u) + _integral(
            self.grid, q * f.F(u) - f.f(u) * u
        )

    def describe(self):
        return {"model": self.kind, "q": self.q, "nonlinearity": self.nonlin.to_dict()}


@dataclass(frozen=True)
class BrezisNirenberg(Semilinear):
    """Semilinear model with f(s) = |s|^{2*-2}s.

    ``two_star`` defaults to 2N/(N-2).  Runs on grids whose dimension is not
    N (or with N < 3) carry the ``supercritical-formalism`` flag.
    """

    grid: Grid
    N: int = 3
    two_star: float | None = None
    nonlin: Nonlinearity = field(init=False)
    kind = "brezis_nirenberg"

    def __post_init__(self):
        if self.two_star is None:
            if self.N <= 2:
                raise ConfigurationError("two_star must be given when N <= 2")
            object.__setattr__(self, "two_star", 2.0 * self.N / (self.N - 2))
        object.__setattr__(self, "nonlin", PurePower(self.two_star))

    def h(self, u):
        ts = self.two_star
        return (2.0 - ts) / ts * _integral(self.grid, np.abs(u) ** ts)

    @property
    def flags(self):
        if self.N < 3 or self.grid.dim != self.N:
            return ("supercritical-formalism",)
        return ()

    def describe(self):
        return {"model": self.kind, "N": self.N, "two_star": self.two_star}


@dataclass(frozen=True)
class PQGeneral(Model):
    """(1/p)∫A(|∇u|^p) - (λ/r)∫|u|^r with a(t) = 1 + t^{(q-p)/p}; α = r.

    A(t) = t + (p/q) t^{q/p}, so I1 = (1/p)∫|∇u|^p + (1/q)∫|∇u|^q.
    ``k0`` and ``k1`` are the (A1) bracketing constants of ``a``.
    """

    grid: Grid
    p: float
    q: float
    r: float
    k0: float = 1.0
    k1: float = 1.0
    eps: float = DEFAULT_EPS
    kind = "pq_general"

    def __post_init__(self):
        if not 1 < self.q <= self.p:
            raise ConfigurationError(f"pq_general needs 1 < q <= p, got p={self.p}, q={self.q}")
        if not self.k1 < self.r / self.p * self.k0:
            raise ConfigurationError("pq_general needs k1 < (r/p) k0")
        if not (self.k0 <= 1.0 <= self.k1):
            raise ConfigurationError("default a(t) requires k0 <= 1 <= k1")

    @property
    def alpha(self):
        return self.r

    def _eps_for(self, s):
        return 0.0 if s >= 2 else self.eps

    def j(self, u):
        p, q = self.p, self.q
        return _p_energy(self.grid, u, p, self._eps_for(p)) / p + _p_energy(
            self.grid, u, q, self._eps_for(q)
        ) / q

    def grad_j(self, u):
        p, q, g = self.p, self.q, self.grid
        return (
            mesh.dirichlet_energy_p_grad(g, u, p, self._eps_for(p)) / p
            + mesh.dirichlet_energy_p_grad(g, u, q, self._eps_for(q)) / q
        )

    def i2(self, u):
        return _integral(self.grid, np.abs(u) ** self.r) / self.r

    def grad_i2(self, u):
        return np.abs(u) ** (self.r - 1) * np.sign(u) * self.grid.cell_volume

    def h(self, u):
        # Σ [a(g^p) g^{p-2}|∇u|² - (r/p)(A(g^p) - A(eps^p))] h^dim, g² = |∇u|² + eps²
        p, q, r = self.p, self.q, self.r
        grads = mesh.cell_gradients(self.grid, u)
        d2 = sum(d * d for d in grads)
        total = np.zeros_like(d2)
        for s in (p, q):
            e = self._eps_for(s)
            w = mesh._pow_weight(d2, e, s)
            total += w * d2 - (r / s) * ((d2 + e * e) ** (s / 2) - e**s)
        return _integral(self.grid, total)

    def norm(self, u):
        return _p_norm_seminorm(self.grid, u, self.p, 0.0)

    def norm_grad(self, u):
        return _p_norm_grad(self.grid, u, self.p, 0.0)

    def describe(self):
        return {"model": self.kind, "p": self.p, "q": self.q, "r": self.r,
                "k0": self.k0, "k1": self.k1, "eps": self.eps}


@dataclass(frozen=True)
class Kirchhoff(Model):
    """(1/θ)‖u‖^θ - ∫F(u), ‖u‖ = (∫|∇u|^p)^{1/p}, θ <= 1, θ != 0.

    There is no λ here: Φ_λ ignores λ and the model is projected directly.
    """

    grid: Grid
    p: float
    theta: float
    nonlin: Nonlinearity
    eps: float = DEFAULT_EPS
    kind = "kirchhoff"
    path = "direct"

    def __post_init__(self):
        if not self.p > 1:
            raise ConfigurationError("kirchhoff needs p > 1")
        if self.theta > 1 or self.theta == 0:
            raise ConfigurationError(f"kirchhoff needs theta <= 1, theta != 0, got {self.theta}")

    @property
    def alpha(self):
        raise NotApplicableError("kirchhoff model has no I2")

    def _eps(self):
        return 0.0 if self.p >= 2 else self.eps

    def norm(self, u):
        return _p_norm_seminorm(self.grid, u, self.p, self._eps())

    def norm_grad(self, u):
        return _p_norm_grad(self.grid, u, self.p, self._eps())

    def j(self, u):
        nrm = self.norm(u)
        if nrm == 0:
            if self.theta < 0:
                raise DegenerateInputError("kirchhoff energy undefined at u = 0 for theta < 0")
            return 0.0
        return nrm**self.theta / self.theta

    def grad_j(self, u):
        nrm = self.norm(u)
        if nrm == 0:
            raise DegenerateInputError("kirchhoff gradient undefined at u = 0")
        # d/du (1/θ)‖u‖^θ = ‖u‖^{θ-1} ∇‖u‖
        return nrm ** (self.theta - 1) * self.norm_grad(u)

    k = Semilinear.k
    grad_k = Semilinear.grad_k

    def i2(self, u):
        return 0.0

    def grad_i2(self, u):
        return np.zeros(self.grid.size)

    def h(self, u):
        raise NotApplicableError("H is not defined for the kirchhoff model")

    def phi(self, u):
        return self.i1(u)

    def grad(self, u):
        return self.grad_i1(u)

    def describe(self):
        return {"model": self.kind, "p": self.p, "theta": self.theta,
                "nonlinearity": self.nonlin.to_dict(), "eps": self.eps}


def _field(model, u) -> np.ndarray:
    return model.grid.check_field(u)


def eval_phi_lambda(model: Model, u, lam: float) -> float:
    u = _field(model, u)
    if model.path == "direct":
        return model.phi(u)
    return model.i1(u) - lam * model.i2(u)


def grad_phi_lambda(model: Model, u, lam: float) -> np.ndarray:
    u = _field(model, u)
    if model.path == "direct":
        return model.grad(u)
    return model.grad_i1(u) - lam * model.grad_i2(u)


def _i2_checked(model: Model, u) -> float:
    if model.path == "direct":
        raise NotApplicableError(f"λ_c is not defined for the {model.kind} model")
    i2 = model.i2(u)
    if i2 <= 0:
        raise DegenerateInputError("λ_c undefined: I2(u) = 0")
    return i2


def eval_lambda_c(model: Model, u, c: float) -> float:
    u = _field(model, u)
    return (model.i1(u) - c) / _i2_checked(model, u)


def grad_lambda_c(model: Model, u, c: float) -> np.ndarray:
    u = _field(model, u)
    i2 = _i2_checked(model, u)
    lam = (model.i1(u) - c) / i2
    return grad_phi_lambda(model, u, lam) / i2


def eval_H(model: Model, u) -> float:
    return model.h(_field(model, u))


def energy_breakdown(model: Model, u) -> EnergyBreakdown:
    u = _field(model, u)
    j, k = model.j(u), model.k(u)
    h = np.nan if model.path == "direct" else model.h(u)
    return EnergyBreakdown(i1=j - k, i2=model.i2(u), j=j, k=k, h=h)
