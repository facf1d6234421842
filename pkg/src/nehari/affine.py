"""Affine p-energy on 2-D grids.

    E(u) = γ_{N,p} ( ∫_{S^{N-1}} ‖∇_ξ u‖_p^{-N} dσ(ξ) )^{-1/N},   N = 2

The circle integral uses the trapezoid rule on m equally spaced
directions (spectrally accurate for the periodic integrand).  Directional
derivatives are taken cellwise from the forward differences of
:mod:`nehari.mesh`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mesh
from .errors import ConfigurationError, DegenerateInputError
from .mesh import Grid
from .nonlinearity import Nonlinearity

__all__ = [
    "SphereQuadrature",
    "AffineParams",
    "AffineFunctional",
    "unit_ball_volume",
    "gamma_constant",
    "directional_lp_norms",
    "affine_energy",
    "affine_energy_grad",
    "h_u_kernel",
    "h_u_integral",
    "eval_phi_affine",
    "grad_phi_affine",
]

_N = 2


def unit_ball_volume(k: float) -> float:
    """ω_k = π^{k/2} / Γ(k/2 + 1), valid for real k >= 0."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def gamma_constant(N: int, p: float) -> float:
    w = unit_ball_volume
    return (N * w(N) * w(p - 1)) * (N * w(N)) ** (p / N) / (2 * w(N + p - 2))


@dataclass(frozen=True)
class SphereQuadrature:
    m: int = 64
    directions: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 2:
            raise ConfigurationError("need at least two directions")
        ang = 2 * np.pi * np.arange(self.m) / self.m
        object.__setattr__(self, "directions", np.column_stack([np.cos(ang), np.sin(ang)]))
        object.__setattr__(self, "weights", np.full(self.m, 2 * np.pi / self.m))


@dataclass(frozen=True)
class AffineParams:
    p: float = 2.0
    gamma: float | None = None
    eps_floor: float = 1e-10

    def __post_init__(self):
        if not self.p > 1:
            raise ConfigurationError(f"affine energy needs p > 1, got {self.p}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", gamma_constant(_N, self.p))


def _check_2d(grid: Grid):
    if grid.dim != 2:
        raise ConfigurationError("the affine energy is implemented for dim = 2 only")


def _directional_derivs(grid: Grid, u, quad: SphereQuadrature) -> np.ndarray:
    dx, dy = mesh.cell_gradients(grid, u)
    xi = quad.directions
    return np.outer(xi[:, 0], dx) + np.outer(xi[:, 1], dy)


def directional_lp_norms(grid: Grid, u, quad: SphereQuadrature, p: float,
                         eps_floor: float = 1e-10) -> np.ndarray:
    """‖∇_ξ u‖_p for every quadrature direction ξ."""
    _check_2d(grid)
    u = grid.check_field(u)
    d = _directional_derivs(grid, u, quad)
    norms = (np.sum(np.abs(d) ** p, axis=1) * grid.cell_volume) ** (1.0 / p)
    if np.all(norms < eps_floor):
        raise DegenerateInputError("all directional derivatives vanish")
    return norms


def _energy_parts(grid, u, quad, params):
    _check_2d(grid)
    u = grid.check_field(u)
    p = params.p
    d = _directional_derivs(grid, u, quad)
    norms = (np.sum(np.abs(d) ** p, axis=1) * grid.cell_volume) ** (1.0 / p)
    floored = norms < params.eps_floor
    if np.all(floored):
        raise DegenerateInputError("all directional derivatives vanish")
    norms = np.where(floored, params.eps_floor, norms)
    S = float(np.sum(quad.weights * norms ** (-_N)))
    E = params.gamma * S ** (-1.0 / _N)
    return d, norms, floored, S, E


def affine_energy(grid: Grid, u, quad: SphereQuadrature, params: AffineParams,
                  with_flags: bool = False):
    _, _, floored, _, E = _energy_parts(grid, u, quad, params)
    if with_flags:
        return E, ({"degenerate-direction-floored"} if floored.any() else set())
    return E


def affine_energy_grad(grid: Grid, u, quad: SphereQuadrature, params: AffineParams) -> np.ndarray:
    """Nodal gradient of (1/p) E^p."""
    d, norms, floored, S, E = _energy_parts(grid, u, quad, params)
    p = params.p
    # ∇E = γ S^{-1/N-1} Σ_j w_j n_j^{-N-p} Σ_cells |d_j|^{p-2} d_j ∇d_j h²
    coef = np.where(floored, 0.0, quad.weights * norms ** (-_N - p))
    dp = np.abs(d) ** (p - 1) * np.sign(d)
    xi = quad.directions
    cx = (coef * xi[:, 0]) @ dp
    cy = (coef * xi[:, 1]) @ dp
    Dx, Dy = grid.diff_ops
    grad_E = params.gamma * S ** (-1.0 / _N - 1) * (Dx.T @ cx + Dy.T @ cy) * grid.cell_volume
    return E ** (p - 1) * grad_E


def h_u_kernel(grid: Grid, u, quad: SphereQuadrature, params: AffineParams, zeta) -> float:
    """H_u^p(ζ) = γ^{-N} E^{N+p} ∫ ‖∇_ξ u‖_p^{-(N+p)} |⟨ξ, ζ⟩|^p dσ(ξ).

    The prefactor γ^{-N} makes ∫_Ω H_u^p(∇u) = E^p, i.e. the weak form of
    the operator is the derivative of (1/p)E^p.
    """
    _, norms, _, _, E = _energy_parts(grid, u, quad, params)
    p, g = params.p, params.gamma
    proj = np.abs(quad.directions @ np.asarray(zeta, dtype=float)) ** p
    return float(g ** (-_N) * E ** (_N + p) * np.sum(quad.weights * norms ** (-(_N + p)) * proj))


def h_u_integral(grid: Grid, u, quad: SphereQuadrature, params: AffineParams) -> float:
    """Σ_cells H_u^p(∇u) h², evaluated cell by cell through the kernel."""
    _, norms, _, _, E = _energy_parts(grid, u, quad, params)
    p, g = params.p, params.gamma
    dx, dy = mesh.cell_gradients(grid, u)
    zetas = np.column_stack([dx, dy])
    proj = np.abs(zetas @ quad.directions.T) ** p  # cells x m
    kern = g ** (-_N) * E ** (_N + p) * proj @ (quad.weights * norms ** (-(_N + p)))
    return float(np.sum(kern) * grid.cell_volume)


@dataclass(frozen=True)
class AffineFunctional:
    """Φ_A(u) = (1/p) E^p(u) - ∫F(u), projected along rays directly."""

    grid: Grid
    nonlin: Nonlinearity
    params: AffineParams = AffineParams()
    quad: SphereQuadrature = SphereQuadrature()
    kind = "affine"
    path = "direct"
    even = True

    def __post_init__(self):
        _check_2d(self.grid)

    def energy(self, u) -> float:
        return affine_energy(self.grid, u, self.quad, self.params)

    def phi(self, u) -> float:
        p = self.params.p
        return self.energy(u) ** p / p - float(np.sum(self.nonlin.F(u)) * self.grid.cell_volume)

    def grad(self, u) -> np.ndarray:
        return affine_energy_grad(self.grid, u, self.quad, self.params) - self.nonlin.f(u) * self.grid.cell_volume

    # sphere used by the optimizer: E(u) = 1
    def norm(self, u) -> float:
        return self.energy(u)

    def norm_grad(self, u) -> np.ndarray:
        E = self.energy(u)
        return affine_energy_grad(self.grid, u, self.quad, self.params) / E ** (self.params.p - 1)

    def describe(self) -> dict:
        return {"model": self.kind, "p": self.params.p, "m": self.quad.m,
                "eps_floor": self.params.eps_floor, "nonlinearity": self.nonlin.to_dict()}


def eval_phi_affine(grid, u, quad, params, nonlin) -> float:
    return AffineFunctional(grid, nonlin, params, quad).phi(u)


def grad_phi_affine(grid, u, quad, params, nonlin) -> np.ndarray:
    return AffineFunctional(grid, nonlin, params, quad).grad(u)
