import numpy as np
import pytest

from nehari.mesh import Grid, laplacian_eigenbasis


def smooth_field(grid, rng, modes=6, noise=0.0):
    """Random combination of low eigenfields, optionally with nodal noise."""
    k = min(modes, grid.size)
    basis = np.column_stack([v for _, v in laplacian_eigenbasis(grid, k)])
    u = basis @ (rng.standard_normal(k) / np.arange(1, k + 1))
    if noise:
        u = u + noise * rng.standard_normal(grid.size)
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid1():
    return Grid(1, 64)


@pytest.fixture
def grid2():
    return Grid(2, 15)
