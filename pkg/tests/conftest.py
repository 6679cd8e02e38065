"""
For pytest
shared grids, parameters and band-limited random fields
"""

import math

import numpy as np
import pytest

from rlw_spectral.spectral.grid import Field, make_grid
from rlw_spectral.spectral.operators import RlwParams


def band_limited(grid, seed, modes=3, amplitude=0.5):
    """a smooth random field made of the lowest few Fourier modes plus a mean"""
    rng = np.random.default_rng(seed)
    values = np.full(grid.shape, rng.uniform(-0.5, 0.5))
    scaled = [2.0 * math.pi * (x - a) / (b - a) for x, (a, b) in zip(grid.mesh, grid.bounds)]

    for _ in range(modes):
        # |m| <= 2 on every axis stays clear of the Nyquist mode of the smallest grids
        wave = rng.integers(1, 3) * scaled[0] + sum(rng.integers(0, 3) * phase for phase in scaled[1:])
        values += amplitude * rng.uniform(-1, 1) * np.cos(wave + rng.uniform(0, 2 * math.pi))

    return Field(grid, values)


@pytest.fixture
def grid1d():
    return make_grid((0.0, 2.0 * math.pi), 8)


@pytest.fixture
def grid2d():
    return make_grid([(0.0, 2.0 * math.pi), (0.0, 2.0 * math.pi)], (8, 8))


@pytest.fixture
def params1d():
    return RlwParams(alpha=1.0, mu=1.0)


@pytest.fixture
def params2d():
    return RlwParams(alpha=1.0, beta=0.7, mu=1.3, theta=0.9)


@pytest.fixture
def random_field():
    return band_limited
