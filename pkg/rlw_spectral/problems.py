# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Initial conditions and exact solutions of the RLW test problems
"""

import logging
import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from pydantic import Field as ModelField

from .exceptions import ConfigurationError
from .spectral.grid import Field, PeriodicGrid
from .spectral.operators import RlwParams

LOGGER = logging.getLogger(__name__)

# largest boundary value of a sampled soliton before wrap-around effects are reported
BOUNDARY_TOL = 1e-10


class SolitonParams(BaseModel):
    """A solitary wave 3c sech^2(k(x - v t - x0)); k and v follow from c and the equation parameters"""

    model_config = ConfigDict(frozen=True)

    c: float = ModelField(gt=0.0, allow_inf_nan=False)
    x0: float = ModelField(0.0, allow_inf_nan=False)

    def k(self, p: RlwParams) -> float:
        return 0.5 * math.sqrt(self.c / (p.mu * (1.0 + self.c)))

    def v(self, p: RlwParams) -> float:
        return p.alpha * (1.0 + self.c)

    def amplitude(self) -> float:
        return 3.0 * self.c

    def mass(self, p: RlwParams) -> float:
        """integral over the real line, 6c/k"""
        return 6.0 * self.c / self.k(p)


def _require_dim(grid: PeriodicGrid, dim: int, what: str):
    if grid.dim != dim:
        raise ConfigurationError(f"{what} needs a {dim}D grid, got a {grid.dim}D one")


def _sech2(x: np.ndarray) -> np.ndarray:
    return 1.0 / np.cosh(x) ** 2


def _soliton_values(grid: PeriodicGrid, p: RlwParams, sp: SolitonParams, t: float) -> np.ndarray:
    (a, b), = grid.bounds
    length = b - a
    x = grid.nodes[0]

    # distance to the crest, wrapped into [-L/2, L/2)
    xi = np.mod(x - sp.v(p) * t - sp.x0 + 0.5 * length, length) - 0.5 * length
    return sp.amplitude() * _sech2(sp.k(p) * xi)


def _check_boundary(grid: PeriodicGrid, values: np.ndarray, what: str):
    edge = max(abs(values[0]), abs(values[-1]))
    if edge > BOUNDARY_TOL:
        LOGGER.warning(
            "%s reaches %.3e at the boundary of [%g, %g), periodic wrap-around is not negligible",
            what,
            edge,
            *grid.bounds[0],
        )


def soliton_1d(grid: PeriodicGrid, p: RlwParams, sp: SolitonParams, t: float = 0.0) -> Field:
    """
    The exact solitary wave u(x, t) = 3c sech^2(k(x - v t - x0)), sampled with its argument wrapped periodically.
    """
    _require_dim(grid, 1, "The soliton solution")
    p.check_grid(grid)

    values = _soliton_values(grid, p, sp, t)
    _check_boundary(grid, values, "The soliton")
    return Field(grid, values)


def soliton_1d_dt(grid: PeriodicGrid, p: RlwParams, sp: SolitonParams, t: float = 0.0) -> Field:
    """analytic time derivative of :py:func:`soliton_1d`"""
    _require_dim(grid, 1, "The soliton solution")
    (a, b), = grid.bounds
    length = b - a
    k, v = sp.k(p), sp.v(p)

    xi = np.mod(grid.nodes[0] - v * t - sp.x0 + 0.5 * length, length) - 0.5 * length
    # d/dt 3c sech^2(k xi) with d xi/dt = -v
    return Field(grid, 2.0 * sp.amplitude() * k * v * _sech2(k * xi) * np.tanh(k * xi))


def two_soliton_ic(
    grid: PeriodicGrid, p: RlwParams, first: Tuple[float, float], second: Tuple[float, float]
) -> Field:
    """
    Superposition 3c1 sech^2(k1(x - x1)) + 3c2 sech^2(k2(x - x2)); a speed c = 0 drops that wave.

    :param first: (c1, x1)
    :param second: (c2, x2)
    """
    _require_dim(grid, 1, "The two-soliton initial condition")
    p.check_grid(grid)

    values = np.zeros(grid.shape)
    for c, x0 in (first, second):
        if c < 0:
            raise ConfigurationError(f"Soliton speed parameter must be non-negative, got {c}")
        if c == 0:
            continue
        values += _soliton_values(grid, p, SolitonParams(c=c, x0=x0), 0.0)

    _check_boundary(grid, values, "The two-soliton profile")
    return Field(grid, values)


def trig_ic_2d(grid: PeriodicGrid) -> Field:
    """(1 + sin x)(1 + sin y)"""
    _require_dim(grid, 2, "The trigonometric initial condition")
    return Field.from_function(grid, lambda x, y: (1.0 + np.sin(x)) * (1.0 + np.sin(y)))


def undular_bore_ic(grid: PeriodicGrid, x0: float = 0.0, y0: float = 0.0, d: float = 2.0) -> Field:
    """0.05 (1 - tanh((x - x0)^2 + (y - y0)^2 - d^2))"""
    _require_dim(grid, 2, "The undular bore initial condition")
    return Field.from_function(grid, lambda x, y: 0.05 * (1.0 - np.tanh((x - x0) ** 2 + (y - y0) ** 2 - d**2)))


def maxwellian_ic(grid: PeriodicGrid, x0: float = 40.0, y0: float = 40.0) -> Field:
    """exp(-((x - x0)^2 + (y - y0)^2))"""
    _require_dim(grid, 2, "The Maxwellian initial condition")
    return Field.from_function(grid, lambda x, y: np.exp(-((x - x0) ** 2 + (y - y0) ** 2)))
