# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Discrete RLW operators

    D = 1 - mu d_xx - theta d_yy                       (self-adjoint, positive definite)
    S = -D^{-1} (alpha d_x + beta d_y)                  (skew-adjoint)
    G(w) v = -[A v + (w A v + A(w v))/3],  A = alpha d_x + beta d_y   (skew-adjoint for every frozen w)
"""

import functools
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as ModelField, model_validator

from ..exceptions import ConfigurationError
from .grid import Field, PeriodicGrid, check_same_grid

MAX_DENSE_NODES = 64

DENSE_OPERATORS = ("D", "D_inv", "S", "G", "D_inv_G")


class RlwParams(BaseModel):
    """Coefficients of u_t + alpha u_x + beta u_y + alpha u u_x + beta u u_y - mu u_xxt - theta u_yyt = 0"""

    model_config = ConfigDict(frozen=True)

    alpha: float = ModelField(1.0, gt=0.0, allow_inf_nan=False)
    beta: float = ModelField(0.0, ge=0.0, allow_inf_nan=False)
    mu: float = ModelField(1.0, gt=0.0, allow_inf_nan=False)
    theta: float = ModelField(0.0, ge=0.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _beta_theta_pair(self):
        if (self.beta == 0.0) != (self.theta == 0.0):
            raise ValueError("beta and theta must either both vanish (1D) or both be positive (2D)")
        return self

    @property
    def dim(self) -> int:
        return 1 if self.theta == 0.0 else 2

    def check_grid(self, grid: PeriodicGrid) -> None:
        if grid.dim != self.dim:
            raise ConfigurationError(
                f"Parameters alpha={self.alpha}, beta={self.beta}, mu={self.mu}, theta={self.theta}"
                f" describe a {self.dim}D problem but the grid is {grid.dim}D"
            )


class RlwOperator:
    """
    The RLW operators bound to one grid and one parameter set, acting on raw node arrays.

    Symbols live on the half (rfft) layout; all first-derivative symbols have their Nyquist entry zeroed.
    Instances are obtained through :py:func:`rlw_operator` which caches them per (grid, params).
    """

    def __init__(self, grid: PeriodicGrid, params: RlwParams):
        params.check_grid(grid)
        self.grid = grid
        self.params = params

        dsym = grid.derivative_symbols
        kappa = grid.wavenumbers()

        if grid.dim == 1:
            self.symbol_A = params.alpha * dsym[0]
            self.symbol_D = 1.0 + params.mu * kappa[0] ** 2
        else:
            self.symbol_A = params.alpha * dsym[0] + params.beta * dsym[1]
            self.symbol_D = 1.0 + params.mu * kappa[0] ** 2 + params.theta * kappa[1] ** 2

        self.symbol_D_inv = 1.0 / self.symbol_D
        self.symbol_S = -self.symbol_D_inv * self.symbol_A

    def _multiplier(self, symbol: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.grid.inverse(symbol * self.grid.forward(v))

    def D(self, v: np.ndarray) -> np.ndarray:
        return self._multiplier(self.symbol_D, v)

    def D_inv(self, v: np.ndarray) -> np.ndarray:
        return self._multiplier(self.symbol_D_inv, v)

    def S(self, v: np.ndarray) -> np.ndarray:
        return self._multiplier(self.symbol_S, v)

    def A(self, v: np.ndarray) -> np.ndarray:
        """alpha d_x + beta d_y"""
        return self._multiplier(self.symbol_A, v)

    def G(self, ustar: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """G(ustar) as a closure over the frozen field ``ustar``"""
        grid = self.grid

        def apply(v: np.ndarray) -> np.ndarray:
            av = self.A(v)
            return -(av + (grid.multiply(ustar, av) + self.A(grid.multiply(ustar, v))) / 3.0)

        return apply

    def D_inv_G(self, ustar: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """D^{-1} G(ustar), fused so that only one inverse transform is needed after the products"""
        grid = self.grid

        def apply(v: np.ndarray) -> np.ndarray:
            av = self.A(v)
            hat = grid.forward(av + grid.multiply(ustar, av) / 3.0)
            hat += self.symbol_A * grid.forward(grid.multiply(ustar, v)) / 3.0
            return -grid.inverse(self.symbol_D_inv * hat)

        return apply


@functools.lru_cache(maxsize=32)
def rlw_operator(grid: PeriodicGrid, params: RlwParams) -> RlwOperator:
    return RlwOperator(grid, params)


def apply_D(u: Field, p: RlwParams) -> Field:
    """(1 + mu kx^2 + theta ky^2) multiplier"""
    return u.like(rlw_operator(u.grid, p).D(u.values))


def apply_D_inv(u: Field, p: RlwParams) -> Field:
    """1/(1 + mu kx^2 + theta ky^2) multiplier"""
    return u.like(rlw_operator(u.grid, p).D_inv(u.values))


def apply_S(u: Field, p: RlwParams) -> Field:
    """-D^{-1}(alpha d_x + beta d_y) u"""
    return u.like(rlw_operator(u.grid, p).S(u.values))


def apply_G(ustar: Field, v: Field, p: RlwParams) -> Field:
    """
    -[alpha v_x + beta v_y + alpha/3 (ustar v_x + (ustar v)_x) + beta/3 (ustar v_y + (ustar v)_y)]

    Products are taken pointwise on the grid, derivatives spectrally.
    """
    grid = check_same_grid(ustar, v)
    return v.like(rlw_operator(grid, p).G(ustar.values)(v.values))


def materialize_dense(op: str, p: RlwParams, grid: PeriodicGrid, ustar: Optional[Field] = None) -> np.ndarray:
    """
    Explicit matrix of one of the operators, assembled column by column from unit fields.

    Only meant as a brute-force oracle for small grids.

    :param op: one of ``D``, ``D_inv``, ``S``, ``G``, ``D_inv_G``
    :param ustar: the frozen field for ``G`` and ``D_inv_G``
    """
    if op not in DENSE_OPERATORS:
        raise ConfigurationError(f"Unknown operator '{op}', expected one of {', '.join(DENSE_OPERATORS)}")

    if grid.size > MAX_DENSE_NODES:
        raise ConfigurationError(f"Refusing to materialize a dense operator on {grid.size} > {MAX_DENSE_NODES} nodes")

    operator = rlw_operator(grid, p)

    if op in ("G", "D_inv_G"):
        if ustar is None:
            raise ConfigurationError(f"Operator '{op}' needs a frozen field ustar")
        check_same_grid(ustar, Field.zeros(grid))
        apply = getattr(operator, op)(ustar.values)
    else:
        apply = getattr(operator, op)

    matrix = np.empty((grid.size, grid.size))
    for col in range(grid.size):
        unit = np.zeros(grid.size)
        unit[col] = 1.0
        matrix[:, col] = apply(unit.reshape(grid.shape)).ravel()

    return matrix
