# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Gauss-Legendre collocation Butcher tableaus

Coefficients are kept as exact expressions in ``mpmath`` (evaluated with a generous working precision) and
rounded to doubles once, which keeps the symplectic residual at the rounding level.
"""

import dataclasses
from typing import Optional, Tuple

import mpmath
import numpy as np

from ..exceptions import ConfigurationError

WORKING_DPS = 40


@dataclasses.dataclass(frozen=True, eq=False)
class ButcherTableau:
    """
    Coefficients (a_ij, b_i, c_i) of an s-stage Runge-Kutta method.

    :param exact: optional high-precision copy ``(a, b, c)`` as ``mpmath`` matrices
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    name: str = ""
    exact: Optional[Tuple[mpmath.matrix, mpmath.matrix, mpmath.matrix]] = None

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float).ravel()
        c = np.array(self.c, dtype=float).ravel()

        if a.shape != (b.size, b.size) or c.size != b.size:
            raise ConfigurationError(f"Inconsistent tableau shapes a={a.shape}, b={b.shape}, c={c.shape}")

        for arr in (a, b, c):
            arr.setflags(write=False)

        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        return self.b.size

    @property
    def row_sum_defect(self) -> float:
        """max_i |c_i - sum_j a_ij|"""
        return float(np.max(np.abs(self.c - self.a.sum(axis=1))))

    @property
    def weight_sum_defect(self) -> float:
        """|sum_i b_i - 1|"""
        return abs(float(self.b.sum()) - 1.0)

    @property
    def is_symplectic(self) -> bool:
        return symplectic_residual(self) <= 1e-14

    def validate(self, tol: float = 1e-14):
        """check the consistency conditions c_i = sum_j a_ij and sum_i b_i = 1"""
        if self.row_sum_defect > tol:
            raise ConfigurationError(f"Tableau {self.name}: abscissae differ from row sums by {self.row_sum_defect}")
        if self.weight_sum_defect > tol:
            raise ConfigurationError(f"Tableau {self.name}: weights sum to 1 + {self.weight_sum_defect}")

    def stability_function(self, z: complex) -> complex:
        """R(z) = 1 + z b^T (I - z A)^{-1} 1, the one-step growth factor on u' = lambda u with z = tau lambda"""
        ones = np.ones(self.s)
        stages = np.linalg.solve(np.eye(self.s) - z * self.a, ones)
        return 1.0 + z * (self.b @ stages)


def symplectic_residual(t: ButcherTableau) -> float:
    """max_ij |b_i a_ij + b_j a_ji - b_i b_j|"""
    ba = t.b[:, None] * t.a
    return float(np.max(np.abs(ba + ba.T - np.outer(t.b, t.b))))


def _gauss_exact(s: int):
    """closed-form Gauss-Legendre coefficients at the shifted Legendre zeros"""
    mpf = mpmath.mpf
    half = mpf(1) / 2

    if s == 1:
        a = [[half]]
        b = [mpf(1)]

    elif s == 2:
        r3 = mpmath.sqrt(3)
        a = [
            [mpf(1) / 4, mpf(1) / 4 - r3 / 6],
            [mpf(1) / 4 + r3 / 6, mpf(1) / 4],
        ]
        b = [half, half]

    elif s == 3:
        r15 = mpmath.sqrt(15)
        a = [
            [mpf(5) / 36, mpf(2) / 9 - r15 / 15, mpf(5) / 36 - r15 / 30],
            [mpf(5) / 36 + r15 / 24, mpf(2) / 9, mpf(5) / 36 - r15 / 24],
            [mpf(5) / 36 + r15 / 30, mpf(2) / 9 + r15 / 15, mpf(5) / 36],
        ]
        b = [mpf(5) / 18, mpf(4) / 9, mpf(5) / 18]

    else:
        raise ConfigurationError(f"Gauss tableaus are available for s = 1, 2, 3 only, got s={s}")

    a = mpmath.matrix(a)
    b = mpmath.matrix(b)
    c = mpmath.matrix([sum(a[i, j] for j in range(s)) for i in range(s)])
    return a, b, c


def _to_numpy(matrix: mpmath.matrix) -> np.ndarray:
    return np.array(matrix.tolist(), dtype=float)


def gauss_tableau(s: int) -> ButcherTableau:
    """
    The s-stage Gauss collocation method (order 2s): s=1 implicit midpoint, s=2 order 4, s=3 order 6.
    """
    if isinstance(s, bool) or not isinstance(s, (int, np.integer)):
        raise ConfigurationError(f"Stage count must be an integer, got {s!r}")

    with mpmath.workdps(WORKING_DPS):
        a, b, c = _gauss_exact(int(s))
        tableau = ButcherTableau(
            a=_to_numpy(a),
            b=_to_numpy(b).ravel(),
            c=_to_numpy(c).ravel(),
            order=2 * s,
            name=f"gauss{s}",
            exact=(a, b, c),
        )

    tableau.validate()
    return tableau
