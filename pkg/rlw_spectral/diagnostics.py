# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Discrete invariants, error norms and convergence rates
"""

import dataclasses
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigurationError, UndefinedRateError
from .spectral.grid import Field, check_same_grid, deriv, inner_product, norm
from .spectral.operators import RlwParams, apply_D


@dataclasses.dataclass(frozen=True)
class InvariantRecord:
    t: float
    mass: float
    momentum: float
    hamiltonian: float
    quad_energy: Optional[float] = None

    def __post_init__(self):
        values = [self.t, self.mass, self.momentum, self.hamiltonian]
        if self.quad_energy is not None:
            values.append(self.quad_energy)
        if not all(math.isfinite(v) for v in values):
            raise ConfigurationError(f"Invariant record at t={self.t} has non-finite entries")


# the columns of an invariant series, in output order
INVARIANTS = ("mass", "momentum", "hamiltonian", "quad_energy")


def mass(u: Field) -> float:
    """(u, 1)"""
    return float(np.sum(u.values)) * u.grid.cell_volume


def momentum(u: Field, p: RlwParams) -> float:
    """(u, D u)/2"""
    return 0.5 * inner_product(u, apply_D(u, p))


def momentum_gradient(u: Field, p: RlwParams) -> float:
    """
    (|u|^2 + mu |u_x|^2 + theta |u_y|^2)/2 with spectral derivatives.

    Agrees with :py:func:`momentum` up to rounding; the two differ only in how the D-form is evaluated.
    """
    p.check_grid(u.grid)
    total = norm(u) ** 2 + p.mu * norm(deriv(u, 0)) ** 2
    if u.grid.dim == 2:
        total += p.theta * norm(deriv(u, 1)) ** 2
    return 0.5 * total


def stability_norm(u: Field, p: RlwParams) -> float:
    """sqrt(|u|^2 + mu |u_x|^2 + theta |u_y|^2), bounded along every momentum-preserving trajectory"""
    return math.sqrt(2.0 * momentum_gradient(u, p))


def hamiltonian(u: Field) -> float:
    """(u^2/2 + u^3/6, 1)"""
    v = u.values
    return float(np.sum(0.5 * v**2 + v**3 / 6.0)) * u.grid.cell_volume


def quad_energy(u: Field, q: Field) -> float:
    """(u^2/2 + u q/6, 1), the quadratized energy conserved by the energy-preserving schemes"""
    check_same_grid(u, q)
    return float(np.sum(0.5 * u.values**2 + u.values * q.values / 6.0)) * u.grid.cell_volume


def error_norms(u_num: Field, u_ref: Field) -> Tuple[float, float]:
    """
    (e_2, e_inf) of the difference.

    e_2 is quadrature-weighted, sqrt(prod h) * |diff|_2, so that it approximates the continuous L2 norm.
    """
    grid = check_same_grid(u_num, u_ref)
    diff = u_num.values - u_ref.values
    return math.sqrt(grid.cell_volume) * float(np.linalg.norm(diff.ravel())), float(np.max(np.abs(diff)))


def convergence_rates(errors: Sequence[float], ratio: float = 2.0) -> List[float]:
    """
    Observed orders log(e_k/e_{k+1})/log(ratio) for errors at successively refined steps.

    :param ratio: refinement factor between adjacent steps
    :raises UndefinedRateError: if an error is zero, negative or not finite
    """
    errors = list(errors)
    if len(errors) < 2:
        raise ConfigurationError("At least two error samples are needed to estimate a rate")

    for err in errors:
        if not (math.isfinite(err) and err > 0):
            raise UndefinedRateError(f"Convergence rate undefined for error value {err!r}")

    return [math.log(coarse / fine) / math.log(ratio) for coarse, fine in zip(errors, errors[1:])]


def invariant_record(state) -> InvariantRecord:
    """invariants of a scheme state; the quadratized energy only for states carrying q"""
    u, p = state.u, state.params
    return InvariantRecord(
        t=state.t,
        mass=mass(u),
        momentum=momentum(u, p),
        hamiltonian=hamiltonian(u),
        quad_energy=None if state.q is None else quad_energy(u, state.q),
    )


def drift_table(records: Sequence[InvariantRecord]) -> List[dict]:
    """
    |X^n - X^0| for every invariant, measured against the first (t=0) record.

    Rows keep the record time under ``t``; the quadratized energy column is ``None`` when it was not recorded.
    """
    if not records:
        return []

    first = records[0]
    rows = []
    for record in records:
        row = {"t": record.t}
        for name in INVARIANTS:
            value, initial = getattr(record, name), getattr(first, name)
            row[name] = None if value is None or initial is None else abs(value - initial)
        rows.append(row)
    return rows


def max_drifts(records: Sequence[InvariantRecord]) -> dict:
    """largest drift of every invariant over a series"""
    rows = drift_table(records)
    summary = {}
    for name in INVARIANTS:
        drifts = [row[name] for row in rows if row[name] is not None]
        summary[name] = max(drifts) if drifts else None
    return summary
