# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Runge-Kutta stage equations of the linearized momentum (LMP) and energy (LEP) systems

The correction steps are linear in the slopes k once the stage approximations u* are frozen; the s coupled
systems are stacked into one vector of s*N unknowns and solved matrix-free by restarted GMRES. The prediction
steps are explicit fixed-point sweeps.
"""

import dataclasses
import logging
import math
from typing import Callable, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from pydantic import Field as ModelField
from scipy.sparse.linalg import LinearOperator, gmres

from ..exceptions import ConfigurationError, DivergenceError, SolverFailure, StartupFailure
from ..spectral.grid import Field, PeriodicGrid, check_same_grid
from ..spectral.operators import RlwOperator, RlwParams, rlw_operator
from .tableau import ButcherTableau

LOGGER = logging.getLogger(__name__)

# accepted ratio between the recomputed residual and the requested tolerance
RESIDUAL_SLACK = 10.0

STARTUP_TOL = 1e-14
STARTUP_MAX_SWEEPS = 200
STALL_SWEEPS = 5


class SolveConfig(BaseModel):
    """Settings of the linear stage solves and of the prediction sweeps"""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = ModelField(1e-13, gt=0.0, le=1e-6)
    max_krylov_iters: int = ModelField(500, ge=1)
    restart: int = ModelField(50, ge=1)
    method: Literal["krylov", "fixed-point"] = "krylov"
    k0: Literal["state", "zero"] = "state"


@dataclasses.dataclass(frozen=True, eq=False)
class StageSet:
    """
    Slopes and stage values of one Runge-Kutta step, stacked along the first axis: shape (s, *grid.shape).

    ``l`` and ``q`` are only present for the energy-quadratized (EQ) system.
    """

    grid: PeriodicGrid
    k: np.ndarray
    u: np.ndarray
    l: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    residual: float = 0.0
    iterations: int = 0

    @property
    def s(self) -> int:
        return self.k.shape[0]

    def slopes(self) -> List[Field]:
        return [Field(self.grid, k) for k in self.k]

    def stage_values(self) -> List[Field]:
        return [Field(self.grid, u) for u in self.u]

    def update(self, tab: ButcherTableau, tau: float, u_n: np.ndarray, q_n: Optional[np.ndarray] = None):
        """u^{n+1} = u^n + tau sum_i b_i k_i (and likewise q^{n+1} with l_i)"""
        u_next = u_n + tau * np.tensordot(tab.b, self.k, axes=1)
        if self.l is None:
            return u_next, None
        return u_next, q_n + tau * np.tensordot(tab.b, self.l, axes=1)


def _combine(tab: ButcherTableau, tau: float, stacked: np.ndarray) -> np.ndarray:
    """tau * sum_j a_ij x_j for every i"""
    return tau * np.tensordot(tab.a, stacked, axes=1)


def _check_inputs(u_n: Field, fields: Sequence[Field], tab: ButcherTableau, tau: float) -> PeriodicGrid:
    if len(fields) != tab.s:
        raise ConfigurationError(f"Expected {tab.s} frozen stage fields, got {len(fields)}")
    if not (tau > 0 and math.isfinite(tau)):
        raise ConfigurationError(f"Time step must be positive, got {tau}")
    return check_same_grid(u_n, *fields)


def _check_finite(stacked: np.ndarray, what: str, sweep: int):
    if not np.isfinite(stacked).all():
        raise DivergenceError(f"Non-finite values in {what} after sweep {sweep}, the time step is too large")


def _solve_stage_system(matvec: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray, cfg: SolveConfig, what: str):
    """solve K - L(K) = rhs for the stacked slopes, returning (K, relative residual, iterations)"""
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), 0.0, 0

    iterations = 0

    if cfg.method == "krylov":

        def count(_):
            nonlocal iterations
            iterations += 1

        size = rhs.size
        system = LinearOperator((size, size), matvec=matvec, dtype=float)
        restart = min(cfg.restart, size)
        solution, info = gmres(
            system,
            rhs,
            x0=rhs.copy(),
            rtol=cfg.rel_tol,
            atol=0.0,
            restart=restart,
            maxiter=math.ceil(cfg.max_krylov_iters / restart),
            callback=count,
            callback_type="pr_norm",
        )
        if info < 0:
            raise SolverFailure(f"GMRES rejected the {what} stage system (info={info})")

    else:
        solution = rhs.copy()
        for iterations in range(1, cfg.max_krylov_iters + 1):
            residual = rhs - matvec(solution)
            solution = solution + residual
            if np.linalg.norm(residual) <= cfg.rel_tol * rhs_norm:
                break
            _check_finite(solution, f"{what} stage iteration", iterations)

    residual = float(np.linalg.norm(rhs - matvec(solution))) / rhs_norm

    if not math.isfinite(residual) or residual > RESIDUAL_SLACK * cfg.rel_tol:
        raise SolverFailure(
            f"The {what} stage system did not converge: relative residual {residual:.3e}"
            f" after {iterations} iterations (requested {cfg.rel_tol:.1e})",
            residual=residual,
            iterations=iterations,
        )

    LOGGER.debug("%s stage solve: %d iterations, relative residual %.3e", what, iterations, residual)
    return solution, residual, iterations


def _stack(fields: Sequence[Field]) -> np.ndarray:
    return np.stack([field.values for field in fields])


def solve_lmp_stages(
    u_n: Field,
    ustar: Sequence[Field],
    tab: ButcherTableau,
    tau: float,
    p: RlwParams,
    cfg: Optional[SolveConfig] = None,
) -> StageSet:
    """
    Solve k_i = D^{-1} G(u*_i) (u^n + tau sum_j a_ij k_j), i = 1..s, simultaneously for all slopes.

    :param ustar: the s frozen stage approximations u*_i
    :raises SolverFailure: if the Krylov iteration does not reach ``cfg.rel_tol``
    """
    cfg = cfg or SolveConfig()
    grid = _check_inputs(u_n, ustar, tab, tau)
    op = rlw_operator(grid, p)

    stage_ops = [op.D_inv_G(w) for w in _stack(ustar)]
    shape = (tab.s,) + grid.shape

    def matvec(x):
        slopes = x.reshape(shape)
        increments = _combine(tab, tau, slopes)
        return (slopes - np.stack([apply(inc) for apply, inc in zip(stage_ops, increments)])).ravel()

    rhs = np.stack([apply(u_n.values) for apply in stage_ops]).ravel()
    solution, residual, iterations = _solve_stage_system(matvec, rhs, cfg, "LMP")

    k = solution.reshape(shape)
    return StageSet(
        grid=grid, k=k, u=u_n.values + _combine(tab, tau, k), residual=residual, iterations=iterations
    )


def solve_lep_stages(
    u_n: Field,
    q_n: Field,
    ustar: Sequence[Field],
    tab: ButcherTableau,
    tau: float,
    p: RlwParams,
    cfg: Optional[SolveConfig] = None,
) -> StageSet:
    """
    Solve the EQ stage equations with frozen u*:

        k_i = S(u_i + q_i/6 + u*_i u_i/3),  l_i = 2 u*_i k_i,
        u_i = u^n + tau sum_j a_ij k_j,     q_i = q^n + tau sum_j a_ij l_j.

    l and q are eliminated, leaving a linear system in the slopes k alone.
    """
    cfg = cfg or SolveConfig()
    grid = _check_inputs(u_n, ustar, tab, tau)
    check_same_grid(u_n, q_n)
    op = rlw_operator(grid, p)

    frozen = _stack(ustar)
    shape = (tab.s,) + grid.shape

    def weighted(slopes):
        return np.stack([grid.multiply(w, k) for w, k in zip(frozen, slopes)])

    def matvec(x):
        slopes = x.reshape(shape)
        increments = _combine(tab, tau, slopes)
        coupled = _combine(tab, tau, weighted(slopes))
        lhs = [op.S(y + grid.multiply(w, y) / 3.0 + z / 3.0) for w, y, z in zip(frozen, increments, coupled)]
        return (slopes - np.stack(lhs)).ravel()

    u_vals, q_vals = u_n.values, q_n.values
    rhs = np.stack([op.S(u_vals + grid.multiply(w, u_vals) / 3.0 + q_vals / 6.0) for w in frozen]).ravel()
    solution, residual, iterations = _solve_stage_system(matvec, rhs, cfg, "LEP")

    k = solution.reshape(shape)
    l = 2.0 * weighted(k)
    return StageSet(
        grid=grid,
        k=k,
        u=u_vals + _combine(tab, tau, k),
        l=l,
        q=q_vals + _combine(tab, tau, l),
        residual=residual,
        iterations=iterations,
    )


def _initial_slopes(u_n: Field, s: int, k0: str) -> np.ndarray:
    # k_i^{n,0} = u^n: a slope seeded with a state value, kept as prescribed by the method
    if k0 == "state":
        return np.repeat(u_n.values[None, ...], s, axis=0)
    return np.zeros((s,) + u_n.grid.shape)


def _check_sweeps(M: int):
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)) or M < 1:
        raise ConfigurationError(f"The number of prediction sweeps must be a positive integer, got {M!r}")


def _lmp_slopes(op: RlwOperator, stage_values: np.ndarray) -> np.ndarray:
    return np.stack([op.D_inv_G(u)(u) for u in stage_values])


def _lep_slopes(op: RlwOperator, stage_u: np.ndarray, stage_q: np.ndarray) -> np.ndarray:
    grid = op.grid
    return np.stack([op.S(u + q / 6.0 + grid.multiply(u, u) / 3.0) for u, q in zip(stage_u, stage_q)])


def predict_sweeps_lmp(
    u_n: Field, tab: ButcherTableau, tau: float, M: int, p: RlwParams, k0: str = "state"
) -> List[Field]:
    """
    M explicit sweeps k_i^{m+1} = D^{-1} G(u_i^m) u_i^m with u_i^m = u^n + tau sum_j a_ij k_j^m.

    :returns: the predicted stage values u_i^{n,M}, recomputed from the last slopes
    """
    _check_sweeps(M)
    op = rlw_operator(u_n.grid, p)

    slopes = _initial_slopes(u_n, tab.s, k0)
    for sweep in range(1, M + 1):
        slopes = _lmp_slopes(op, u_n.values + _combine(tab, tau, slopes))
        _check_finite(slopes, "the LMP prediction", sweep)

    return [u_n.like(u) for u in u_n.values + _combine(tab, tau, slopes)]


def predict_sweeps_lep(
    u_n: Field, q_n: Field, tab: ButcherTableau, tau: float, M: int, p: RlwParams, k0: str = "state"
) -> List[Field]:
    """
    M explicit sweeps of the EQ stage equations:
    k_i^{m+1} = S(u_i^m + q_i^m/6 + (u_i^m)^2/3), l_i^m = 2 u_i^m k_i^m.
    """
    _check_sweeps(M)
    check_same_grid(u_n, q_n)
    op = rlw_operator(u_n.grid, p)
    grid = u_n.grid

    slopes = _initial_slopes(u_n, tab.s, k0)
    for sweep in range(1, M + 1):
        stage_u = u_n.values + _combine(tab, tau, slopes)
        aux = 2.0 * np.stack([grid.multiply(u, k) for u, k in zip(stage_u, slopes)])
        slopes = _lep_slopes(op, stage_u, q_n.values + _combine(tab, tau, aux))
        _check_finite(slopes, "the LEP prediction", sweep)

    return [u_n.like(u) for u in u_n.values + _combine(tab, tau, slopes)]


def solve_nonlinear_stages(
    u_n: Field,
    tab: ButcherTableau,
    tau: float,
    p: RlwParams,
    q_n: Optional[Field] = None,
    tol: float = STARTUP_TOL,
    max_sweeps: int = STARTUP_MAX_SWEEPS,
) -> StageSet:
    """
    Stage values of the fully nonlinear collocation method by fixed-point iteration.

    Without ``q_n`` the momentum form D u_t = G(u) u is integrated, with ``q_n`` the EQ system
    u_t = S(u + q/6 + u^2/3), q_t = 2 u u_t. Iterates until the relative max-norm change of the slopes
    drops below ``tol``.

    :raises StartupFailure: if the iteration stalls above the tolerance or runs out of sweeps
    """
    if not (tau > 0 and math.isfinite(tau)):
        raise ConfigurationError(f"Time step must be positive, got {tau}")

    grid = u_n.grid
    op = rlw_operator(grid, p)
    eq_system = q_n is not None
    if eq_system:
        check_same_grid(u_n, q_n)

    def sweep(slopes):
        stage_u = u_n.values + _combine(tab, tau, slopes)
        if not eq_system:
            return _lmp_slopes(op, stage_u), stage_u, None, None
        aux = 2.0 * np.stack([grid.multiply(u, k) for u, k in zip(stage_u, slopes)])
        stage_q = q_n.values + _combine(tab, tau, aux)
        return _lep_slopes(op, stage_u, stage_q), stage_u, aux, stage_q

    slopes = np.zeros((tab.s,) + grid.shape)
    slopes, *_ = sweep(slopes)

    best, since_best, change = math.inf, 0, math.inf
    for iteration in range(1, max_sweeps + 1):
        updated, *_ = sweep(slopes)
        _check_finite(updated, "the nonlinear stage iteration", iteration)

        scale = float(np.max(np.abs(updated)))
        change = float(np.max(np.abs(updated - slopes))) / scale if scale > 0 else 0.0
        slopes = updated

        if change <= tol:
            break

        if change < best:
            best, since_best = change, 0
        else:
            since_best += 1

        if since_best >= STALL_SWEEPS:
            if best <= RESIDUAL_SLACK * tol:
                LOGGER.warning("nonlinear stage iteration stalled at %.3e (tolerance %.1e), accepted", best, tol)
                break
            raise StartupFailure(
                f"Nonlinear stage iteration stalled at a relative change of {best:.3e} (tolerance {tol:.1e})",
                residual=best,
                iterations=iteration,
            )
    else:
        raise StartupFailure(
            f"Nonlinear stage iteration did not converge in {max_sweeps} sweeps (last change {change:.3e})",
            residual=change,
            iterations=max_sweeps,
        )

    LOGGER.debug("nonlinear stage iteration: %d sweeps, relative change %.3e", iteration, change)

    # stage quantities consistent with the final slopes
    stage_u = u_n.values + _combine(tab, tau, slopes)
    if not eq_system:
        return StageSet(grid=grid, k=slopes, u=stage_u, residual=change, iterations=iteration)

    aux = 2.0 * np.stack([grid.multiply(u, k) for u, k in zip(stage_u, slopes)])
    return StageSet(
        grid=grid,
        k=slopes,
        u=stage_u,
        l=aux,
        q=q_n.values + _combine(tab, tau, aux),
        residual=change,
        iterations=iteration,
    )
