# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Linearly implicit conservative time-stepping schemes for the RLW equation

Every scheme freezes the nonlinearity at stage approximations u*_i and solves one linear stage system per step:

* extrapolation (``lmps4``, ``leps4``): u*_i is the Lagrange extrapolation of the previous step's solution and
  stage values; the first step is taken with the fully nonlinear Gauss method.
* prediction-correction (``lmp-pc4``, ``lmp-pc6``, ``lep-pc4``, ``lep-pc6``): u*_i comes from M explicit
  fixed-point sweeps of the current step.

The ``lmp`` schemes discretize the momentum form D u_t = G(u) u and preserve I = (u, Du)/2, the ``lep`` schemes
discretize the energy-quadratized system in (u, q) and preserve mass and E = (u^2/2 + uq/6, 1).
"""

import dataclasses
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from ..diagnostics import InvariantRecord, invariant_record
from ..exceptions import ConfigurationError, DivergenceError, SolverFailure
from ..spectral.grid import Field, PeriodicGrid
from ..spectral.operators import RlwParams
from .stages import (
    SolveConfig,
    StageSet,
    predict_sweeps_lep,
    predict_sweeps_lmp,
    solve_lep_stages,
    solve_lmp_stages,
    solve_nonlinear_stages,
)
from .tableau import WORKING_DPS, ButcherTableau, gauss_tableau

LOGGER = logging.getLogger(__name__)

# relative slack when checking that the time step tiles the integration span
TILING_TOL = 1e-9

# a state is flagged as blown up once max|u| exceeds this multiple of its initial maximum
BLOWUP_FACTOR = 10.0

EXTRAPOLATION = "extrapolation"
PREDICTION_CORRECTION = "prediction-correction"


@dataclasses.dataclass(frozen=True)
class SchemeSpec:
    tag: str
    kind: str
    strategy: str
    stages: int
    order: int
    default_M: Optional[int] = None
    description: str = ""

    @property
    def is_eq(self) -> bool:
        """whether the scheme carries the auxiliary variable q = u^2"""
        return self.kind == "lep"

    @property
    def is_extrapolated(self) -> bool:
        return self.strategy == EXTRAPOLATION


SCHEMES: Dict[str, SchemeSpec] = {
    spec.tag: spec
    for spec in (
        SchemeSpec("lmps4", "lmp", EXTRAPOLATION, 3, 4, None, "momentum-preserving, 3-stage Gauss, extrapolated"),
        SchemeSpec("lmp-pc4", "lmp", PREDICTION_CORRECTION, 2, 4, 3, "momentum-preserving prediction-correction"),
        SchemeSpec("lmp-pc6", "lmp", PREDICTION_CORRECTION, 3, 6, 5, "momentum-preserving prediction-correction"),
        SchemeSpec("leps4", "lep", EXTRAPOLATION, 3, 4, None, "energy-preserving, 3-stage Gauss, extrapolated"),
        SchemeSpec("lep-pc4", "lep", PREDICTION_CORRECTION, 2, 4, 3, "energy-preserving prediction-correction"),
        SchemeSpec("lep-pc6", "lep", PREDICTION_CORRECTION, 3, 6, 5, "energy-preserving prediction-correction"),
    )
}


def get_scheme(tag: str) -> SchemeSpec:
    try:
        return SCHEMES[tag]
    except KeyError:
        raise ConfigurationError(f"Unknown scheme '{tag}', expected one of {', '.join(SCHEMES)}") from None


@dataclasses.dataclass(frozen=True, eq=False)
class ExtrapCoeffs:
    """
    Lagrange extrapolation weights, row i maps (u^{n-1}, u_1^{n-1}, .., u_s^{n-1}) onto u_i^{n,*}.

    :param exact: the weights as an ``mpmath`` matrix when computed from exact abscissae
    """

    weights: np.ndarray
    exact: Optional[mpmath.matrix] = None

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def s(self) -> int:
        return self.weights.shape[0]

    @property
    def row_sum_defect(self) -> float:
        return float(np.max(np.abs(self.weights.sum(axis=1) - 1.0)))

    def apply(self, u_prev: np.ndarray, stages_prev: np.ndarray) -> np.ndarray:
        """extrapolated stage approximations, stacked (s, *grid.shape)"""
        return np.tensordot(self.weights, np.concatenate([u_prev[None, ...], stages_prev]), axes=1)


def extrap_coeffs(tab: ButcherTableau) -> ExtrapCoeffs:
    """
    Weights of the degree-s interpolant through t_{n-1}, t_{n-1} + c_j tau evaluated at t_n + c_i tau.

    In units of tau relative to t_n the nodes are -1, -1 + c_1, .., -1 + c_s and the targets c_1, .., c_s.

    :raises ConfigurationError: if two interpolation nodes coincide
    """
    with mpmath.workdps(WORKING_DPS):
        if tab.exact is not None:
            c = [tab.exact[2][i] for i in range(tab.s)]
        else:
            c = [mpmath.mpf(float(ci)) for ci in tab.c]

        nodes = [mpmath.mpf(-1)] + [ci - 1 for ci in c]

        for i, xi in enumerate(nodes):
            for xj in nodes[i + 1 :]:
                if abs(xi - xj) < mpmath.mpf(10) ** -14:
                    raise ConfigurationError(f"Tableau {tab.name}: coincident extrapolation nodes {float(xi)}")

        weights = mpmath.matrix(tab.s, tab.s + 1)
        for i, target in enumerate(c):
            for k, xk in enumerate(nodes):
                weight = mpmath.mpf(1)
                for m, xm in enumerate(nodes):
                    if m != k:
                        weight *= (target - xm) / (xk - xm)
                weights[i, k] = weight

        return ExtrapCoeffs(weights=np.array(weights.tolist(), dtype=float), exact=weights)


@dataclasses.dataclass(frozen=True)
class PreviousStep:
    """u^{n-1} and the stage values u_i^{n-1} it was advanced with"""

    u: np.ndarray
    stages: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class SchemeState:
    """
    The data one scheme needs to advance: (u^n, q^n) at t_n plus the step configuration.

    States are immutable, the step functions return new instances. Time is kept as ``t0 + step_index * tau``
    so that it does not accumulate rounding.
    """

    scheme: SchemeSpec
    u: Field
    tau: float
    params: RlwParams
    tableau: ButcherTableau
    solve_cfg: SolveConfig = dataclasses.field(default_factory=SolveConfig)
    q: Optional[Field] = None
    prev: Optional[PreviousStep] = None
    M: Optional[int] = None
    extrap: Optional[ExtrapCoeffs] = None
    t0: float = 0.0
    step_index: int = 0

    @property
    def t(self) -> float:
        return self.t0 + self.step_index * self.tau

    @property
    def grid(self) -> PeriodicGrid:
        return self.u.grid


def make_state(
    tag: str,
    u0: Field,
    tau: float,
    params: RlwParams,
    M: Optional[int] = None,
    solve_cfg: Optional[SolveConfig] = None,
    t0: float = 0.0,
) -> SchemeState:
    """
    Set up a scheme at its initial condition; EQ schemes get the consistent auxiliary variable q0 = u0^2.

    :param M: number of prediction sweeps, defaults to 3 for two stages and 5 for three stages; ignored by the
        extrapolation schemes
    """
    scheme = get_scheme(tag)
    params.check_grid(u0.grid)

    if not (isinstance(tau, (int, float)) and math.isfinite(tau) and tau > 0):
        raise ConfigurationError(f"Time step must be a positive number, got {tau!r}")

    if not math.isfinite(t0):
        raise ConfigurationError(f"Initial time must be finite, got {t0!r}")

    tableau = gauss_tableau(scheme.stages)

    extrap = None
    if scheme.is_extrapolated:
        if tableau.s != 3:
            raise ConfigurationError(f"Scheme {tag}: extrapolation is only available with the 3-stage Gauss method")
        if M is not None:
            LOGGER.debug("scheme %s does not use prediction sweeps, ignoring M=%s", tag, M)
        M = None
        extrap = extrap_coeffs(tableau)
    else:
        M = scheme.default_M if M is None else M
        if isinstance(M, bool) or not isinstance(M, (int, np.integer)) or M < 1:
            raise ConfigurationError(f"Scheme {tag}: number of prediction sweeps must be a positive integer, got {M!r}")
        M = int(M)

    q0 = u0.like(u0.grid.multiply(u0.values, u0.values)) if scheme.is_eq else None

    return SchemeState(
        scheme=scheme,
        u=u0,
        tau=float(tau),
        params=params,
        tableau=tableau,
        solve_cfg=solve_cfg or SolveConfig(),
        q=q0,
        M=M,
        extrap=extrap,
        t0=float(t0),
    )


def _finite_field(template: Field, values: np.ndarray, state: SchemeState, what: str) -> Field:
    if not np.isfinite(values).all():
        raise DivergenceError(
            f"{state.scheme.tag}: non-finite {what} at t={state.t + state.tau:.6g}", t_reached=state.t
        )
    return template.like(values)


def _advance(state: SchemeState, stages: StageSet, store_stages: bool) -> SchemeState:
    u_next, q_next = stages.update(
        state.tableau, state.tau, state.u.values, None if state.q is None else state.q.values
    )

    return dataclasses.replace(
        state,
        u=_finite_field(state.u, u_next, state, "solution"),
        q=None if q_next is None else _finite_field(state.q, q_next, state, "auxiliary variable"),
        prev=PreviousStep(u=state.u.values, stages=stages.u) if store_stages else None,
        step_index=state.step_index + 1,
    )


def _frozen_from_extrapolation(state: SchemeState) -> List[Field]:
    if state.prev is None:
        raise ConfigurationError(f"{state.scheme.tag}: no previous step to extrapolate from, run the startup first")
    return [state.u.like(values) for values in state.extrap.apply(state.prev.u, state.prev.stages)]


def startup_nonlinear_gauss(state: SchemeState) -> Tuple[Field, List[Field], Optional[Field]]:
    """
    One step of the fully nonlinear Gauss method on the momentum form (or on the EQ system if the state carries
    q), iterated to a relative increment of 1e-14.

    :returns: u^1, the stage values u_i of this step and q^1 (``None`` for the momentum schemes)
    :raises StartupFailure: if the fixed-point iteration stalls above tolerance
    """
    LOGGER.info("%s: nonlinear Gauss startup step at t=%g", state.scheme.tag, state.t)

    stages = solve_nonlinear_stages(state.u, state.tableau, state.tau, state.params, q_n=state.q)
    u_next, q_next = stages.update(
        state.tableau, state.tau, state.u.values, None if state.q is None else state.q.values
    )

    u1 = _finite_field(state.u, u_next, state, "startup solution")
    q1 = None if q_next is None else _finite_field(state.q, q_next, state, "startup auxiliary variable")
    return u1, stages.stage_values(), q1


def _startup_step(state: SchemeState) -> SchemeState:
    u1, stage_values, q1 = startup_nonlinear_gauss(state)
    return dataclasses.replace(
        state,
        u=u1,
        q=q1,
        prev=PreviousStep(u=state.u.values, stages=np.stack([f.values for f in stage_values])),
        step_index=state.step_index + 1,
    )


def step_lmps(state: SchemeState) -> SchemeState:
    """momentum-preserving step with extrapolated stage approximations"""
    ustar = _frozen_from_extrapolation(state)
    stages = solve_lmp_stages(state.u, ustar, state.tableau, state.tau, state.params, state.solve_cfg)
    return _advance(state, stages, store_stages=True)


def step_lmp_pc(state: SchemeState) -> SchemeState:
    """momentum-preserving prediction-correction step"""
    ustar = predict_sweeps_lmp(state.u, state.tableau, state.tau, state.M, state.params, k0=state.solve_cfg.k0)
    stages = solve_lmp_stages(state.u, ustar, state.tableau, state.tau, state.params, state.solve_cfg)
    return _advance(state, stages, store_stages=False)


def step_leps(state: SchemeState) -> SchemeState:
    """energy-preserving step with extrapolated stage approximations"""
    ustar = _frozen_from_extrapolation(state)
    stages = solve_lep_stages(state.u, state.q, ustar, state.tableau, state.tau, state.params, state.solve_cfg)
    return _advance(state, stages, store_stages=True)


def step_lep_pc(state: SchemeState) -> SchemeState:
    """energy-preserving prediction-correction step"""
    ustar = predict_sweeps_lep(
        state.u, state.q, state.tableau, state.tau, state.M, state.params, k0=state.solve_cfg.k0
    )
    stages = solve_lep_stages(state.u, state.q, ustar, state.tableau, state.tau, state.params, state.solve_cfg)
    return _advance(state, stages, store_stages=False)


STEPPERS = {
    ("lmp", EXTRAPOLATION): step_lmps,
    ("lmp", PREDICTION_CORRECTION): step_lmp_pc,
    ("lep", EXTRAPOLATION): step_leps,
    ("lep", PREDICTION_CORRECTION): step_lep_pc,
}


def step(state: SchemeState) -> SchemeState:
    """advance by one time step, taking the nonlinear startup step first where extrapolation needs it"""
    if state.scheme.is_extrapolated and state.prev is None:
        return _startup_step(state)
    return STEPPERS[state.scheme.kind, state.scheme.strategy](state)


class Observer:
    """
    Callback invoked by :py:func:`run` on the initial state, every ``stride`` steps and on the final state.
    """

    def __init__(self, stride: int = 1):
        if isinstance(stride, bool) or not isinstance(stride, (int, np.integer)) or stride < 1:
            raise ConfigurationError(f"Observer stride must be a positive integer, got {stride!r}")
        self.stride = int(stride)

    def __call__(self, state: SchemeState):
        raise NotImplementedError


class InvariantObserver(Observer):
    """collects the invariant record of every observed state"""

    def __init__(self, stride: int = 1):
        super().__init__(stride)
        self.records: List[InvariantRecord] = []

    def __call__(self, state: SchemeState):
        self.records.append(invariant_record(state))


class BoundednessObserver(Observer):
    """tracks max|u| along the trajectory to flag blow-up"""

    def __init__(self, stride: int = 1):
        super().__init__(stride)
        self.initial_max: Optional[float] = None
        self.peak = 0.0

    def __call__(self, state: SchemeState):
        current = float(np.max(np.abs(state.u.values)))
        if self.initial_max is None:
            self.initial_max = current
        self.peak = max(self.peak, current)

    @property
    def bounded(self) -> bool:
        if self.initial_max is None:
            return True
        return self.peak <= BLOWUP_FACTOR * max(self.initial_max, np.finfo(float).tiny)


@dataclasses.dataclass(frozen=True)
class RunSummary:
    state: SchemeState
    steps: int
    records: List[InvariantRecord]


def count_steps(state: SchemeState, T: float) -> int:
    """number of steps from state.t to T, requiring the time step to tile the span"""
    span = T - state.t
    steps = round(span / state.tau)

    if steps < 0 or abs(steps * state.tau - span) > TILING_TOL * max(abs(span), state.tau):
        raise ConfigurationError(
            f"Time step {state.tau!r} does not tile the interval [{state.t!r}, {T!r}] into whole steps"
        )

    return int(steps)


def run(
    state: SchemeState,
    T: float,
    observers: Sequence[Observer] = (),
    invariant_stride: Optional[int] = None,
) -> RunSummary:
    """
    Advance ``state`` to time T.

    :param observers: callbacks, each invoked on the initial state, every ``stride`` steps and on the final state
    :param invariant_stride: if given, invariant records are collected with this stride and returned
    :raises SolverFailure: re-raised from the failing step with ``t_reached`` set
    """
    observers = list(observers)
    collector = None
    if invariant_stride is not None:
        collector = InvariantObserver(invariant_stride)
        observers.append(collector)

    steps = count_steps(state, T)
    LOGGER.info("%s: %d steps of tau=%g from t=%g to T=%g", state.scheme.tag, steps, state.tau, state.t, T)

    for observer in observers:
        observer(state)

    for done in range(1, steps + 1):
        try:
            state = step(state)
        except SolverFailure as exc:
            exc.t_reached = state.t
            LOGGER.error("%s: step failed at t=%g: %s", state.scheme.tag, state.t, exc)
            raise

        for observer in observers:
            if done % observer.stride == 0 or done == steps:
                observer(state)

    return RunSummary(state=state, steps=steps, records=collector.records if collector else [])
