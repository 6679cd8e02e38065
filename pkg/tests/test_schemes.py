import math

import numpy as np
import pytest

from rlw_spectral.diagnostics import convergence_rates, error_norms, hamiltonian, mass, momentum, quad_energy
from rlw_spectral.exceptions import ConfigurationError, SolverFailure
from rlw_spectral.integrators.schemes import (
    SCHEMES,
    BoundednessObserver,
    InvariantObserver,
    Observer,
    count_steps,
    extrap_coeffs,
    make_state,
    run,
    startup_nonlinear_gauss,
    step,
)
from rlw_spectral.integrators.stages import SolveConfig
from rlw_spectral.integrators.tableau import ButcherTableau, gauss_tableau
from rlw_spectral.problems import SolitonParams, maxwellian_ic, soliton_1d, trig_ic_2d, two_soliton_ic
from rlw_spectral.spectral.grid import Field, make_grid
from rlw_spectral.spectral.operators import RlwParams

ALL = sorted(SCHEMES)
LMP = [tag for tag in ALL if SCHEMES[tag].kind == "lmp"]
LEP = [tag for tag in ALL if SCHEMES[tag].kind == "lep"]

R15 = math.sqrt(15)


@pytest.fixture
def soliton():
    grid = make_grid((-40.0, 40.0), 64)
    params = RlwParams()
    return soliton_1d(grid, params, SolitonParams(c=1.0)), params


def test_extrap_coeffs_gauss3():
    coeffs = extrap_coeffs(gauss_tableau(3))
    expected = [
        [6 * R15 - 26, -5 * R15 / 3 + 11, 16 * R15 / 3 - 24, -29 * R15 / 3 + 40],
        [-17, 5 * R15 / 2 + 35 / 2, -17, -5 * R15 / 2 + 35 / 2],
        [-6 * R15 - 26, 29 * R15 / 3 + 40, -16 * R15 / 3 - 24, 5 * R15 / 3 + 11],
    ]

    assert coeffs.weights.shape == (3, 4)
    np.testing.assert_allclose(coeffs.weights, expected, rtol=0, atol=1e-13)
    assert coeffs.weights[0, 0] == pytest.approx(-2.762, abs=1e-3)
    assert coeffs.row_sum_defect <= 1e-13


@pytest.mark.parametrize("s", [1, 2])
def test_extrap_coeffs_rows_sum_to_one(s):
    assert extrap_coeffs(gauss_tableau(s)).row_sum_defect <= 1e-13


def test_extrap_coeffs_coincident_nodes():
    # c = 0 puts a stage node on top of t_{n-1}
    tab = ButcherTableau(a=[[0.0]], b=[1.0], c=[0.0], order=1, name="euler")
    with pytest.raises(ConfigurationError):
        extrap_coeffs(tab)


def test_extrap_reproduces_cubics():
    """the cubic interpolant through the previous step is exact on polynomials of degree three"""
    tab = gauss_tableau(3)
    coeffs = extrap_coeffs(tab)

    def poly(t):
        return np.array([1.0 - 2.0 * t + 0.5 * t**3])

    prev_u = poly(-1.0)
    prev_stages = np.stack([poly(c - 1.0) for c in tab.c])
    extrapolated = coeffs.apply(prev_u, prev_stages)

    np.testing.assert_allclose(extrapolated.ravel(), [poly(c)[0] for c in tab.c], atol=1e-12)


def test_make_state(soliton):
    u0, params = soliton

    state = make_state("lep-pc6", u0, 0.1, params)
    np.testing.assert_array_equal(state.q.values, u0.values**2)
    assert state.M == 5 and state.tableau.s == 3 and state.t == 0.0

    state = make_state("lmp-pc4", u0, 0.1, params)
    assert state.q is None and state.M == 3 and state.tableau.s == 2

    state = make_state("lmps4", u0, 0.1, params, M=7)
    assert state.M is None and state.extrap is not None and state.prev is None

    assert make_state("lmp-pc6", u0, 0.1, params, M=2).M == 2


@pytest.mark.parametrize(
    "tag,tau,kwargs",
    [
        ("nope", 0.1, {}),
        ("lmp-pc4", 0.0, {}),
        ("lmp-pc4", -0.1, {}),
        ("lmp-pc4", math.inf, {}),
        ("lmp-pc4", 0.1, {"M": 0}),
        ("lmp-pc4", 0.1, {"M": 1.5}),
    ],
)
def test_make_state_invalid(soliton, tag, tau, kwargs):
    u0, params = soliton
    with pytest.raises(ConfigurationError):
        make_state(tag, u0, tau, params, **kwargs)


def test_make_state_dimension_mismatch(soliton):
    u0, _ = soliton
    with pytest.raises(ConfigurationError):
        make_state("lep-pc4", u0, 0.1, RlwParams(beta=1.0, theta=1.0))


@pytest.mark.parametrize("tag", ALL)
@pytest.mark.parametrize("value", [0.0, 1.25])
def test_fixed_points(tag, value):
    grid = make_grid((0.0, 10.0), 16)
    u0 = Field.constant(grid, value)
    summary = run(make_state(tag, u0, 0.1, RlwParams()), 0.4)

    assert summary.steps == 4
    np.testing.assert_allclose(summary.state.u.values, value, atol=1e-13)
    if summary.state.q is not None:
        np.testing.assert_allclose(summary.state.q.values, value**2, atol=1e-12)


def test_startup_zero():
    grid = make_grid((0.0, 10.0), 16)
    u1, stages, q1 = startup_nonlinear_gauss(make_state("leps4", Field.zeros(grid), 0.1, RlwParams()))

    assert not u1.values.any() and not q1.values.any()
    assert len(stages) == 3 and all(not f.values.any() for f in stages)


def test_startup_conserves_momentum(soliton):
    u0, params = soliton
    state = make_state("lmps4", u0, 0.1, params)
    u1, stages, q1 = startup_nonlinear_gauss(state)

    assert q1 is None and len(stages) == 3
    assert abs(momentum(u1, params) - momentum(u0, params)) <= 1e-12 * momentum(u0, params)


def test_extrapolation_takes_startup_first(soliton):
    u0, params = soliton
    state = step(make_state("leps4", u0, 0.1, params))

    assert state.step_index == 1 and state.prev is not None
    np.testing.assert_array_equal(state.prev.u, u0.values)
    assert state.prev.stages.shape == (3, 64)

    state = step(state)
    assert state.step_index == 2
    assert state.t == pytest.approx(0.2, abs=1e-15)


@pytest.mark.parametrize("tag", LMP)
def test_lmp_conserves_momentum(soliton, tag):
    u0, params = soliton
    summary = run(make_state(tag, u0, 0.1, params), 2.0, invariant_stride=1)

    initial = summary.records[0].momentum
    for before, after in zip(summary.records, summary.records[1:]):
        assert abs(after.momentum - before.momentum) <= 1e-12 * initial
    assert len(summary.records) == 21


@pytest.mark.parametrize("tag", LEP)
def test_lep_conserves_mass_and_energy(soliton, tag):
    u0, params = soliton
    summary = run(make_state(tag, u0, 0.1, params), 2.0, invariant_stride=1)

    first = summary.records[0]
    assert first.quad_energy == pytest.approx(first.hamiltonian, rel=1e-14)
    for record in summary.records[1:]:
        assert abs(record.quad_energy - first.quad_energy) <= 1e-11 * abs(first.quad_energy)
        assert abs(record.mass - first.mass) <= 1e-12 * first.mass


def test_soliton_moves_correctly():
    grid = make_grid((-40.0, 40.0), 256)
    params = RlwParams()
    sp = SolitonParams(c=1.0)
    u0 = soliton_1d(grid, params, sp)
    summary = run(make_state("lep-pc6", u0, 0.1, params), 1.0)

    # the crest travels with speed v = 2
    e2, _ = error_norms(summary.state.u, soliton_1d(grid, params, sp, 1.0))
    assert e2 < 1e-4
    assert error_norms(summary.state.u, u0)[0] > 1.0


def test_count_steps(soliton):
    u0, params = soliton
    state = make_state("lmp-pc4", u0, 0.1, params)

    assert count_steps(state, 0.0) == 0
    assert count_steps(state, 30.0) == 300
    assert count_steps(state, 0.3) == 3

    for T in (0.15, -0.1):
        with pytest.raises(ConfigurationError):
            count_steps(state, T)


def test_run_no_steps(soliton):
    u0, params = soliton
    state = make_state("lep-pc4", u0, 0.1, params)
    summary = run(state, 0.0, invariant_stride=1)

    assert summary.steps == 0 and summary.state is state
    assert len(summary.records) == 1 and summary.records[0].t == 0.0


class CountingObserver(Observer):
    def __init__(self, stride):
        super().__init__(stride)
        self.seen = []

    def __call__(self, state):
        self.seen.append(state.step_index)


def test_observer_strides(soliton):
    u0, params = soliton
    counter = CountingObserver(3)
    invariants = InvariantObserver(5)
    bounded = BoundednessObserver()

    run(make_state("lmp-pc4", u0, 0.1, params), 1.0, observers=[counter, invariants, bounded])

    assert counter.seen == [0, 3, 6, 9, 10]
    assert [round(r.t, 12) for r in invariants.records] == [0.0, 0.5, 1.0]
    assert bounded.bounded and bounded.peak == pytest.approx(3.0, rel=1e-2)

    with pytest.raises(ConfigurationError):
        CountingObserver(0)


def test_run_failure_reports_time(soliton):
    u0, params = soliton
    cfg = SolveConfig(max_krylov_iters=1, restart=1)
    state = make_state("lmp-pc4", u0, 0.1, params, solve_cfg=cfg)

    with pytest.raises(SolverFailure) as excinfo:
        run(state, 1.0)

    assert excinfo.value.t_reached == 0.0


def test_two_soliton_label_swap():
    grid = make_grid((-60.0, 300.0), 256)
    params = RlwParams()
    first = two_soliton_ic(grid, params, (1.0, -20.0), (0.5, 15.0))
    swapped = two_soliton_ic(grid, params, (0.5, 15.0), (1.0, -20.0))

    a = run(make_state("lmp-pc4", first, 0.1, params), 0.5).state.u
    b = run(make_state("lmp-pc4", swapped, 0.1, params), 0.5).state.u
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_hamiltonian_not_conserved_by_lep(soliton):
    """the quadratized energy is conserved exactly, the original cubic energy only approximately"""
    u0, params = soliton
    summary = run(make_state("lep-pc4", u0, 0.2, params), 2.0)

    h0, h1 = hamiltonian(u0), hamiltonian(summary.state.u)
    e0 = quad_energy(u0, u0.like(u0.values**2))
    e1 = quad_energy(summary.state.u, summary.state.q)

    assert abs(e1 - e0) <= 1e-11 * abs(e0)
    assert abs(h1 - h0) > abs(e1 - e0)


@pytest.fixture
def trig2d():
    grid = make_grid([(0.0, 2.0 * math.pi), (0.0, 2.0 * math.pi)], (16, 16))
    return trig_ic_2d(grid), RlwParams(alpha=1.0, beta=1.0, mu=1.0, theta=1.0)


@pytest.mark.parametrize("tag", ALL)
def test_2d_invariants(trig2d, tag):
    u0, params = trig2d
    summary = run(make_state(tag, u0, 0.1, params), 0.4, invariant_stride=1)

    assert summary.steps == 4 and summary.state.u.values.shape == (16, 16)
    first = summary.records[0]
    for record in summary.records[1:]:
        if SCHEMES[tag].kind == "lmp":
            assert abs(record.momentum - first.momentum) <= 1e-12 * first.momentum
        else:
            assert abs(record.mass - first.mass) <= 1e-12 * first.mass
            assert abs(record.quad_energy - first.quad_energy) <= 1e-11 * abs(first.quad_energy)


@pytest.mark.parametrize("tag", ALL)
def test_2d_fixed_points(trig2d, tag):
    u0, params = trig2d
    summary = run(make_state(tag, Field.constant(u0.grid, -0.75), 0.2, params), 0.6)
    np.testing.assert_allclose(summary.state.u.values, -0.75, atol=1e-13)


@pytest.mark.parametrize("tag", ["lmp-pc6", "lep-pc6"])
def test_maxwellian_invariants_flat(tag):
    grid = make_grid([(-10.0, 10.0), (-10.0, 10.0)], (48, 48))
    params = RlwParams(alpha=1.0, beta=1.0, mu=1.0, theta=1.0)
    u0 = maxwellian_ic(grid, 0.0, 0.0)
    records = run(make_state(tag, u0, 0.1, params), 1.0, invariant_stride=2).records

    assert len(records) == 6
    first = records[0]
    assert first.mass == pytest.approx(math.pi, rel=1e-12)
    if tag == "lep-pc6":
        for record in records[1:]:
            assert abs(record.quad_energy - first.quad_energy) <= 1e-12 * abs(first.quad_energy)
            assert abs(record.mass - first.mass) <= 1e-12 * first.mass
    else:
        for record in records[1:]:
            assert abs(record.momentum - first.momentum) <= 1e-12 * first.momentum


def test_startup_local_order():
    """one nonlinear Gauss step with three stages has a local error of order seven"""
    grid = make_grid((-40.0, 40.0), 256)
    params = RlwParams()
    sp = SolitonParams(c=1.0)
    u0 = soliton_1d(grid, params, sp)

    errors = []
    for tau in (0.4, 0.2, 0.1):
        u1, _, _ = startup_nonlinear_gauss(make_state("lmps4", u0, tau, params))
        errors.append(error_norms(u1, soliton_1d(grid, params, sp, tau))[0])

    for rate in convergence_rates(errors):
        assert rate == pytest.approx(7.0, abs=0.6)


# acceptance-scale runs


def _soliton_errors(tag, taus, n=2048, bounds=(-100.0, 100.0), c=3.0, T=1.0):
    grid = make_grid(bounds, n)
    params = RlwParams()
    sp = SolitonParams(c=c)
    u0 = soliton_1d(grid, params, sp)
    exact = soliton_1d(grid, params, sp, T)
    return [error_norms(run(make_state(tag, u0, tau, params), T).state.u, exact)[0] for tau in taus]


@pytest.mark.slow
@pytest.mark.parametrize("tag", ["lmps4", "leps4", "lmp-pc4", "lep-pc4"])
def test_fourth_order_in_time(tag):
    errors = _soliton_errors(tag, [1 / 100, 1 / 200, 1 / 400, 1 / 800])
    for rate in convergence_rates(errors):
        assert rate == pytest.approx(4.0, abs=0.25)


@pytest.mark.slow
@pytest.mark.parametrize("tag", ["lmp-pc6", "lep-pc6"])
def test_sixth_order_in_time(tag):
    errors = _soliton_errors(tag, [1 / 10, 1 / 20, 1 / 40, 1 / 80])
    for rate in convergence_rates(errors):
        assert rate == pytest.approx(6.0, abs=0.35)

    if tag == "lep-pc6":
        assert 3e-12 <= errors[-1] <= 3e-11


@pytest.mark.slow
@pytest.mark.parametrize("tag", ALL)
def test_two_soliton_conservation(tag):
    grid = make_grid((-60.0, 300.0), 1024)
    params = RlwParams()
    u0 = two_soliton_ic(grid, params, (1.0, -20.0), (0.5, 15.0))
    records = run(make_state(tag, u0, 0.1, params), 30.0, invariant_stride=1).records

    first = records[0]
    mass_drift = max(abs(r.mass - first.mass) for r in records)
    h_drift = max(abs(r.hamiltonian - first.hamiltonian) for r in records)

    if SCHEMES[tag].kind == "lmp":
        assert max(abs(r.momentum - first.momentum) for r in records) <= 1e-11 * first.momentum
        assert mass_drift > 1e-8
    else:
        assert mass_drift <= 1e-11
        assert max(abs(r.quad_energy - first.quad_energy) for r in records) <= 1e-11 * abs(first.quad_energy)
        assert 1e-12 < h_drift < 1e-2 * abs(first.hamiltonian)


@pytest.mark.slow
def test_lmp_stability_norm_large_step():
    from rlw_spectral.diagnostics import stability_norm

    grid = make_grid((-100.0, 100.0), 512)
    params = RlwParams()
    u0 = soliton_1d(grid, params, SolitonParams(c=1.0))
    summary = run(make_state("lmp-pc6", u0, 0.35, params), 7.0)

    assert stability_norm(summary.state.u, params) == pytest.approx(stability_norm(u0, params), rel=1e-11)
    assert np.isfinite(mass(summary.state.u))


@pytest.mark.slow
def test_lmp_mass_drift_decreases_with_order():
    grid = make_grid((-60.0, 300.0), 1024)
    params = RlwParams()
    u0 = two_soliton_ic(grid, params, (1.0, -20.0), (0.5, 15.0))

    drifts = {}
    for tag in LMP:
        records = run(make_state(tag, u0, 0.1, params), 30.0, invariant_stride=10).records
        drifts[tag] = max(abs(r.mass - records[0].mass) for r in records)

    assert drifts["lmp-pc6"] < 1e-2 * min(drifts["lmps4"], drifts["lmp-pc4"])


@pytest.mark.slow
def test_2d_temporal_orders():
    grid = make_grid([(0.0, 2.0 * math.pi), (0.0, 2.0 * math.pi)], (64, 64))
    params = RlwParams(alpha=1.0, beta=1.0, mu=1.0, theta=1.0)
    u0 = trig_ic_2d(grid)
    reference = run(make_state("lep-pc6", u0, 1 / 320, params), 10.0).state.u

    for tag in ALL:
        order = SCHEMES[tag].order
        taus = [1 / 20, 1 / 40, 1 / 80] if order == 4 else [1 / 10, 1 / 20, 1 / 40]
        errors = [error_norms(run(make_state(tag, u0, tau, params), 10.0).state.u, reference)[0] for tau in taus]

        for rate in convergence_rates(errors):
            assert rate == pytest.approx(order, abs=0.3 if order == 4 else 0.4), tag
