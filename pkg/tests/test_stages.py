import math

import numpy as np
import pytest

from rlw_spectral.exceptions import ConfigurationError, DivergenceError, SolverFailure, StartupFailure
from rlw_spectral.integrators.stages import (
    SolveConfig,
    predict_sweeps_lep,
    predict_sweeps_lmp,
    solve_lep_stages,
    solve_lmp_stages,
    solve_nonlinear_stages,
)
from rlw_spectral.integrators.tableau import gauss_tableau
from rlw_spectral.spectral.grid import Field, inner_product, make_grid
from rlw_spectral.spectral.operators import apply_D, apply_D_inv, apply_G, materialize_dense

TWO_PI = 2.0 * math.pi


@pytest.fixture
def grid16():
    return make_grid((0.0, TWO_PI), 16)


@pytest.fixture
def setup(grid16, params1d, random_field):
    tab = gauss_tableau(3)
    u_n = random_field(grid16, 1)
    ustar = [random_field(grid16, 10 + i) for i in range(tab.s)]
    return tab, u_n, ustar


def _squared(field):
    return field.like(field.values**2)


def test_solve_config_validation():
    assert SolveConfig().rel_tol == 1e-13

    for kwargs in ({"rel_tol": 0.0}, {"rel_tol": 1e-5}, {"max_krylov_iters": 0}, {"method": "newton"}, {"k0": "one"}):
        with pytest.raises(ValueError):
            SolveConfig(**kwargs)


def test_lmp_zero_state(grid16, params1d):
    tab = gauss_tableau(2)
    zero = Field.zeros(grid16)
    stages = solve_lmp_stages(zero, [zero] * tab.s, tab, 0.1, params1d)

    assert stages.iterations == 0
    assert not stages.k.any() and not stages.u.any()


def test_lmp_constant_state(grid16, params1d):
    tab = gauss_tableau(3)
    const = Field.constant(grid16, 1.5)
    stages = solve_lmp_stages(const, [const] * tab.s, tab, 0.1, params1d)

    np.testing.assert_allclose(stages.k, 0.0, atol=1e-13)
    np.testing.assert_allclose(stages.u, 1.5, atol=1e-13)


def test_lmp_dense_oracle(setup, params1d):
    tab, u_n, ustar = setup
    tau, grid = 0.3, u_n.grid
    size = grid.size

    blocks = [materialize_dense("D_inv_G", params1d, grid, ustar=w) for w in ustar]
    system = np.eye(tab.s * size)
    for i in range(tab.s):
        for j in range(tab.s):
            system[i * size : (i + 1) * size, j * size : (j + 1) * size] -= tau * tab.a[i, j] * blocks[i]
    rhs = np.concatenate([block @ u_n.values for block in blocks])

    expected = np.linalg.solve(system, rhs).reshape(tab.s, size)
    stages = solve_lmp_stages(u_n, ustar, tab, tau, params1d)

    np.testing.assert_allclose(stages.k, expected, atol=1e-10)
    np.testing.assert_allclose(stages.u, u_n.values + tau * tab.a @ stages.k, atol=1e-12)
    assert stages.residual <= 10 * SolveConfig().rel_tol


def test_lep_dense_oracle(setup, params1d, random_field):
    tab, u_n, ustar = setup
    q_n = random_field(u_n.grid, 2)
    tau, grid = 0.3, u_n.grid
    size = grid.size

    S = materialize_dense("S", params1d, grid)
    W = [np.diag(w.values) for w in ustar]
    eye = np.eye(size)

    system = np.eye(tab.s * size)
    for i in range(tab.s):
        for j in range(tab.s):
            block = tau * tab.a[i, j] * (S @ (eye + W[i] / 3) + S @ W[j] / 3)
            system[i * size : (i + 1) * size, j * size : (j + 1) * size] -= block
    rhs = np.concatenate([S @ ((eye + W[i] / 3) @ u_n.values + q_n.values / 6) for i in range(tab.s)])

    expected = np.linalg.solve(system, rhs).reshape(tab.s, size)
    stages = solve_lep_stages(u_n, q_n, ustar, tab, tau, params1d)

    np.testing.assert_allclose(stages.k, expected, atol=1e-10)
    np.testing.assert_allclose(stages.l, 2 * np.stack([w.values for w in ustar]) * stages.k, atol=1e-12)
    np.testing.assert_allclose(stages.q, q_n.values + tau * tab.a @ stages.l, atol=1e-12)


def test_lmp_momentum_identity(setup, params1d):
    tab, u_n, ustar = setup
    stages = solve_lmp_stages(u_n, ustar, tab, 0.2, params1d)

    total = 0.0
    for b, u_i, k_i in zip(tab.b, stages.stage_values(), stages.slopes()):
        total += b * inner_product(u_i, apply_D(k_i, params1d))

    assert abs(total) <= 1e-11 * max(1.0, inner_product(u_n, u_n))


def test_lep_energy_identity(setup, params1d):
    tab, u_n, ustar = setup
    q_n = _squared(u_n)
    stages = solve_lep_stages(u_n, q_n, ustar, tab, 0.2, params1d)

    for i in range(tab.s):
        k_i = Field(u_n.grid, stages.k[i])
        weight = Field(u_n.grid, stages.u[i] + ustar[i].values * stages.u[i] / 3 + stages.q[i] / 6)
        assert abs(inner_product(k_i, weight)) <= 1e-11 * max(1.0, inner_product(u_n, u_n))


def test_lep_zero_and_constant(grid16, params1d):
    tab = gauss_tableau(2)
    zero = Field.zeros(grid16)
    stages = solve_lep_stages(zero, zero, [zero] * tab.s, tab, 0.1, params1d)
    assert not stages.k.any() and not stages.q.any()

    const = Field.constant(grid16, 2.0)
    stages = solve_lep_stages(const, _squared(const), [const] * tab.s, tab, 0.1, params1d)
    np.testing.assert_allclose(stages.k, 0.0, atol=1e-13)
    np.testing.assert_allclose(stages.q, 4.0, atol=1e-13)


def test_fixed_point_method(setup, params1d):
    tab, u_n, ustar = setup
    krylov = solve_lmp_stages(u_n, ustar, tab, 0.05, params1d)
    fixed = solve_lmp_stages(u_n, ustar, tab, 0.05, params1d, SolveConfig(method="fixed-point"))

    np.testing.assert_allclose(fixed.k, krylov.k, atol=1e-11)


def test_krylov_failure(setup, params1d):
    tab, u_n, ustar = setup

    with pytest.raises(SolverFailure) as excinfo:
        solve_lmp_stages(u_n, ustar, tab, 0.5, params1d, SolveConfig(max_krylov_iters=1, restart=1))

    assert excinfo.value.residual > 10 * SolveConfig().rel_tol


def test_deterministic(setup, params1d):
    tab, u_n, ustar = setup
    first = solve_lmp_stages(u_n, ustar, tab, 0.2, params1d)
    second = solve_lmp_stages(u_n, ustar, tab, 0.2, params1d)
    assert np.array_equal(first.k, second.k)


def test_stage_input_checks(setup, params1d):
    tab, u_n, ustar = setup

    with pytest.raises(ConfigurationError):
        solve_lmp_stages(u_n, ustar[:2], tab, 0.1, params1d)

    with pytest.raises(ConfigurationError):
        solve_lmp_stages(u_n, ustar, tab, -0.1, params1d)

    with pytest.raises(ConfigurationError):
        predict_sweeps_lmp(u_n, tab, 0.1, 0, params1d)


def test_predict_zero(grid16, params1d):
    tab = gauss_tableau(3)
    zero = Field.zeros(grid16)

    for M in (1, 3, 5):
        assert all(not f.values.any() for f in predict_sweeps_lmp(zero, tab, 0.1, M, params1d))
        assert all(not f.values.any() for f in predict_sweeps_lep(zero, zero, tab, 0.1, M, params1d))


def test_predict_lep_constant(grid16, params1d):
    tab = gauss_tableau(2)
    const = Field.constant(grid16, -0.7)

    for field in predict_sweeps_lep(const, _squared(const), tab, 0.1, 3, params1d):
        np.testing.assert_allclose(field.values, -0.7, atol=1e-13)


def test_predict_single_sweep(grid16, params1d):
    """one sweep from k = u^n: u_i = u^n + tau sum_j a_ij D^-1 G(w_j) w_j with w_j = (1 + tau c_j) u^n"""
    tab = gauss_tableau(2)
    tau = 0.1
    u_n = Field.from_function(grid16, lambda x: 0.5 * np.sin(x) + 0.2 * np.cos(2 * x))

    slopes = []
    for c in tab.c:
        w = u_n.like((1 + tau * c) * u_n.values)
        slopes.append(apply_D_inv(apply_G(w, w, params1d), params1d).values)
    expected = u_n.values + tau * tab.a @ np.stack(slopes)

    predicted = predict_sweeps_lmp(u_n, tab, tau, 1, params1d)
    np.testing.assert_allclose(np.stack([f.values for f in predicted]), expected, atol=1e-14)

    # starting from zero slopes the first sweep freezes at u^n
    k = apply_D_inv(apply_G(u_n, u_n, params1d), params1d).values
    predicted = predict_sweeps_lmp(u_n, tab, tau, 1, params1d, k0="zero")
    for c, field in zip(tab.c, predicted):
        np.testing.assert_allclose(field.values, u_n.values + tau * c * k, atol=1e-14)


def test_predict_converges_to_nonlinear_stages(grid16, params1d):
    tab = gauss_tableau(3)
    tau = 0.05
    u_n = Field.from_function(grid16, lambda x: 0.5 * np.sin(x))

    nonlinear = solve_nonlinear_stages(u_n, tab, tau, params1d)
    predicted = predict_sweeps_lmp(u_n, tab, tau, 40, params1d)
    np.testing.assert_allclose(np.stack([f.values for f in predicted]), nonlinear.u, atol=1e-10)

    q_n = _squared(u_n)
    nonlinear = solve_nonlinear_stages(u_n, tab, tau, params1d, q_n=q_n)
    predicted = predict_sweeps_lep(u_n, q_n, tab, tau, 40, params1d)
    np.testing.assert_allclose(np.stack([f.values for f in predicted]), nonlinear.u, atol=1e-10)


def test_predict_divergence(grid16, params1d):
    tab = gauss_tableau(2)
    huge = Field.from_function(grid16, lambda x: 1e100 * np.sin(x))

    with pytest.raises(DivergenceError):
        predict_sweeps_lmp(huge, tab, 1.0, 5, params1d)


def test_nonlinear_stages(grid16, params1d):
    tab = gauss_tableau(3)

    zero = Field.zeros(grid16)
    stages = solve_nonlinear_stages(zero, tab, 0.1, params1d)
    assert not stages.u.any()

    u_n = Field.from_function(grid16, lambda x: 0.5 * np.sin(x))
    with pytest.raises(StartupFailure):
        solve_nonlinear_stages(u_n, tab, 0.1, params1d, max_sweeps=2)


def test_lmp_2d(grid2d, params2d, random_field):
    tab = gauss_tableau(2)
    u_n = random_field(grid2d, 3)
    ustar = [random_field(grid2d, 4), random_field(grid2d, 5)]

    stages = solve_lmp_stages(u_n, ustar, tab, 0.2, params2d)
    for b, u_i, k_i in zip(tab.b, stages.stage_values(), stages.slopes()):
        assert abs(inner_product(u_i, apply_D(k_i, params2d))) <= 1e-11 * max(1.0, inner_product(u_n, u_n))

    assert np.abs(stages.k).max() > 1e-3
