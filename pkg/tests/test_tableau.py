import math

import numpy as np
import pytest

from rlw_spectral.exceptions import ConfigurationError
from rlw_spectral.integrators.tableau import ButcherTableau, gauss_tableau, symplectic_residual


@pytest.mark.parametrize("s", [1, 2, 3])
def test_gauss_invariants(s):
    tab = gauss_tableau(s)

    assert tab.s == s
    assert tab.order == 2 * s
    assert tab.row_sum_defect <= 1e-14
    assert tab.weight_sum_defect <= 1e-15
    assert symplectic_residual(tab) <= 1e-14
    assert tab.is_symplectic


def test_gauss_coefficients():
    r3, r15 = math.sqrt(3), math.sqrt(15)

    tab = gauss_tableau(1)
    assert tab.a[0, 0] == 0.5 and tab.b[0] == 1.0 and tab.c[0] == 0.5

    tab = gauss_tableau(2)
    np.testing.assert_allclose(tab.a, [[0.25, 0.25 - r3 / 6], [0.25 + r3 / 6, 0.25]], rtol=0, atol=1e-15)
    np.testing.assert_allclose(tab.b, [0.5, 0.5], rtol=0, atol=0)
    np.testing.assert_allclose(tab.c, [0.5 - r3 / 6, 0.5 + r3 / 6], rtol=0, atol=1e-15)

    tab = gauss_tableau(3)
    np.testing.assert_allclose(tab.b, [5 / 18, 4 / 9, 5 / 18], rtol=0, atol=1e-15)
    np.testing.assert_allclose(tab.c, [0.5 - r15 / 10, 0.5, 0.5 + r15 / 10], rtol=0, atol=1e-15)
    assert tab.exact is not None


def test_symplectic_residual_values():
    assert symplectic_residual(gauss_tableau(2)) <= 1e-16
    assert symplectic_residual(gauss_tableau(3)) <= 1e-15

    euler = ButcherTableau(a=[[0.0]], b=[1.0], c=[0.0], order=1, name="euler")
    assert symplectic_residual(euler) == 1.0
    assert not euler.is_symplectic


@pytest.mark.parametrize("s", [0, 4, 2.0, True])
def test_gauss_unsupported(s):
    with pytest.raises(ConfigurationError):
        gauss_tableau(s)


def test_tableau_shape_check():
    with pytest.raises(ConfigurationError):
        ButcherTableau(a=[[0.5, 0.0]], b=[1.0], c=[0.5], order=2)


def test_tableau_validate():
    broken = ButcherTableau(a=[[0.5]], b=[0.9], c=[0.5], order=2, name="broken")
    with pytest.raises(ConfigurationError):
        broken.validate()

    shifted = ButcherTableau(a=[[0.5]], b=[1.0], c=[0.4], order=2, name="shifted")
    with pytest.raises(ConfigurationError):
        shifted.validate()


@pytest.mark.parametrize("s", [1, 2, 3])
def test_scalar_global_order(s):
    """global error at t=1 decays like tau^(2s)"""
    tab = gauss_tableau(s)
    taus = [0.2, 0.1, 0.05]
    errors = [abs(tab.stability_function(-tau) ** round(1 / tau) - math.exp(-1.0)) for tau in taus]

    slopes = [math.log2(coarse / fine) for coarse, fine in zip(errors, errors[1:])]
    for slope in slopes:
        assert slope == pytest.approx(2 * s, abs=0.2)
