# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Exceptions raised by the RLW solver library
"""


class RlwError(Exception):
    """Base class for all errors raised by rlw_spectral"""


class ConfigurationError(RlwError, ValueError):
    """Invalid grid, parameter, tableau or run configuration"""


class DimensionError(RlwError, ValueError):
    """Fields living on different grids or an axis the grid does not have"""


class ContractViolation(RlwError, AssertionError):
    """An internal contract was broken (for example a symbol which is not conjugate-symmetric)"""


class SolverFailure(RlwError, RuntimeError):
    """
    A stage solve did not reach the requested tolerance.

    :param residual: the achieved relative residual (if known)
    :param iterations: number of iterations spent
    :param t_reached: simulation time reached before the failure (set by the driver)
    """

    def __init__(self, message, residual=None, iterations=None, t_reached=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.t_reached = t_reached


class DivergenceError(SolverFailure):
    """Non-finite values appeared while sweeping the prediction iteration"""


class StartupFailure(SolverFailure):
    """The fixed-point iteration of the nonlinear Gauss starting step stalled above tolerance"""


class FieldFormatError(RlwError, ValueError):
    """
    A field file could not be parsed.

    :param lineno: 1-based line number the problem was detected on
    """

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class UnsupportedDimensionError(FieldFormatError):
    """A field file declares a spatial dimension other than 1 or 2"""


class UndefinedRateError(RlwError, ValueError):
    """Convergence rate requested for zero or negative errors"""
