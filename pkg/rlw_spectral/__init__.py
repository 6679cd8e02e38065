"""Linear structure-preserving solvers for the regularized long-wave (RLW) equation.

Provides Fourier pseudo-spectral operators, Gauss collocation tableaus, linearly implicit momentum- and
energy-preserving Runge-Kutta schemes, invariant diagnostics and a click-based experiment CLI.
"""

__version__ = "0.1.0"
