# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Periodic tensor grids, grid functions and Fourier pseudo-spectral primitives

Transforms are real-to-complex (``scipy.fft.rfftn``): every real field has a conjugate-symmetric spectrum, so
only the non-negative half of the last axis is stored. Spectral tables handed to the public API use the full
``fftfreq`` layout and are folded onto the half layout internally.
"""

import dataclasses
import functools
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft

from ..exceptions import ConfigurationError, ContractViolation, DimensionError

MIN_NODES = 8


@dataclasses.dataclass(frozen=True)
class PeriodicGrid:
    """
    Uniform periodic tensor grid on [a_x, b_x) (x [a_y, b_y)) with its Fourier wavenumber tables.

    Equality and hashing only consider the defining tuples, the derived tables are cached on first use.
    """

    bounds: Tuple[Tuple[float, float], ...]
    n: Tuple[int, ...]
    dealias: bool = False

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.n)

    @property
    def size(self) -> int:
        return math.prod(self.n)

    @property
    def lengths(self) -> Tuple[float, ...]:
        return tuple(b - a for a, b in self.bounds)

    @property
    def h(self) -> Tuple[float, ...]:
        """per-axis node spacing (b - a)/n"""
        return tuple(length / n for length, n in zip(self.lengths, self.n))

    @property
    def cell_volume(self) -> float:
        """quadrature weight of every node, the product of the spacings"""
        return math.prod(self.h)

    @property
    def spectral_shape(self) -> Tuple[int, ...]:
        return self.shape[:-1] + (self.n[-1] // 2 + 1,)

    @functools.cached_property
    def nodes(self) -> Tuple[np.ndarray, ...]:
        """per-axis node coordinates x_j = a + j*h, j = 0..n-1"""
        return tuple(a + np.arange(n) * h for (a, _), n, h in zip(self.bounds, self.n, self.h))

    @functools.cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        """coordinate arrays shaped like the grid (``ij`` indexing)"""
        return tuple(np.meshgrid(*self.nodes, indexing="ij"))

    @functools.cached_property
    def mode_index(self) -> Tuple[np.ndarray, ...]:
        """per-axis integer mode numbers in the standard layout 0, 1, .., n/2, -n/2+1, .., -1"""
        modes = []
        for n in self.n:
            m = np.fft.fftfreq(n, d=1.0 / n).round().astype(int)
            m[n // 2] = n // 2
            modes.append(m)
        return tuple(modes)

    @functools.cached_property
    def kappa(self) -> Tuple[np.ndarray, ...]:
        """per-axis wavenumbers 2*pi*m/(b - a), full layout"""
        return tuple(2.0 * np.pi * m / length for m, length in zip(self.mode_index, self.lengths))

    @functools.cached_property
    def nyquist_mask(self) -> Tuple[np.ndarray, ...]:
        """per-axis flags marking the Nyquist mode m = n/2"""
        return tuple(m == n // 2 for m, n in zip(self.mode_index, self.n))

    def wavenumbers(self, half: bool = True) -> Tuple[np.ndarray, ...]:
        """wavenumber tables broadcastable against the (half or full) spectral layout"""
        tables = []
        for axis, kappa in enumerate(self.kappa):
            if half and axis == self.dim - 1:
                kappa = kappa[: self.n[axis] // 2 + 1]
            shape = [1] * self.dim
            shape[axis] = kappa.size
            tables.append(kappa.reshape(shape))
        return tuple(tables)

    def nyquist_masks(self, half: bool = True) -> Tuple[np.ndarray, ...]:
        masks = []
        for axis, mask in enumerate(self.nyquist_mask):
            if half and axis == self.dim - 1:
                mask = mask[: self.n[axis] // 2 + 1]
            shape = [1] * self.dim
            shape[axis] = mask.size
            masks.append(mask.reshape(shape))
        return tuple(masks)

    @functools.cached_property
    def derivative_symbols(self) -> Tuple[np.ndarray, ...]:
        """i*kappa per axis on the half layout, Nyquist coefficient forced to zero"""
        return tuple(
            np.where(mask, 0.0, 1j * kappa) for kappa, mask in zip(self.wavenumbers(), self.nyquist_masks())
        )

    @functools.cached_property
    def dealias_filter(self) -> Optional[np.ndarray]:
        """2/3-rule mask on the half layout, ``None`` when dealiasing is off"""
        if not self.dealias:
            return None

        keep = np.ones(self.spectral_shape, dtype=bool)
        for axis, m in enumerate(self.mode_index):
            if axis == self.dim - 1:
                m = m[: self.n[axis] // 2 + 1]
            shape = [1] * self.dim
            shape[axis] = m.size
            keep = keep & (np.abs(m).reshape(shape) <= self.n[axis] // 3)
        return keep.astype(float)

    # array-level kernels, used by the operator layer on raw node arrays

    def forward(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.rfftn(values, axes=tuple(range(self.dim)))

    def inverse(self, coefficients: np.ndarray) -> np.ndarray:
        return scipy.fft.irfftn(coefficients, s=self.shape, axes=tuple(range(self.dim)))

    def multiply(self, w: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        Pointwise product of two node arrays.

        With dealiasing the product is sandwiched as F(w * F(v)) so that multiplication by ``w`` stays a
        symmetric operator in the discrete inner product.
        """
        if self.dealias_filter is None:
            return w * v

        filtered = self.inverse(self.dealias_filter * self.forward(v))
        return self.inverse(self.dealias_filter * self.forward(w * filtered))


def make_grid(bounds, n, dealias: bool = False) -> PeriodicGrid:
    """
    Build a periodic grid.

    :param bounds: one interval ``(a, b)`` or a sequence of one interval per axis
    :param n: node count, or a sequence of one node count per axis (even, at least 8)
    :param dealias: enable the 2/3-rule for pointwise products
    """
    if isinstance(n, (int, np.integer)):
        n = (n,)

    bounds = tuple(bounds)
    if bounds and not isinstance(bounds[0], (tuple, list, np.ndarray)):
        bounds = (bounds,)

    try:
        bounds = tuple((float(a), float(b)) for a, b in bounds)
        n = tuple(n)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"Invalid grid specification: bounds={bounds}, n={n}") from exc

    if len(n) not in (1, 2):
        raise ConfigurationError(f"Only 1D and 2D grids are supported, got {len(n)} axes")

    if len(bounds) != len(n):
        raise ConfigurationError(f"Got {len(bounds)} intervals for {len(n)} node counts")

    for axis, count in enumerate(n):
        if isinstance(count, bool) or not isinstance(count, (int, np.integer)) or count != int(count):
            raise ConfigurationError(f"Node count along axis {axis} must be an integer, got {count!r}")
        if count < MIN_NODES or count % 2:
            raise ConfigurationError(f"Node count along axis {axis} must be even and >= {MIN_NODES}, got {count}")

    for axis, (a, b) in enumerate(bounds):
        if not (math.isfinite(a) and math.isfinite(b)) or b <= a:
            raise ConfigurationError(f"Degenerate interval [{a}, {b}) along axis {axis}")

    return PeriodicGrid(bounds=bounds, n=tuple(int(count) for count in n), dealias=bool(dealias))


@dataclasses.dataclass(frozen=True, eq=False)
class Field:
    """
    A real grid function: one finite value per node, stored with the grid's shape (row-major).

    The value array is copied on construction and made read-only.
    """

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)

        if values.size != self.grid.size:
            raise DimensionError(f"Got {values.size} values for a grid with {self.grid.size} nodes")

        values = values.reshape(self.grid.shape)

        if not np.isfinite(values).all():
            raise ConfigurationError("Field values must be finite")

        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func: Callable[..., np.ndarray]) -> "Field":
        """sample ``func(x)`` (1D) or ``func(x, y)`` (2D) on the grid nodes"""
        return cls(grid, np.broadcast_to(func(*grid.mesh), grid.shape))

    def like(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def __len__(self):
        return self.grid.size


def check_same_grid(*fields: Field) -> PeriodicGrid:
    grid = fields[0].grid
    for field in fields[1:]:
        if field.grid != grid:
            raise DimensionError(f"Fields live on different grids: {grid} vs {field.grid}")
    return grid


def inner_product(u: Field, v: Field) -> float:
    """discrete L2 inner product: (prod h) * sum_nodes u*v (periodic trapezoidal rule)"""
    grid = check_same_grid(u, v)
    return float(np.sum(u.values * v.values)) * grid.cell_volume


def norm(u: Field) -> float:
    return math.sqrt(inner_product(u, u))


def check_axis(grid: PeriodicGrid, axis: int) -> int:
    if isinstance(axis, bool) or not isinstance(axis, (int, np.integer)) or not 0 <= axis < grid.dim:
        raise DimensionError(f"Axis {axis!r} out of range for a {grid.dim}D grid")
    return int(axis)


def deriv(u: Field, axis: int = 0) -> Field:
    """spectral first derivative along ``axis`` (Nyquist coefficient dropped, exactly skew-symmetric)"""
    grid = u.grid
    axis = check_axis(grid, axis)
    return u.like(grid.inverse(grid.derivative_symbols[axis] * grid.forward(u.values)))


def _fold_symbol(grid: PeriodicGrid, symbol) -> np.ndarray:
    """validate a full-layout symbol table and return its half-layout part"""
    symbol = np.asarray(symbol, dtype=complex)

    if symbol.ndim == 0:
        symbol = np.full(grid.shape, symbol)

    if symbol.shape != grid.shape:
        raise ContractViolation(f"Symbol table of shape {symbol.shape} does not match grid shape {grid.shape}")

    # value at mode -m, for every m: flip all axes and roll by one so that index 0 stays in place
    mirrored = np.roll(np.flip(symbol), shift=1, axis=tuple(range(grid.dim)))
    scale = max(float(np.max(np.abs(symbol))), 1.0)
    if not np.allclose(mirrored, np.conj(symbol), rtol=0.0, atol=1e-12 * scale):
        raise ContractViolation("Symbol table is not conjugate-symmetric, the result would not be real")

    return symbol[..., : grid.n[-1] // 2 + 1]


def apply_multiplier(u: Field, symbol: Union[complex, Sequence, np.ndarray]) -> Field:
    """
    Apply a Fourier multiplier: inverse-transform(symbol * forward-transform(u)).

    :param symbol: per-mode table in the full ``fftfreq`` layout (shape of the grid), must be conjugate-symmetric
    """
    grid = u.grid
    half = _fold_symbol(grid, symbol)
    return u.like(grid.inverse(half * grid.forward(u.values)))


def full_layout_wavenumbers(grid: PeriodicGrid) -> Tuple[np.ndarray, ...]:
    """wavenumber tables broadcast to the full grid shape, handy for building multiplier symbols"""
    return tuple(np.broadcast_to(kappa, grid.shape) for kappa in grid.wavenumbers(half=False))




def _resize_axis(coefficients: np.ndarray, axis: int, n_new: int) -> np.ndarray:
    """zero-pad or truncate one axis of a full-layout spectrum, keeping the result real-representable"""
    n_old = coefficients.shape[axis]
    if n_new == n_old:
        return coefficients

    half = min(n_old, n_new) // 2
    shape = list(coefficients.shape)
    shape[axis] = n_new
    resized = np.zeros(shape, dtype=complex)

    def at(index, n):
        where = [slice(None)] * coefficients.ndim
        where[axis] = index % n if isinstance(index, int) else index
        return tuple(where)

    resized[at(slice(0, half), n_new)] = coefficients[at(slice(0, half), n_old)]
    resized[at(slice(n_new - half + 1, n_new), n_new)] = coefficients[at(slice(n_old - half + 1, n_old), n_old)]

    if n_new > n_old:
        # the old Nyquist mode stands for cos only, split it evenly onto +half and -half
        resized[at(half, n_new)] = coefficients[at(half, n_old)] / 2
        resized[at(-half, n_new)] = coefficients[at(half, n_old)] / 2
    else:
        # modes +half and -half alias onto the new Nyquist mode
        resized[at(half, n_new)] = coefficients[at(half, n_old)] + coefficients[at(-half, n_old)]

    return resized * (n_new / n_old)


def resample(u: Field, grid: PeriodicGrid) -> Field:
    """
    Spectral interpolation of ``u`` onto another grid over the same box.

    Refining zero-pads the Fourier coefficients, coarsening truncates them, so a field resolved on both grids
    is carried over to rounding.

    :raises DimensionError: if the grids differ in dimension or box
    """
    source = u.grid
    if source.dim != grid.dim or not np.allclose(source.bounds, grid.bounds, rtol=1e-12, atol=0.0):
        raise DimensionError(f"Cannot resample between grids over different boxes: {source} vs {grid}")

    if source.n == grid.n:
        return Field(grid, u.values)

    coefficients = scipy.fft.fftn(u.values)
    for axis, n_new in enumerate(grid.n):
        coefficients = _resize_axis(coefficients, axis, n_new)

    return Field(grid, scipy.fft.ifftn(coefficients).real)
