# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Field snapshot files and CSV result tables

Field files are plain text::

    RLWFIELD v1
    <dim> <n_x> [<n_y>] <a_x> <b_x> [<a_y> <b_y>] <t>
    <value>            (one per line, row-major, n_x * n_y lines)

Numbers are written with ``repr`` so that reading them back restores the exact doubles.
"""

import csv
import math
import pathlib
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ConfigurationError, FieldFormatError, UnsupportedDimensionError
from ..integrators.schemes import Observer
from ..spectral.grid import Field, make_grid

MAGIC = "RLWFIELD v1"

PathLike = Union[str, pathlib.Path]


def write_field(path: PathLike, field: Field, t: float = 0.0) -> pathlib.Path:
    """write a field snapshot at time t, creating parent directories as needed"""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    grid = field.grid
    header = [str(grid.dim), *(str(n) for n in grid.n)]
    for a, b in grid.bounds:
        header += [repr(float(a)), repr(float(b))]
    header.append(repr(float(t)))

    with path.open("w", encoding="utf-8") as fhandle:
        fhandle.write(MAGIC + "\n")
        fhandle.write(" ".join(header) + "\n")
        for value in field.values.ravel():
            fhandle.write(repr(float(value)) + "\n")

    return path


def _parse_header(line: str) -> Tuple[Tuple[int, ...], Tuple[Tuple[float, float], ...], float]:
    tokens = line.split()
    if not tokens:
        raise FieldFormatError("empty grid header", lineno=2)

    try:
        dim = int(tokens[0])
    except ValueError:
        raise FieldFormatError(f"invalid dimension '{tokens[0]}'", lineno=2) from None

    if dim not in (1, 2):
        raise UnsupportedDimensionError(f"unsupported dimension {dim}, expected 1 or 2", lineno=2)

    expected = 1 + dim + 2 * dim + 1
    if len(tokens) != expected:
        raise FieldFormatError(f"expected {expected} header entries for a {dim}D field, got {len(tokens)}", lineno=2)

    try:
        n = tuple(int(v) for v in tokens[1 : 1 + dim])
        numbers = [float(v) for v in tokens[1 + dim :]]
    except ValueError as exc:
        raise FieldFormatError(f"malformed grid header: {exc}", lineno=2) from exc

    bounds = tuple((numbers[2 * axis], numbers[2 * axis + 1]) for axis in range(dim))
    return n, bounds, numbers[-1]


def read_field(path: PathLike) -> Tuple[Field, float]:
    """
    Read a field snapshot.

    :returns: the field and the time stored in its header
    :raises FieldFormatError: with the offending line number for any malformed content
    """
    path = pathlib.Path(path)

    with path.open("r", encoding="utf-8") as fhandle:
        lines = fhandle.read().splitlines()

    if not lines or lines[0].strip() != MAGIC:
        raise FieldFormatError(f"missing '{MAGIC}' signature", lineno=1)

    if len(lines) < 2:
        raise FieldFormatError("missing grid header", lineno=2)

    n, bounds, t = _parse_header(lines[1])

    try:
        grid = make_grid(bounds, n)
    except ConfigurationError as exc:
        raise FieldFormatError(f"invalid grid: {exc}", lineno=2) from exc

    body = lines[2:]
    # a trailing empty line is tolerated, anything else must be a value
    while body and not body[-1].strip():
        body.pop()

    if len(body) < grid.size:
        raise FieldFormatError(
            f"expected {grid.size} values, found only {len(body)} ({grid.size - len(body)} missing)",
            lineno=len(lines) + 1,
        )
    if len(body) > grid.size:
        raise FieldFormatError(f"expected {grid.size} values, found {len(body)}", lineno=3 + grid.size)

    values = np.empty(grid.size)
    for idx, line in enumerate(body):
        lineno = idx + 3
        try:
            value = float(line)
        except ValueError:
            raise FieldFormatError(f"not a number: '{line.strip()}'", lineno=lineno) from None
        if not math.isfinite(value):
            raise FieldFormatError(f"non-finite value '{line.strip()}'", lineno=lineno)
        values[idx] = value

    return Field(grid, values), t


def write_csv(path: PathLike, rows: Iterable[dict], fieldnames: Sequence[str]) -> pathlib.Path:
    """write dict rows in column order, missing entries as empty cells"""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with path.open("w", encoding="utf-8", newline="") as fhandle:
        writer = csv.DictWriter(fhandle, fieldnames=list(fieldnames), lineterminator="\n", restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: "" if value is None else value for key, value in row.items()})

    return path


def read_csv(path: PathLike) -> List[dict]:
    with pathlib.Path(path).open("r", encoding="utf-8", newline="") as fhandle:
        return list(csv.DictReader(fhandle))


class SnapshotObserver(Observer):
    """
    Writes the solution as a field file at selected steps.

    :param steps: explicit step indices to write; if omitted every ``stride``-th step is written
    """

    def __init__(self, directory: PathLike, prefix: str, stride: int = 100, steps: Optional[Iterable[int]] = None):
        self.steps = None if steps is None else set(steps)
        super().__init__(1 if self.steps is not None else stride)
        self.directory = pathlib.Path(directory)
        self.prefix = prefix
        self.written: List[pathlib.Path] = []

    def __call__(self, state):
        if self.steps is not None and state.step_index not in self.steps:
            return
        path = self.directory / f"{self.prefix}_{state.step_index:07d}.field"
        self.written.append(write_field(path, state.u, state.t))
