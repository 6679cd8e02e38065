# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Run configuration of the experiment commands

A configuration is assembled from the experiment preset, an optional ``key=value`` file and ``key=value``
overrides given on the command line, in that order. The ``RLW_OUT`` environment variable replaces the output
directory last.
"""

import math
import os
from typing import Dict, Iterable, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict
from pydantic import Field as ModelField
from pydantic import model_validator

from ..exceptions import ConfigurationError
from ..integrators.schemes import SCHEMES, get_scheme
from ..integrators.stages import SolveConfig
from ..spectral.grid import PeriodicGrid, make_grid
from ..spectral.operators import RlwParams
from ..utils import build_model, parse_fraction, parse_tau_ladder

OUT_ENV_VAR = "RLW_OUT"

EXPERIMENT_DIMS = {
    "converge1d": 1,
    "efficiency": 1,
    "two-soliton": 1,
    "robustness": 1,
    "error-growth": 1,
    "converge2d": 2,
    "compare2d": 2,
    "bore2d": 2,
    "maxwellian2d": 2,
    "custom": None,
}

IC_DIMS = {
    "soliton": 1,
    "two-soliton": 1,
    "trig": 2,
    "bore": 2,
    "maxwellian": 2,
}

# experiments measuring errors against the exact soliton
EXACT_SOLUTION_EXPERIMENTS = ("converge1d", "efficiency", "error-growth")

ALL_SCHEMES = tuple(SCHEMES)

TWO_PI = 2.0 * math.pi

# step ladders by scheme order, used when no explicit ladder is configured
LADDERS_1D = {4: "1/100-1/800", 6: "1/10-1/80"}
LADDER_2D = "1/10-1/80"

_PARAMS_2D = {"alpha": 1.0, "beta": 1.0, "mu": 1.0, "theta": 1.0}

PRESETS: Dict[str, dict] = {
    "converge1d": {
        "schemes": ALL_SCHEMES,
        "T": 1.0,
        "n": (2048,),
        "bounds": ((-100.0, 100.0),),
        "c": 3.0,
        "ic": "soliton",
    },
    "efficiency": {
        "schemes": ALL_SCHEMES,
        "taus": (1 / 10, 1 / 20, 1 / 40, 1 / 80),
        "T": 10.0,
        "n": (3072,),
        "bounds": ((-100.0, 100.0),),
        "c": 3.0,
        "ic": "soliton",
    },
    "two-soliton": {
        "schemes": ALL_SCHEMES,
        "taus": (0.1,),
        "T": 30.0,
        "n": (1024,),
        "bounds": ((-60.0, 300.0),),
        "ic": "two-soliton",
        "snapshot_times": (0.0, 10.0, 20.0, 30.0),
        "reference": True,
        "reference_scheme": "lmp-pc6",
        "reference_n": (2048,),
    },
    "robustness": {
        "schemes": ALL_SCHEMES,
        "taus": (0.35,),
        "T": 70.0,
        "n": (2048,),
        "bounds": ((-100.0, 100.0),),
        "c": 1.0,
        "ic": "soliton",
    },
    "error-growth": {
        "schemes": ALL_SCHEMES,
        "taus": (0.1,),
        "T": 100.0,
        "n": (2048,),
        "bounds": ((-250.0, 250.0),),
        "c": 1.0,
        "ic": "soliton",
        "invariant_stride": 10,
    },
    "converge2d": {
        "schemes": ALL_SCHEMES,
        "T": 10.0,
        "n": (128, 128),
        "bounds": ((0.0, TWO_PI), (0.0, TWO_PI)),
        "ic": "trig",
        **_PARAMS_2D,
    },
    "compare2d": {
        "schemes": ALL_SCHEMES,
        "taus": (0.2,),
        "T": 50.0,
        "n": (64, 64),
        "bounds": ((0.0, TWO_PI), (0.0, TWO_PI)),
        "ic": "trig",
        "reference": True,
        "reference_n": (128, 128),
        **_PARAMS_2D,
    },
    "bore2d": {
        "schemes": ("lmp-pc6",),
        "taus": (0.1,),
        "T": 250.0,
        "n": (512, 512),
        "bounds": ((-60.0, 300.0), (-60.0, 300.0)),
        "ic": "bore",
        "snapshot_times": (0.0, 30.0, 60.0, 120.0, 180.0, 250.0),
        "invariant_stride": 10,
        **_PARAMS_2D,
    },
    "maxwellian2d": {
        "schemes": ("lep-pc6",),
        "taus": (0.1,),
        "T": 50.0,
        "n": (512, 512),
        "bounds": ((-100.0, 100.0), (-100.0, 100.0)),
        "ic": "maxwellian",
        "xc": 40.0,
        "yc": 40.0,
        "snapshot_times": (0.0, 5.0, 10.0, 20.0, 25.0, 50.0),
        "invariant_stride": 10,
        **_PARAMS_2D,
    },
    "custom": {
        "schemes": ("lep-pc6",),
        "taus": (0.1,),
        "T": 1.0,
        "n": (256,),
        "bounds": ((-50.0, 50.0),),
        "c": 1.0,
        "ic": "soliton",
    },
}


class RunConfig(BaseModel):
    """Everything one experiment command needs; frozen once assembled"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: Literal[tuple(EXPERIMENT_DIMS)]  # type: ignore[valid-type]
    schemes: Tuple[str, ...]
    taus: Optional[Tuple[float, ...]] = None
    T: float = ModelField(ge=0.0, allow_inf_nan=False)
    n: Tuple[int, ...]
    bounds: Tuple[Tuple[float, float], ...]
    dealias: bool = False

    alpha: float = 1.0
    beta: float = 0.0
    mu: float = 1.0
    theta: float = 0.0

    M: Optional[int] = ModelField(None, ge=1)
    k0: Literal["state", "zero"] = "state"
    method: Literal["krylov", "fixed-point"] = "krylov"
    rel_tol: float = 1e-13
    max_krylov_iters: int = 500
    restart: int = 50

    ic: Literal[tuple(IC_DIMS)]  # type: ignore[valid-type]
    c: float = 3.0
    x0: float = 0.0
    c1: float = 1.0
    x1: float = -20.0
    c2: float = 0.5
    x2: float = 15.0
    xc: float = 0.0
    yc: float = 0.0
    d: float = 2.0
    reference: bool = False
    reference_scheme: str = "lep-pc6"
    reference_tau: float = ModelField(0.001, gt=0.0)
    reference_n: Optional[Tuple[int, ...]] = None

    out: str = "rlw-output"
    invariant_stride: int = ModelField(1, ge=1)
    snapshot_stride: Optional[int] = ModelField(None, ge=1)
    snapshot_times: Tuple[float, ...] = ()
    workers: int = ModelField(1, ge=1)

    @model_validator(mode="after")
    def _consistent(self):
        if not self.schemes:
            raise ValueError("at least one scheme must be given")

        unknown = [tag for tag in self.schemes if tag not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown scheme(s) {', '.join(unknown)}, expected some of {', '.join(SCHEMES)}")

        if len(self.n) != len(self.bounds):
            raise ValueError(f"{len(self.n)} node counts given for {len(self.bounds)} intervals")

        dim = len(self.n)
        expected = EXPERIMENT_DIMS[self.experiment]
        if expected is not None and dim != expected:
            raise ValueError(f"experiment {self.experiment} is {expected}D but the grid is {dim}D")

        if IC_DIMS[self.ic] != dim:
            raise ValueError(f"initial condition '{self.ic}' is {IC_DIMS[self.ic]}D but the grid is {dim}D")

        if self.experiment in EXACT_SOLUTION_EXPERIMENTS and self.ic != "soliton":
            raise ValueError(f"experiment {self.experiment} compares with the exact soliton and needs ic=soliton")

        if (self.theta > 0) != (dim == 2) or (self.beta > 0) != (dim == 2):
            raise ValueError(f"a {dim}D grid needs {'positive' if dim == 2 else 'vanishing'} beta and theta")

        if self.taus is not None and (not self.taus or any(not tau > 0 for tau in self.taus)):
            raise ValueError("time steps must be positive")

        if self.reference_scheme not in SCHEMES:
            raise ValueError(f"unknown reference scheme {self.reference_scheme}")

        if self.reference_n is not None and len(self.reference_n) != dim:
            raise ValueError(f"reference grid {self.reference_n} does not match the {dim}D grid")

        return self

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def params(self) -> RlwParams:
        return build_model(RlwParams, alpha=self.alpha, beta=self.beta, mu=self.mu, theta=self.theta)

    @property
    def solve_cfg(self) -> SolveConfig:
        return build_model(
            SolveConfig,
            rel_tol=self.rel_tol,
            max_krylov_iters=self.max_krylov_iters,
            restart=self.restart,
            method=self.method,
            k0=self.k0,
        )

    def grid(self) -> PeriodicGrid:
        return make_grid(self.bounds, self.n, dealias=self.dealias)

    def reference_grid(self) -> PeriodicGrid:
        """the grid of the reference run, the run grid unless ``reference_n`` is set"""
        return make_grid(self.bounds, self.reference_n or self.n, dealias=self.dealias)

    def ladder(self, tag: str) -> List[float]:
        """the time steps a scheme is run with: the configured ones, else the default ladder for its order"""
        if self.taus is not None:
            return list(self.taus)
        if self.dim == 2:
            return parse_tau_ladder(LADDER_2D)
        return parse_tau_ladder(LADDERS_1D[get_scheme(tag).order])

    def snapshot_steps(self, tau: float) -> List[int]:
        """step indices of the requested snapshot times that fall on the time grid within [0, T]"""
        steps = []
        for t in self.snapshot_times:
            if t > self.T * (1 + 1e-12):
                continue
            index = round(t / tau)
            if abs(index * tau - t) <= 1e-9 * max(t, tau):
                steps.append(index)
        return sorted(set(steps))


def _floats(value: str) -> Tuple[float, ...]:
    return tuple(float(parse_fraction(v)) for v in value.split(",") if v.strip())


def _grid_shape(value: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in value.lower().split("x"))


def _bounds(value: str) -> Tuple[Tuple[float, float], ...]:
    intervals = []
    for spec in value.split(","):
        a, b = spec.split(":")
        intervals.append((_number(a), _number(b)))
    return tuple(intervals)


def _number(value: str) -> float:
    """a number or fraction, ``pi`` and ``2pi`` are recognized for periodic boxes"""
    value = value.strip().lower()
    specials = {"pi": math.pi, "2pi": TWO_PI, "-pi": -math.pi, "-2pi": -TWO_PI}
    if value in specials:
        return specials[value]
    return float(parse_fraction(value))


def _flag(value: str) -> bool:
    value = value.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value}")


def _schemes(value: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _taus(value: str) -> Tuple[float, ...]:
    return tuple(parse_tau_ladder(value))


KEY_PARSERS = {
    "schemes": _schemes,
    "tau": _taus,
    "taus": _taus,
    "T": _number,
    "n": _grid_shape,
    "bounds": _bounds,
    "dealias": _flag,
    "alpha": _number,
    "beta": _number,
    "mu": _number,
    "theta": _number,
    "M": int,
    "k0": str.strip,
    "method": str.strip,
    "rel_tol": float,
    "max_krylov_iters": int,
    "restart": int,
    "ic": str.strip,
    "c": _number,
    "x0": _number,
    "c1": _number,
    "x1": _number,
    "c2": _number,
    "x2": _number,
    "xc": _number,
    "yc": _number,
    "d": _number,
    "reference": _flag,
    "reference_scheme": str.strip,
    "reference_tau": _number,
    "reference_n": _grid_shape,
    "out": str.strip,
    "invariant_stride": int,
    "snapshot_stride": int,
    "snapshot_times": _floats,
    "workers": int,
}

# keys stored under a different model field
KEY_ALIASES = {"tau": "taus"}


def parse_key_values(lines: Iterable[str], source: str = "<command line>") -> dict:
    """
    Parse ``key=value`` lines; blank lines and ``#`` comments are skipped.

    :raises ConfigurationError: for malformed lines, unknown keys and values that do not parse
    """
    values = {}

    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue

        key, sep, raw = line.partition("=")
        key = key.strip()

        if not sep or not key:
            raise ConfigurationError(f"{source}:{lineno}: expected key=value, got '{line}'")

        if key not in KEY_PARSERS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key '{key}'")

        try:
            values[KEY_ALIASES.get(key, key)] = KEY_PARSERS[key](raw.strip())
        except (ValueError, ZeroDivisionError, ConfigurationError) as exc:
            raise ConfigurationError(f"{source}:{lineno}: invalid value for '{key}': {raw.strip()}") from exc

    return values


def load_config(
    experiment: str,
    config_file=None,
    overrides: Iterable[str] = (),
    environ: Optional[Dict[str, str]] = None,
) -> RunConfig:
    """
    Assemble the configuration of an experiment.

    :param config_file: an open text file with ``key=value`` lines
    :param overrides: ``key=value`` strings, applied after the file
    :param environ: environment to take ``RLW_OUT`` from, defaults to ``os.environ``
    """
    if experiment not in PRESETS:
        raise ConfigurationError(f"Unknown experiment '{experiment}', expected one of {', '.join(PRESETS)}")

    values = {"experiment": experiment, **PRESETS[experiment]}

    if config_file is not None:
        values.update(parse_key_values(config_file, getattr(config_file, "name", "<config>")))

    values.update(parse_key_values(overrides))

    environ = os.environ if environ is None else environ
    if environ.get(OUT_ENV_VAR):
        values["out"] = environ[OUT_ENV_VAR]

    return build_model(RunConfig, **values)
