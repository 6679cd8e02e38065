# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
RLW solver helper functions
"""

import re
import sys
from fractions import Fraction

import click

from .exceptions import ConfigurationError

# a dash separates a range unless it is the sign of an exponent
RANGE_SEPARATOR = re.compile(r"(?<![eE])-")


def echo(message, nl=True, err=False):
    click.secho(message, nl=nl, err=err)


def echo_info(message, nl=True, err=False):
    click.secho("Info: ", fg="blue", bold=True, nl=False, err=err)
    click.secho(message, nl=nl, err=err)


def echo_success(message, nl=True, err=False):
    click.secho("Success: ", fg="green", bold=True, nl=False, err=err)
    click.secho(message, nl=nl, err=err)


def echo_warning(message, nl=True, err=False):
    click.secho("Warning: ", fg="yellow", bold=True, nl=False, err=err)
    click.secho(message, nl=nl, err=err)


def echo_critical(message, exit_code=1):
    """print an error message to stderr and exit with the given code"""
    click.secho("Critical: ", fg="red", bold=True, nl=False, err=True)
    click.secho(message, err=True)
    sys.exit(exit_code)


def parse_fraction(value):
    """convert '1/80', '0.0125' or '3' to a Fraction, raising ValueError on junk"""
    value = str(value).strip()
    if not value:
        raise ValueError("empty value")

    return Fraction(value)


def parse_tau_ladder(value):
    """
    Convert the given input to a list of time steps.

    Accepts a comma-separated list of numbers or fractions (``1/10,1/20``) where every element may also be
    a halving range ``1/10-1/80`` which expands to ``1/10,1/20,1/40,1/80``.
    """
    taus = []

    try:
        for spec in value.replace(" ", "").replace("\t", "").split(","):
            if not spec:
                continue

            # a leading '-' belongs to the number, not to a range
            parts = RANGE_SEPARATOR.split(spec[1:], maxsplit=1)
            if len(parts) == 1:
                taus.append(parse_fraction(spec))
                continue

            start, stop = parse_fraction(spec[0] + parts[0]), parse_fraction(parts[1])
            if start <= 0 or stop <= 0 or stop > start:
                raise ValueError(f"invalid halving range '{spec}'")

            tau = start
            while tau >= stop:
                taus.append(tau)
                tau /= 2

            if taus[-1] != stop:
                raise ValueError(f"range '{spec}' does not reach its end by halving")

    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigurationError(f"Invalid time step ladder specified: {value}") from exc

    if not taus:
        raise ConfigurationError("Empty time step ladder")

    if any(tau <= 0 for tau in taus):
        raise ConfigurationError(f"Time steps must be positive: {value}")

    return [float(tau) for tau in taus]


def build_model(model_cls, **values):
    """instantiate a pydantic model, turning validation problems into a ConfigurationError"""
    import pydantic

    try:
        return model_cls(**values)
    except pydantic.ValidationError as exc:
        raise ConfigurationError(f"One or more invalid fields found for {model_cls.__name__}: {exc}") from exc
