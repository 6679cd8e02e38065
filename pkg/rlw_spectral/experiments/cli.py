# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
RLW experiment command line interface
"""

import logging

import click
import tabulate

from ..exceptions import ConfigurationError, SolverFailure
from ..integrators.schemes import SCHEMES
from ..utils import echo, echo_critical, echo_info, echo_success, echo_warning
from .config import PRESETS, load_config
from .runners import COMMANDS, FAILED

EXIT_CONFIGURATION = 2
EXIT_SOLVER = 3


@click.group()
@click.option("-v", "--verbose", count=True, help="log solver progress (repeat for per-step statistics)")
def cli(verbose):
    """Run the RLW equation experiments with the conservative linearly implicit schemes"""
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG if verbose > 1 else logging.INFO,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )


@cli.command("schemes")
def list_schemes():
    """
    List the available time-stepping schemes
    """
    table = [
        (spec.tag, spec.order, spec.stages, spec.strategy, spec.default_M or "-", spec.description)
        for spec in SCHEMES.values()
    ]
    echo(tabulate.tabulate(table, headers=["Tag", "Order", "Stages", "Strategy", "M", "Description"]))


def _execute(experiment, config_file, overrides):
    try:
        cfg = load_config(experiment, config_file, overrides)
    except ConfigurationError as exc:
        echo_critical(str(exc), exit_code=EXIT_CONFIGURATION)

    echo_info(f"Running '{experiment}' with {', '.join(cfg.schemes)}, output in '{cfg.out}'")

    try:
        result = COMMANDS[experiment](cfg)
    except ConfigurationError as exc:
        echo_critical(str(exc), exit_code=EXIT_CONFIGURATION)
    except SolverFailure as exc:
        echo_critical(f"{exc} (reached t={exc.t_reached})", exit_code=EXIT_SOLVER)

    echo("")
    echo(tabulate.tabulate(result.rows, headers=result.headers))
    echo("")

    if result.failures:
        echo_warning(f"{result.failures} run(s) failed, marked as '{FAILED}' in the tables")

    echo_success(f"{len(result.files)} file(s) written below '{cfg.out}'")


EXPERIMENT_HELP = {
    "converge1d": "Temporal convergence on the 1D soliton against the exact solution",
    "efficiency": "Error versus CPU time on the 1D soliton",
    "two-soliton": "Interaction of two solitary waves: invariant series, drift summary and snapshots",
    "converge2d": "Temporal convergence in 2D against a fine-step reference solution",
    "compare2d": "Invariant drifts and errors of all schemes on a coarse 2D grid against a fine reference",
    "bore2d": "Evolution of a 2D undular bore: snapshots and invariant series",
    "maxwellian2d": "Breakup of a 2D Maxwellian pulse: snapshots and invariant series",
    "robustness": "Large-step soliton runs with boundedness flags",
    "error-growth": "Long-time error growth on the 1D soliton",
    "custom": "Any initial condition and schemes configured through key=value settings",
}


def _experiment_command(name):
    # fmt: off
    @cli.command(name, help=f"{EXPERIMENT_HELP[name]}\n\nSettings are given as KEY=VALUE pairs after the options.")
    @click.option(
        "config_file", "--config", "-c", type=click.File(mode="r"),
        help="file with KEY=VALUE lines, applied before the command line settings")
    @click.argument("overrides", nargs=-1)
    # fmt: on
    def command(config_file, overrides):
        _execute(name, config_file, overrides)

    return command


for _name in PRESETS:
    _experiment_command(_name)
