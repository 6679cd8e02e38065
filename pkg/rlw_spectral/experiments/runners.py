# -*- coding: utf-8 -*-
# Copyright (c), Tiziano Müller
# SPDX-License-Identifier: MIT

"""
Experiment drivers behind the ``rlw`` commands

Each driver takes a :py:class:`RunConfig`, writes its CSV and field files below ``<out>/<experiment>/`` and
returns an :py:class:`ExperimentResult` with a table for the terminal.
"""

import concurrent.futures
import dataclasses
import logging
import math
import pathlib
import time
from typing import Callable, List, Optional, Sequence

from ..diagnostics import INVARIANTS, convergence_rates, drift_table, error_norms, max_drifts
from ..exceptions import SolverFailure, UndefinedRateError
from ..integrators.schemes import BoundednessObserver, Observer, make_state, run
from ..problems import SolitonParams, maxwellian_ic, soliton_1d, trig_ic_2d, two_soliton_ic, undular_bore_ic
from ..spectral.grid import Field, PeriodicGrid, resample
from .config import RunConfig
from .fieldio import SnapshotObserver, write_csv, write_field

LOGGER = logging.getLogger(__name__)

FAILED = "failed"
OK = "ok"


def format_error(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6e}"


def format_order(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.3f}"


def format_invariant(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.17g}"


def format_tau(tau: float) -> str:
    return f"{tau:.10g}"


@dataclasses.dataclass
class ExperimentResult:
    experiment: str
    headers: List[str]
    rows: List[list]
    files: List[pathlib.Path] = dataclasses.field(default_factory=list)
    failures: int = 0


@dataclasses.dataclass
class Cell:
    """one (scheme, time step) run of an experiment"""

    scheme: str
    tau: float
    summary: object = None
    errors: Optional[tuple] = None
    error: Optional[SolverFailure] = None
    cpu_seconds: float = 0.0
    observers: list = dataclasses.field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.error is not None


def output_dir(cfg: RunConfig) -> pathlib.Path:
    path = pathlib.Path(cfg.out) / cfg.experiment
    path.mkdir(parents=True, exist_ok=True)
    return path


def initial_condition(cfg: RunConfig, grid: PeriodicGrid) -> Field:
    params = cfg.params
    if cfg.ic == "soliton":
        return soliton_1d(grid, params, SolitonParams(c=cfg.c, x0=cfg.x0), 0.0)
    if cfg.ic == "two-soliton":
        return two_soliton_ic(grid, params, (cfg.c1, cfg.x1), (cfg.c2, cfg.x2))
    if cfg.ic == "trig":
        return trig_ic_2d(grid)
    if cfg.ic == "bore":
        return undular_bore_ic(grid, cfg.xc, cfg.yc, cfg.d)
    return maxwellian_ic(grid, cfg.xc, cfg.yc)


def exact_solution(cfg: RunConfig, grid: PeriodicGrid, t: float) -> Optional[Field]:
    """the exact solution where one is known (the single soliton), else ``None``"""
    if cfg.ic != "soliton":
        return None
    return soliton_1d(grid, cfg.params, SolitonParams(c=cfg.c, x0=cfg.x0), t)


def reference_solution(cfg: RunConfig, grid: PeriodicGrid) -> Field:
    """
    The solution at T of ``reference_scheme`` with ``reference_tau`` on the reference grid, resampled onto ``grid``.

    The field on the reference grid is also written to ``reference.field``.

    :raises SolverFailure: if the reference run fails
    """
    ref_grid = cfg.reference_grid()
    LOGGER.info(
        "computing the reference solution with %s, tau=%s on %s nodes",
        cfg.reference_scheme,
        format_tau(cfg.reference_tau),
        "x".join(map(str, ref_grid.n)),
    )

    state = make_state(
        cfg.reference_scheme, initial_condition(cfg, ref_grid), cfg.reference_tau, cfg.params, solve_cfg=cfg.solve_cfg
    )
    reference = run(state, cfg.T).state.u
    write_field(output_dir(cfg) / "reference.field", reference, cfg.T)
    return resample(reference, grid)


def _run_cell(
    cfg: RunConfig,
    cell: Cell,
    u0: Field,
    T: float,
    observers: Sequence[Observer] = (),
    invariant_stride: Optional[int] = None,
) -> Cell:
    state = make_state(cell.scheme, u0, cell.tau, cfg.params, M=cfg.M, solve_cfg=cfg.solve_cfg)
    cell.observers = list(observers)

    LOGGER.info("running %s with tau=%s to T=%g", cell.scheme, format_tau(cell.tau), T)
    start = time.process_time()
    try:
        cell.summary = run(state, T, observers=observers, invariant_stride=invariant_stride)
    except SolverFailure as exc:
        LOGGER.warning("%s with tau=%s failed at t=%s: %s", cell.scheme, format_tau(cell.tau), exc.t_reached, exc)
        cell.error = exc
    cell.cpu_seconds = time.process_time() - start
    return cell


def _map_cells(cfg: RunConfig, func: Callable[[Cell], Cell], cells: List[Cell]) -> List[Cell]:
    """run independent cells, concurrently when more than one worker is configured; order is preserved"""
    if cfg.workers == 1 or len(cells) < 2:
        return [func(cell) for cell in cells]

    with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(func, cells))


def _rate(coarse: Cell, fine: Cell, attr: int) -> Optional[float]:
    if coarse.failed or fine.failed:
        return None
    try:
        (rate,) = convergence_rates([coarse.errors[attr], fine.errors[attr]], ratio=coarse.tau / fine.tau)
    except UndefinedRateError:
        return None
    return rate


def _error_table(cfg: RunConfig, cells: List[Cell], filename: str) -> ExperimentResult:
    headers = ["scheme", "tau", "e2", "order2", "einf", "orderinf", "status"]
    rows = []

    for idx, cell in enumerate(cells):
        previous = cells[idx - 1] if idx and cells[idx - 1].scheme == cell.scheme else None
        order2 = _rate(previous, cell, 0) if previous else None
        orderinf = _rate(previous, cell, 1) if previous else None
        e2, einf = (None, None) if cell.failed else cell.errors

        rows.append(
            {
                "scheme": cell.scheme,
                "tau": format_tau(cell.tau),
                "e2": format_error(e2),
                "order2": format_order(order2),
                "einf": format_error(einf),
                "orderinf": format_order(orderinf),
                "status": FAILED if cell.failed else OK,
            }
        )

    path = write_csv(output_dir(cfg) / filename, rows, headers)
    return ExperimentResult(
        experiment=cfg.experiment,
        headers=headers,
        rows=[[row[h] for h in headers] for row in rows],
        files=[path],
        failures=sum(cell.failed for cell in cells),
    )


def _ladder_cells(cfg: RunConfig) -> List[Cell]:
    return [Cell(scheme=tag, tau=tau) for tag in cfg.schemes for tau in cfg.ladder(tag)]


def _soliton_errors(cfg: RunConfig, grid: PeriodicGrid, u0: Field) -> Callable[[Cell], Cell]:
    reference = exact_solution(cfg, grid, cfg.T)

    def evaluate(cell: Cell) -> Cell:
        _run_cell(cfg, cell, u0, cfg.T)
        if not cell.failed:
            cell.errors = error_norms(cell.summary.state.u, reference)
        return cell

    return evaluate


def cmd_converge1d(cfg: RunConfig) -> ExperimentResult:
    """errors at T against the exact soliton and observed orders over the step ladder of every scheme"""
    grid = cfg.grid()
    u0 = initial_condition(cfg, grid)
    cells = _map_cells(cfg, _soliton_errors(cfg, grid, u0), _ladder_cells(cfg))
    return _error_table(cfg, cells, "converge1d.csv")


def cmd_efficiency(cfg: RunConfig) -> ExperimentResult:
    """error against CPU time for every scheme and step (only comparable between runs on one machine)"""
    grid = cfg.grid()
    u0 = initial_condition(cfg, grid)
    cells = _map_cells(cfg, _soliton_errors(cfg, grid, u0), _ladder_cells(cfg))

    headers = ["scheme", "tau", "e2", "einf", "cpu_seconds", "status"]
    rows = []
    for cell in cells:
        e2, einf = (None, None) if cell.failed else cell.errors
        rows.append(
            {
                "scheme": cell.scheme,
                "tau": format_tau(cell.tau),
                "e2": format_error(e2),
                "einf": format_error(einf),
                "cpu_seconds": f"{cell.cpu_seconds:.3f}",
                "status": FAILED if cell.failed else OK,
            }
        )

    path = write_csv(output_dir(cfg) / "efficiency.csv", rows, headers)
    return ExperimentResult(
        experiment=cfg.experiment,
        headers=headers,
        rows=[[row[h] for h in headers] for row in rows],
        files=[path],
        failures=sum(cell.failed for cell in cells),
    )


def cmd_converge2d(cfg: RunConfig) -> ExperimentResult:
    """
    Errors at T against a reference computed with ``reference_scheme`` at ``reference_tau`` (lep-pc6 on the same
    grid unless configured otherwise).

    :raises SolverFailure: if the reference run fails
    """
    grid = cfg.grid()
    u0 = initial_condition(cfg, grid)
    reference = reference_solution(cfg, grid)

    def evaluate(cell: Cell) -> Cell:
        _run_cell(cfg, cell, u0, cfg.T)
        if not cell.failed:
            cell.errors = error_norms(cell.summary.state.u, reference)
        return cell

    cells = _map_cells(cfg, evaluate, _ladder_cells(cfg))
    return _error_table(cfg, cells, "converge2d.csv")


INVARIANT_HEADERS = ["t", *INVARIANTS, *(f"d_{name}" for name in INVARIANTS)]


def write_invariants(path: pathlib.Path, records) -> pathlib.Path:
    """invariant series with drifts against the t=0 row"""
    rows = []
    for record, drift in zip(records, drift_table(records)):
        row = {"t": format_invariant(record.t)}
        for name in INVARIANTS:
            row[name] = format_invariant(getattr(record, name))
            row[f"d_{name}"] = format_invariant(drift[name])
        rows.append(row)
    return write_csv(path, rows, INVARIANT_HEADERS)


def _snapshot_observer(cfg: RunConfig, directory: pathlib.Path, prefix: str, tau: float) -> SnapshotObserver:
    if cfg.snapshot_stride is not None:
        return SnapshotObserver(directory, prefix, stride=cfg.snapshot_stride)
    return SnapshotObserver(directory, prefix, steps=cfg.snapshot_steps(tau))


def _invariant_runs(cfg: RunConfig, final_fields: bool = False) -> ExperimentResult:
    """
    Run every (scheme, tau) cell with invariant sampling and snapshots, then write one invariant series per cell
    and a summary of the largest drifts.

    The summary gets e2 and e_inf columns at T against the exact solution where it is known (the single soliton
    of ``custom``), else against the reference run when ``reference`` is set.

    :param final_fields: also write the final solution of every cell
    :raises SolverFailure: if the reference run fails
    """
    grid = cfg.grid()
    u0 = initial_condition(cfg, grid)
    out = output_dir(cfg)

    target = exact_solution(cfg, grid, cfg.T) if final_fields else None
    if target is None and cfg.reference:
        target = reference_solution(cfg, grid)

    def evaluate(cell: Cell) -> Cell:
        prefix = f"{cell.scheme}_tau{format_tau(cell.tau)}"
        observers = [_snapshot_observer(cfg, out / "snapshots", prefix, cell.tau)]
        return _run_cell(cfg, cell, u0, cfg.T, observers=observers, invariant_stride=cfg.invariant_stride)

    cells = _map_cells(cfg, evaluate, _ladder_cells(cfg))

    headers = ["scheme", "tau", *(f"max_d_{name}" for name in INVARIANTS)]
    if target is not None:
        headers += ["e2", "einf"]
    headers.append("status")

    rows, files = [], []
    for cell in cells:
        prefix = f"{cell.scheme}_tau{format_tau(cell.tau)}"
        row = {"scheme": cell.scheme, "tau": format_tau(cell.tau), "status": FAILED if cell.failed else OK}

        if not cell.failed:
            final = cell.summary.state.u
            files.append(write_invariants(out / f"invariants_{prefix}.csv", cell.summary.records))
            for name, value in max_drifts(cell.summary.records).items():
                row[f"max_d_{name}"] = format_error(value)

            if final_fields:
                files.append(write_field(out / f"{prefix}_final.field", final, cell.summary.state.t))
            if target is not None:
                e2, einf = error_norms(final, target)
                row["e2"], row["einf"] = format_error(e2), format_error(einf)

        for observer in cell.observers:
            files.extend(getattr(observer, "written", []))
        rows.append(row)

    files.insert(0, write_csv(out / f"{cfg.experiment}_summary.csv", rows, headers))
    return ExperimentResult(
        experiment=cfg.experiment,
        headers=headers,
        rows=[[row.get(h, "") for h in headers] for row in rows],
        files=files,
        failures=sum(cell.failed for cell in cells),
    )


def cmd_two_soliton(cfg: RunConfig) -> ExperimentResult:
    """invariant series, drift summary with errors against the reference run, and snapshots of the interaction"""
    return _invariant_runs(cfg)


def cmd_compare2d(cfg: RunConfig) -> ExperimentResult:
    """invariant drifts and errors at T of every scheme against a fine reference on the 2D trig problem"""
    return _invariant_runs(cfg)


def cmd_field_demo(cfg: RunConfig) -> ExperimentResult:
    """2D undular bore or Maxwellian pulse: snapshots and invariant series"""
    return _invariant_runs(cfg)


def cmd_custom(cfg: RunConfig) -> ExperimentResult:
    """
    Any initial condition with any schemes; besides invariants and snapshots the final fields are written with
    their errors against the exact solution for the single soliton, or against the reference run if requested.
    """
    return _invariant_runs(cfg, final_fields=True)


class ErrorObserver(Observer):
    """e2 and e_inf against the exact soliton at every observed state"""

    def __init__(self, cfg: RunConfig, stride: int = 1):
        super().__init__(stride)
        self.cfg = cfg
        self.rows: List[dict] = []

    def __call__(self, state):
        e2, einf = error_norms(state.u, exact_solution(self.cfg, state.grid, state.t))
        self.rows.append({"t": format_invariant(state.t), "e2": format_error(e2), "einf": format_error(einf)})


def cmd_error_growth(cfg: RunConfig) -> ExperimentResult:
    """time series of the errors against the exact soliton over a long horizon"""
    grid = cfg.grid()
    u0 = initial_condition(cfg, grid)
    out = output_dir(cfg)

    def evaluate(cell: Cell) -> Cell:
        return _run_cell(cfg, cell, u0, cfg.T, observers=[ErrorObserver(cfg, cfg.invariant_stride)])

    cells = _map_cells(cfg, evaluate, _ladder_cells(cfg))

    headers = ["scheme", "tau", "e2_final", "einf_final", "status"]
    rows, files = [], []
    for cell in cells:
        series = cell.observers[0].rows
        path = out / f"errors_{cell.scheme}_tau{format_tau(cell.tau)}.csv"
        files.append(write_csv(path, series, ["t", "e2", "einf"]))
        last = series[-1] if series and not cell.failed else {}
        rows.append(
            {
                "scheme": cell.scheme,
                "tau": format_tau(cell.tau),
                "e2_final": last.get("e2", ""),
                "einf_final": last.get("einf", ""),
                "status": FAILED if cell.failed else OK,
            }
        )

    files.insert(0, write_csv(out / "error_growth.csv", rows, headers))
    return ExperimentResult(
        experiment=cfg.experiment,
        headers=headers,
        rows=[[row[h] for h in headers] for row in rows],
        files=files,
        failures=sum(cell.failed for cell in cells),
    )


def cmd_robustness(cfg: RunConfig) -> ExperimentResult:
    """
    Large-step runs of the soliton recording whether each scheme stays bounded (finite and max|u| within ten
    times its initial maximum) and the final error against the exact solution.
    """
    grid = cfg.grid()
    u0 = initial_condition(cfg, grid)
    out = output_dir(cfg)
    exact = exact_solution(cfg, grid, cfg.T)

    def evaluate(cell: Cell) -> Cell:
        return _run_cell(cfg, cell, u0, cfg.T, observers=[BoundednessObserver(cfg.invariant_stride)])

    cells = _map_cells(cfg, evaluate, _ladder_cells(cfg))

    headers = ["scheme", "tau", "bounded", "max_abs_u", "e2", "status"]
    rows, files = [], []
    for cell in cells:
        observer = cell.observers[0]
        bounded = not cell.failed and observer.bounded
        e2 = None
        if not cell.failed:
            final = cell.summary.state.u
            files.append(write_field(out / f"{cell.scheme}_tau{format_tau(cell.tau)}_final.field", final, cfg.T))
            if exact is not None:
                e2, _ = error_norms(final, exact)
        rows.append(
            {
                "scheme": cell.scheme,
                "tau": format_tau(cell.tau),
                "bounded": "yes" if bounded else "no",
                "max_abs_u": format_error(observer.peak if math.isfinite(observer.peak) else None),
                "e2": format_error(e2),
                "status": FAILED if cell.failed else OK,
            }
        )

    files.insert(0, write_csv(out / "robustness.csv", rows, headers))
    return ExperimentResult(
        experiment=cfg.experiment,
        headers=headers,
        rows=[[row[h] for h in headers] for row in rows],
        files=files,
        failures=sum(cell.failed for cell in cells),
    )


COMMANDS = {
    "converge1d": cmd_converge1d,
    "efficiency": cmd_efficiency,
    "two-soliton": cmd_two_soliton,
    "converge2d": cmd_converge2d,
    "compare2d": cmd_compare2d,
    "bore2d": cmd_field_demo,
    "maxwellian2d": cmd_field_demo,
    "robustness": cmd_robustness,
    "error-growth": cmd_error_growth,
    "custom": cmd_custom,
}
