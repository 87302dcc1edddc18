"""Experiment runner: ``python -m eulag {run,frechet,compare} --config FILE``.

Outputs land in the configured directory (``$EULAG_OUT_DIR`` or ``--out``
take precedence):

``<solver>_NNNNN.bin``
    snapshots every ``stride`` steps plus the last, see :mod:`eulag.snapshot`;
    one-dimensional runs also get a ``.csv`` copy.
``<solver>_diagnostics.csv``
    one row per accepted step.
``comparison.csv``
    relative L2 and H^beta differences per common snapshot time (``both``).
``frechet.csv``
    one row per derivative case and map.

Solver failures leave everything produced so far on disk and exit with
status 2; configuration errors exit with status 1.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .diagnostics import Diagnostics
from .errors import ConfigError, SolverError
from .frechet import (
    compare_linearization,
    delta_sweep,
    fd_gateaux,
    flow_frechet_at_zero,
    flow_frechet_literal_1d,
    flow_functional,
    labels_frechet_at_zero,
    labels_functional,
)
from .lagrangian import solve
from .reference import EulerState, rk4_solve
from .snapshot import write_csv_mirror, write_rows, write_snapshot
from .spectral import bessel_norm, rel_l2

__all__ = ["RunReport", "run", "report_frechet", "compare_rows", "main"]

log = logging.getLogger("eulag")

FRECHET_HEADER = [
    "case", "map", "t", "delta", "rel_error_l2", "rel_error_max", "slope", "literal_rel_error", "exact_rel_error",
]
COMPARE_HEADER = ["t", "rel_l2_rho", "rel_l2_u", "rel_hbeta_rho", "rel_hbeta_u"]


@dataclass
class RunReport:
    states: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    error: SolverError | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _write_states(cfg: RunConfig, name: str, states, steps) -> list[Path]:
    files = []
    g = cfg.grid
    for state, step in zip(states, steps):
        fields = {"rho": state.rho, "u": state.u}
        stem = cfg.out_dir / f"{name}_{step:05d}"
        files.append(write_snapshot(stem.with_suffix(".bin"), g.d, g.n, state.t, fields))
        if g.d == 1:
            files.append(write_csv_mirror(stem.with_suffix(".csv"), g.nodes[0], fields))
    return files


def _step_size(cfg: RunConfig) -> float:
    return cfg.T / math.ceil(cfg.T / cfg.dt - 1e-9) if cfg.T > 0 else cfg.dt


def _beta(cfg: RunConfig) -> float:
    return replace(cfg.picard, enforce_norm_hypothesis=False).beta_for(cfg.grid)


def _run_lagrangian(cfg: RunConfig):
    try:
        sol = solve(cfg.grid, cfg.rho0, cfg.u0, cfg.law, cfg.T, cfg.picard)
        return sol.states, sol.diagnostics, None
    except SolverError as err:
        sol = getattr(err, "partial", None)
        if sol is None:
            return [], Diagnostics(), err
        return sol.states, sol.diagnostics, err


def _run_reference(cfg: RunConfig):
    diag = Diagnostics()
    beta = _beta(cfg)

    def record(s):
        diag.record(cfg.grid, s.t, s.rho, s.u, beta, cfg.picard.p)

    state0 = EulerState(0.0, cfg.rho0, cfg.u0)
    try:
        states = rk4_solve(state0, cfg.law, cfg.grid, cfg.T, cfg.dt, cfg.stride,
                           cfg.picard.blowup_factor, cfg.picard.tail_tol, callback=record)
        return states, diag, None
    except SolverError as err:
        return getattr(err, "partial", []), diag, err


def compare_rows(cfg: RunConfig, lag_states, ref_states, beta: float | None = None) -> list[list]:
    """Differences at the snapshot times both runs share."""
    beta = _beta(cfg) if beta is None else beta
    h = _step_size(cfg)
    ref_by_t = {round(s.t / h): s for s in ref_states}
    rows = []
    for s in lag_states:
        r = ref_by_t.get(round(s.t / h))
        if r is None:
            continue
        hb = [
            bessel_norm(a - b, cfg.grid, beta, cfg.picard.p) / max(bessel_norm(b, cfg.grid, beta, cfg.picard.p), 1e-300)
            for a, b in ((s.rho, r.rho), (s.u, r.u))
        ]
        rows.append([float(s.t), rel_l2(s.rho, r.rho), rel_l2(s.u, r.u), float(hb[0]), float(hb[1])])
    return rows


def run(cfg: RunConfig) -> RunReport:
    """Run the configured solver(s) and write every output file."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport()
    names = ["lagrangian", "reference"] if cfg.solver == "both" else [cfg.solver]
    for name in names:
        runner = _run_lagrangian if name == "lagrangian" else _run_reference
        states, diag, err = runner(cfg)
        report.states[name] = states
        steps = [round(s.t / _step_size(cfg)) for s in states]
        report.files += _write_states(cfg, name, states, steps)
        path = cfg.out_dir / f"{name}_diagnostics.csv"
        diag.write_csv(path)
        report.files.append(path)
        if name == "lagrangian" and len(diag):
            log.info("lagrangian: %d steps, max Picard iterations %d", len(diag) - 1, max(diag.iterations))
        if err is not None and report.error is None:
            report.error = err
    if cfg.solver == "both":
        rows = compare_rows(cfg, report.states["lagrangian"], report.states["reference"])
        report.files.append(write_rows(cfg.out_dir / "comparison.csv", COMPARE_HEADER, rows))
    return report


def report_frechet(cfg: RunConfig) -> list[list]:
    """Run the configured derivative battery and write ``frechet.csv``.

    For each case both maps are checked: the flow (variational equation)
    and the back-to-labels map (chain identity), each against a central
    difference at ``delta`` and with the slope of the ``deltas`` sweep. In
    one dimension the flow row also reports the scalar exponential form.
    When ``u0`` vanishes the exact derivatives ``t w`` (flow) and ``-t w``
    (labels) are known and compared as well.
    """
    fc = cfg.frechet
    if fc is None or not fc.cases:
        raise ValueError("no cases")
    g = cfg.grid
    method = cfg.picard.method
    rows = []
    for case in fc.cases:
        pairs = (
            ("flow", flow_frechet_at_zero, flow_functional),
            ("labels", labels_frechet_at_zero, labels_functional),
        )
        for kind, analytic_fn, functional in pairs:
            analytic = analytic_fn(case.u0, case.w, case.t, g, fc.dt, method)
            fn = functional(g, case.t, fc.dt, method)
            res = compare_linearization(analytic, fd_gateaux(fn, case.u0, case.w, fc.delta), fc.delta)
            if np.linalg.norm(analytic) > 0:
                _, slope = delta_sweep(fn, case.u0, case.w, analytic, fc.deltas)
            else:
                slope = float("nan")
            literal = float("nan")
            if kind == "flow" and g.d == 1:
                lit = flow_frechet_literal_1d(case.u0, case.w, case.t, g, fc.dt, method)
                literal = compare_linearization(analytic, lit, 0.0).rel_error_l2
            exact = float("nan")
            if not np.any(case.u0):
                sign = 1.0 if kind == "flow" else -1.0
                exact = compare_linearization(sign * case.t * case.w, analytic, 0.0).rel_error_l2
            rows.append(
                [case.name, kind, case.t, fc.delta, res.rel_error_l2, res.rel_error_max, slope, literal, exact]
            )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_rows(cfg.out_dir / "frechet.csv", FRECHET_HEADER, rows)
    return rows


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eulag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "run the configured solver"),
        ("frechet", "check the flow and label-map derivatives"),
        ("compare", "run both solvers and write comparison.csv"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--solver", choices=("lagrangian", "reference", "both"), help="override run.solver")
        p.add_argument("--quiet", action="store_true", help="only report errors")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if args.command == "compare":
        cfg = replace(cfg, solver="both")
    elif args.solver is not None:
        cfg = replace(cfg, solver=args.solver)

    if args.command == "frechet":
        try:
            rows = report_frechet(cfg)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for row in rows:
            log.info("%-16s %-6s t=%-5g rel_l2=%.3e slope=%.3f", row[0], row[1], row[2], row[4], row[6])
        return 0

    report = run(cfg)
    if report.error is not None:
        err = report.error
        where = "" if err.t is None else f" at t={err.t:.6g}"
        print(f"error: {err.kind}{where}: {err}", file=sys.stderr)
        return 2
    log.info("wrote %d files to %s", len(report.files), cfg.out_dir)
    return 0
