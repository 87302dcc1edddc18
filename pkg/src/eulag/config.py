"""Run configuration: TOML schema, defaults and validation.

A minimal file needs nothing beyond the initial data; everything else has a
default. The full schema::

    [grid]
    d = 1                      # 1 or 2
    n = 128                    # even, >= 8

    [law]
    name = "gamma"             # gamma | isothermal | tabulated
    kappa = 1.0
    gamma = 1.4                # further keys are passed to the law

    [initial]
    preset = "smooth"          # see eulag.initial.PRESETS
    params = { rho_amp = 0.2 }
    # Fourier data overrides the preset field by field:
    # rho = { mean = 1.0, terms = [{ amp = 0.2, kind = "sin", k = [1] }] }
    # u = [{ mean = 0.0, terms = [...] }]     # one table per component

    [run]
    solver = "lagrangian"      # lagrangian | reference | both
    T = 0.2
    dt = 1e-3
    stride = 10
    out = "out"                # overridden by $EULAG_OUT_DIR

    [picard]
    tol = 1e-10
    max_iters = 100
    damping = 1.0              # relaxation theta
    # epsilon, beta default to (2pi/n)^2/4 and d/p + 1.5
    p = 2.0
    substeps = 1
    method = "spectral"        # or "cubic"
    mode = "stepwise"          # "global" is experimental

    [frechet]
    dt = 1e-3
    delta = 1e-4
    deltas = [1e-2, 1e-3, 1e-4]
    [[frechet.cases]]
    name = "sin-cos"
    u0 = [{ terms = [{ amp = 1.0, kind = "sin", k = [1] }] }]
    w = [{ terms = [{ amp = 1.0, kind = "cos", k = [1] }] }]
    t = 0.3
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError
from .initial import fourier_field, make_initial
from .lagrangian import PicardConfig
from .spectral import TorusGrid
from .thermo import LAWS, PressureLaw, make_law

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["OUT_ENV", "FrechetCase", "FrechetConfig", "RunConfig", "load_config", "parse_config"]

OUT_ENV = "EULAG_OUT_DIR"
SOLVERS = ("lagrangian", "reference", "both")

_SECTIONS = {
    "grid": {"d", "n"},
    "law": None,
    "initial": {"preset", "params", "rho", "u"},
    "run": {"solver", "T", "dt", "stride", "out"},
    "picard": {"tol", "max_iters", "damping", "epsilon", "beta", "p", "substeps", "method", "mode",
               "blowup_factor", "tail_tol"},
    "frechet": {"dt", "delta", "deltas", "cases"},
}


@dataclass(frozen=True, eq=False)
class FrechetCase:
    name: str
    u0: np.ndarray
    w: np.ndarray
    t: float


@dataclass(frozen=True, eq=False)
class FrechetConfig:
    cases: tuple[FrechetCase, ...]
    dt: float = 1e-3
    delta: float = 1e-4
    deltas: tuple[float, ...] = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True, eq=False)
class RunConfig:
    grid: TorusGrid
    law: PressureLaw
    rho0: np.ndarray
    u0: np.ndarray
    solver: str = "lagrangian"
    T: float = 0.2
    dt: float = 1e-3
    stride: int = 10
    out_dir: Path = Path("out")
    picard: PicardConfig = field(default_factory=PicardConfig)
    frechet: FrechetConfig | None = None
    source: dict = field(default_factory=dict)

    @property
    def beta(self) -> float:
        return self.picard.beta_for(self.grid)


def _component_fields(grid, spec, what, problems):
    if not isinstance(spec, list) or len(spec) != grid.d:
        problems.append(f"{what}: expected a list of {grid.d} component table(s)")
        return None
    try:
        return np.stack([fourier_field(grid, c.get("mean", 0.0), c.get("terms", ())) for c in spec])
    except (ValueError, TypeError, AttributeError) as exc:
        problems.append(f"{what}: {exc}")
        return None


def _frechet(grid, raw, problems):
    cases = []
    for i, case in enumerate(raw.get("cases", [])):
        where = f"frechet.cases[{i}]"
        unknown = set(case) - {"name", "u0", "w", "t"}
        if unknown:
            problems.append(f"{where}: unknown keys {sorted(unknown)}")
        u0 = _component_fields(grid, case.get("u0", [{}] * grid.d), f"{where}.u0", problems)
        w = _component_fields(grid, case.get("w"), f"{where}.w", problems)
        t = case.get("t")
        if not isinstance(t, (int, float)) or t < 0:
            problems.append(f"{where}.t: must be a number >= 0 (got {t!r})")
        if u0 is not None and w is not None and not problems:
            cases.append(FrechetCase(str(case.get("name", f"case{i}")), u0, w, float(t)))
    deltas = tuple(float(x) for x in raw.get("deltas", (1e-2, 1e-3, 1e-4)))
    if len(deltas) < 2 or any(x <= 0 for x in deltas):
        problems.append("frechet.deltas: need at least two positive values")
    fc = FrechetConfig(tuple(cases), float(raw.get("dt", 1e-3)), float(raw.get("delta", 1e-4)), deltas)
    if not fc.dt > 0:
        problems.append(f"frechet.dt: must be > 0 (got {fc.dt})")
    if fc.delta == 0:
        problems.append("frechet.delta: must be nonzero")
    return fc


def parse_config(raw: Mapping[str, Any]) -> RunConfig:
    """Validate a parsed mapping; raises :class:`ConfigError` listing every problem."""
    problems: list[str] = []
    for name, section in raw.items():
        if name not in _SECTIONS:
            problems.append(f"unknown section [{name}]")
        elif not isinstance(section, Mapping):
            problems.append(f"[{name}] must be a table")
        elif _SECTIONS[name] is not None:
            for key in set(section) - _SECTIONS[name]:
                problems.append(f"{name}.{key}: unknown key")
    if problems:
        raise ConfigError(problems)

    g = raw.get("grid", {})
    try:
        grid = TorusGrid(int(g.get("d", 1)), int(g.get("n", 128)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"grid: {exc}") from None

    lw = dict(raw.get("law", {}))
    law_name = lw.pop("name", "gamma")
    law = None
    if law_name not in LAWS:
        problems.append(f"law.name: unknown law {law_name!r}; available: {', '.join(sorted(LAWS))}")
    else:
        try:
            law = make_law(law_name, **lw)
        except (TypeError, ValueError) as exc:
            problems.append(f"law: {exc}")

    init = raw.get("initial", {})
    rho0 = u0 = None
    try:
        rho0, u0 = make_initial(grid, init.get("preset"), init.get("params"), init.get("rho"), init.get("u"))
    except (ValueError, TypeError, AttributeError) as exc:
        problems.append(f"initial: {exc}")
    if rho0 is not None and law is not None:
        lo = float(np.min(rho0))
        if not lo > law.rho_min:
            problems.append(f"initial rho0: min rho0 = {lo:.6g} must exceed rho_min = {law.rho_min:g}")

    run = raw.get("run", {})
    solver = run.get("solver", "lagrangian")
    if solver not in SOLVERS:
        problems.append(f"run.solver: must be one of {', '.join(SOLVERS)} (got {solver!r})")
    T = run.get("T", 0.2)
    dt = run.get("dt", 1e-3)
    stride = run.get("stride", 10)
    if not isinstance(T, (int, float)) or T < 0:
        problems.append(f"run.T: must be a number >= 0 (got {T!r})")
    if not isinstance(dt, (int, float)) or not dt > 0:
        problems.append(f"run.dt: must be a number > 0 (got {dt!r})")
    if not isinstance(stride, int) or stride < 1:
        problems.append(f"run.stride: must be an integer >= 1 (got {stride!r})")
    out = Path(os.environ.get(OUT_ENV) or run.get("out", "out"))

    pc = dict(raw.get("picard", {}))
    picard = None
    if "tol" in pc:
        pc["picard_tol"] = pc.pop("tol")
    try:
        picard = PicardConfig(dt=float(dt) if isinstance(dt, (int, float)) and dt > 0 else 1e-3,
                              stride=stride if isinstance(stride, int) and stride >= 1 else 1, **pc)
        if solver in ("lagrangian", "both"):
            picard.beta_for(grid)
    except (TypeError, ValueError) as exc:
        problems.extend(f"picard: {msg}" for msg in str(exc).split("; "))

    frechet = _frechet(grid, raw["frechet"], problems) if "frechet" in raw else None

    if problems:
        raise ConfigError(problems)
    return RunConfig(grid, law, rho0, u0, solver, float(T), float(dt), stride, out, picard, frechet, dict(raw))


def load_config(path) -> RunConfig:
    """Read and validate a TOML run configuration."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    return parse_config(raw)
