"""Eulerian-Lagrangian solver for the isentropic Euler equations.

The velocity is reconstructed from the back-to-labels map ``A_t`` and the
scalar ``q`` as

    u = (grad A_t)^T u0(A_t) - grad q,      D_t q = h(rho) - |u|^2 / 2,

with ``rho = det(grad A_t) rho0(A_t)``. A pair ``(rho, u)`` solves the Euler
system exactly when this identity holds, so each time step is a fixed-point
problem for ``u`` at the new time level. It is solved by relaxed Picard
iteration preconditioned with the heat semigroup.

Time stepping is semi-Lagrangian: the map, ``q`` and the ``H - K``
integrand are carried from ``t_n`` to ``t_{n+1}`` by tracing every node back
over one step, so ``A_{n+1} = A_n o Y_n`` with ``Y_n`` the one-step
departure map, and ``q`` picks up the trapezoid rule of ``H - K`` along the
traced characteristic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import Diagnostics
from .errors import NoConvergenceError, SolverError
from .flow import FlowMap, VelocityHistory, _trace_displacement, compose, identity_map, jacobian, pushforward_covector, wrap
from .reference import check_resolution
from .spectral import TorusGrid, bessel_norm, dealias, gradient, heat_smooth, interpolate
from .thermo import PressureLaw, check_density

__all__ = [
    "PicardConfig",
    "LagrangianState",
    "StepReport",
    "Solution",
    "initial_state",
    "virtual_velocity",
    "density_from_labels",
    "accumulate_q",
    "reconstruct_velocity",
    "residual_F",
    "regularized_residual",
    "picard_step",
    "solve",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PicardConfig:
    """Time step and fixed-point iteration settings.

    ``epsilon=None`` selects one grid cell of heat blur, ``(2pi/n)^2 / 4``;
    ``beta=None`` selects ``d/p + 1.5``.
    """

    dt: float = 1e-3
    picard_tol: float = 1e-10
    max_iters: int = 100
    epsilon: float | None = None
    damping: float = 1.0
    beta: float | None = None
    p: float = 2.0
    substeps: int = 1
    method: str = "spectral"
    mode: str = "stepwise"
    stride: int = 1
    blowup_factor: float = 0.1
    tail_tol: float = 1e-4
    enforce_norm_hypothesis: bool = True

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append(f"dt must be > 0 (got {self.dt})")
        if not self.picard_tol > 0:
            problems.append(f"picard_tol must be > 0 (got {self.picard_tol})")
        if self.max_iters < 1:
            problems.append(f"max_iters must be >= 1 (got {self.max_iters})")
        if not 0 < self.damping <= 1:
            problems.append(f"damping must lie in (0, 1] (got {self.damping})")
        if self.epsilon is not None and self.epsilon < 0:
            problems.append(f"epsilon must be >= 0 (got {self.epsilon})")
        if not self.p > 1:
            problems.append(f"p must be > 1 (got {self.p})")
        if self.substeps < 1:
            problems.append(f"substeps must be >= 1 (got {self.substeps})")
        if self.stride < 1:
            problems.append(f"stride must be >= 1 (got {self.stride})")
        if self.method not in ("spectral", "cubic"):
            problems.append(f"method must be 'spectral' or 'cubic' (got {self.method!r})")
        if self.mode not in ("stepwise", "global"):
            problems.append(f"mode must be 'stepwise' or 'global' (got {self.mode!r})")
        if problems:
            raise ValueError("; ".join(problems))

    def eps_for(self, grid: TorusGrid) -> float:
        return grid.spacing**2 / 4 if self.epsilon is None else self.epsilon

    def beta_for(self, grid: TorusGrid) -> float:
        beta = grid.d / self.p + 1.5 if self.beta is None else self.beta
        if self.enforce_norm_hypothesis and not beta > grid.d / self.p + 1:
            raise ValueError(f"beta={beta} must exceed d/p + 1 = {grid.d / self.p + 1}")
        return beta


@dataclass(frozen=True, eq=False)
class LagrangianState:
    """Snapshot at time ``t``; ``hk`` is the dealiased ``h(rho) - |u|^2/2``."""

    t: float
    u: np.ndarray
    rho: np.ndarray
    q: np.ndarray
    A: FlowMap
    v: np.ndarray
    hk: np.ndarray

    @property
    def grid(self) -> TorusGrid:
        return self.A.grid


@dataclass(frozen=True)
class StepReport:
    iterations: int
    residual: float
    increments: tuple[float, ...]

    @property
    def ratios(self) -> np.ndarray:
        inc = np.asarray(self.increments)
        if inc.size < 2:
            return np.array([])
        with np.errstate(divide="ignore", invalid="ignore"):
            return inc[1:] / inc[:-1]


@dataclass
class Solution:
    states: list
    diagnostics: Diagnostics
    reports: list = field(default_factory=list)


def _integrand(law: PressureLaw, rho: np.ndarray, u: np.ndarray, grid: TorusGrid) -> np.ndarray:
    return dealias(law.h(rho) - 0.5 * np.sum(u**2, axis=0), grid)


def initial_state(
    grid: TorusGrid, rho0: np.ndarray, u0: np.ndarray, law: PressureLaw, t: float = 0.0
) -> LagrangianState:
    check_density(law, rho0, t)
    rho0 = np.array(rho0, dtype=float)
    u0 = np.array(u0, dtype=float)
    return LagrangianState(
        t=t,
        u=u0,
        rho=rho0,
        q=np.zeros(grid.shape),
        A=identity_map(grid, t),
        v=u0.copy(),
        hk=_integrand(law, rho0, u0, grid),
    )


def virtual_velocity(u0: np.ndarray, A: FlowMap, method: str = "spectral") -> np.ndarray:
    """Initial velocity carried passively by the flow: ``u0(A(x))``."""
    return compose(u0, A, method)


def density_from_labels(rho0: np.ndarray, A: FlowMap, method: str = "spectral") -> np.ndarray:
    """``det(grad A) rho0(A)``; raises :class:`FoldingError` on folded maps."""
    return jacobian(A) * compose(rho0, A, method)


def reconstruct_velocity(
    u0: np.ndarray, A: FlowMap, q: np.ndarray, method: str = "spectral"
) -> np.ndarray:
    """``(grad A)^T u0(A) - grad q``."""
    rhs = pushforward_covector(A, compose(u0, A, method))
    if np.any(q):
        rhs = rhs - gradient(q, A.grid)
    return rhs


def _departure(grid, u_old, u_new, t0, dt, substeps, method):
    # offset of the departure points from the nodes over one step
    hist = VelocityHistory(grid, np.array([t0, t0 + dt]), np.stack([u_old, u_new]))
    return _trace_displacement(hist, grid.nodes, t0 + dt, t0, dt / substeps, method)


def _advance(
    prev: LagrangianState,
    u_new: np.ndarray,
    dt: float,
    rho0: np.ndarray,
    u0: np.ndarray,
    law: PressureLaw,
    substeps: int = 1,
    method: str = "spectral",
) -> tuple[LagrangianState, np.ndarray]:
    """Carry ``A``, ``q`` over one step driven by ``prev.u -> u_new``.

    Returns the new state (with ``u = u_new``) and the reconstructed
    velocity built from it.
    """
    grid = prev.grid
    d = grid.d
    t1 = prev.t + dt
    xi = _departure(grid, prev.u, u_new, prev.t, dt, substeps, method)
    carried = interpolate(
        np.concatenate([prev.A.displacement, prev.q[None], prev.hk[None]]), grid, grid.nodes + xi, method
    )
    A = FlowMap(grid, wrap(xi + carried[:d]), t1)
    rho = density_from_labels(rho0, A, method)
    check_density(law, rho, t1)
    hk = _integrand(law, rho, u_new, grid)
    q = carried[d] + 0.5 * dt * (carried[d + 1] + hk)
    v = virtual_velocity(u0, A, method)
    rhs = pushforward_covector(A, v) - gradient(q, grid)
    return LagrangianState(t1, u_new, rho, q, A, v, hk), rhs


def _history_levels(u_hist: VelocityHistory, t: float, dt: float | None):
    # history samples on [0, t], optionally resampled to spacing <= dt
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if not u_hist.is_steady and abs(u_hist.times[0]) > 1e-12:
        raise ValueError("velocity history must start at t = 0")
    if not u_hist.covers(0.0, t):
        raise ValueError(f"velocity history does not cover [0, {t}]")
    if t == 0:
        return np.array([0.0]), u_hist.field_at(0.0)[None]
    if dt is not None or u_hist.is_steady:
        m = max(1, math.ceil(t / dt - 1e-9)) if dt is not None else 1
        times = np.linspace(0.0, t, m + 1)
    else:
        times = u_hist.times[u_hist.times < t - 1e-12 * max(1.0, t)]
        times = np.append(times, t)
    return times, np.stack([u_hist.field_at(s) for s in times])


def _march(grid, times, fields, rho0, u0, law, substeps, method):
    state = initial_state(grid, rho0, fields[0], law, times[0])
    # v starts from u0 even when the history's first sample differs
    state = replace(state, v=np.array(u0, dtype=float))
    rhs = pushforward_covector(state.A, state.v)
    for j in range(times.size - 1):
        state, rhs = _advance(state, fields[j + 1], times[j + 1] - times[j], rho0, u0, law, substeps, method)
    return state, rhs


def accumulate_q(
    u_hist: VelocityHistory,
    integrands: np.ndarray,
    t: float,
    substeps: int = 1,
    method: str = "spectral",
) -> np.ndarray:
    """Integrate the sampled ``integrands[j]`` (at ``u_hist.times[j]``) along
    characteristics ending at each node at time ``t``.

    Solves ``D_t q = integrand``, ``q(0) = 0`` by the composite trapezoid
    rule over the history intervals.
    """
    grid = u_hist.grid
    times = u_hist.times
    integrands = np.asarray(integrands, dtype=float)
    if integrands.shape != times.shape + grid.shape:
        raise ValueError("need one integrand field per history time")
    if abs(times[0]) > 1e-12:
        raise ValueError("velocity history must start at t = 0")
    last = int(np.searchsorted(times, t - 1e-12 * max(1.0, abs(t)), side="left"))
    if last >= times.size or abs(times[last] - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"t={t} is not a history time")
    q = np.zeros(grid.shape)
    for j in range(last):
        dt = times[j + 1] - times[j]
        xi = _departure(grid, u_hist.fields[j], u_hist.fields[j + 1], times[j], dt, substeps, method)
        carried = interpolate(np.stack([q, integrands[j]]), grid, grid.nodes + xi, method)
        q = carried[0] + 0.5 * dt * (carried[1] + integrands[j + 1])
    return q


def residual_F(
    t: float,
    u_hist: VelocityHistory,
    rho0: np.ndarray,
    u0: np.ndarray,
    law: PressureLaw,
    dt: float | None = None,
    substeps: int = 1,
    method: str = "spectral",
) -> np.ndarray:
    """Defect of the velocity reconstruction identity at time ``t``.

    Flows, density and ``q`` are all generated by ``u_hist``; the result is
    ``u(t) - (grad A_t)^T u0(A_t) + grad q(t)``, which vanishes exactly for
    solutions. With ``dt`` the history is resampled at spacing ``<= dt``;
    otherwise its own sample times are used.
    """
    grid = u_hist.grid
    times, fields = _history_levels(u_hist, t, dt)
    state, rhs = _march(grid, times, fields, rho0, u0, law, substeps, method)
    return state.u - rhs


def regularized_residual(
    t: float,
    u_hist: VelocityHistory,
    rho0: np.ndarray,
    u0: np.ndarray,
    law: PressureLaw,
    eps: float,
    dt: float | None = None,
    substeps: int = 1,
    method: str = "spectral",
) -> np.ndarray:
    """:func:`residual_F` at ``u0 + S^eps (u - u0)`` for every history sample."""
    grid = u_hist.grid
    smoothed = u0 + heat_smooth(u_hist.fields - u0, grid, eps)
    return residual_F(
        t, VelocityHistory(grid, u_hist.times, smoothed), rho0, u0, law, dt, substeps, method
    )


def picard_step(
    state: LagrangianState,
    cfg: PicardConfig,
    rho0: np.ndarray,
    u0: np.ndarray,
    law: PressureLaw,
    guess: np.ndarray | None = None,
    dt: float | None = None,
) -> tuple[LagrangianState, StepReport]:
    """Advance ``state`` by one step, solving for the new velocity.

    Iterates ``u <- u - theta S^eps (u - RHS(u))`` where ``RHS`` is the
    reconstructed velocity built from flows of ``u``. The iterate is
    accepted once the undamped increment ``||S^eps (u - RHS(u))||`` in
    ``H^beta_p`` falls below ``picard_tol``; the relaxation ``theta`` is
    halved whenever an increment fails to shrink.

    Raises
    ------
    NoConvergenceError
        After ``cfg.max_iters`` evaluations without acceptance.
    """
    grid = state.grid
    dt = cfg.dt if dt is None else dt
    eps = cfg.eps_for(grid)
    beta = cfg.beta_for(grid)
    u = np.array(state.u if guess is None else guess, dtype=float)
    theta = cfg.damping
    increments = []
    t1 = state.t + dt
    for it in range(1, cfg.max_iters + 1):
        new, rhs = _advance(state, u, dt, rho0, u0, law, cfg.substeps, cfg.method)
        residual = u - rhs
        inc = heat_smooth(residual, grid, eps)
        size = bessel_norm(inc, grid, beta, cfg.p)
        increments.append(size)
        if not np.isfinite(size):
            raise NoConvergenceError("non-finite Picard increment", t1)
        if size <= cfg.picard_tol:
            report = StepReport(it, bessel_norm(residual, grid, beta, cfg.p), tuple(increments))
            return new, report
        if len(increments) > 1 and size >= increments[-2]:
            theta /= 2
        u = u - theta * inc
    raise NoConvergenceError(
        f"no-convergence: Picard increment {increments[-1]:.3g} > tol {cfg.picard_tol:g} "
        f"after {cfg.max_iters} iterations",
        t1,
    )


def _record(diag, grid, state, beta, p, report=None):
    diag.record(
        grid,
        state.t,
        state.rho,
        state.u,
        beta,
        p,
        residual=0.0 if report is None else report.residual,
        min_det=float(np.min(jacobian(state.A, check=False))),
        iterations=0 if report is None else report.iterations,
    )


def solve(
    grid: TorusGrid,
    rho0: np.ndarray,
    u0: np.ndarray,
    law: PressureLaw,
    T: float,
    cfg: PicardConfig | None = None,
) -> Solution:
    """March from ``t = 0`` to ``T`` with steps of at most ``cfg.dt``.

    Every ``cfg.stride``-th state and the final one are kept. Diagnostics
    hold one row per accepted step. Failures raise a
    :class:`SolverError` whose ``partial`` attribute is the
    :class:`Solution` accumulated up to the failure.
    """
    cfg = cfg or PicardConfig()
    if cfg.mode == "global":
        return _solve_global(grid, rho0, u0, law, T, cfg)
    beta = cfg.beta_for(grid)
    nsteps = math.ceil(T / cfg.dt - 1e-9) if T > 0 else 0
    dt = T / nsteps if nsteps else cfg.dt
    state = initial_state(grid, rho0, u0, law)
    sol = Solution([state], Diagnostics())
    _record(sol.diagnostics, grid, state, beta, cfg.p)
    prev_u = None
    try:
        for i in range(nsteps):
            guess = state.u if prev_u is None else 2 * state.u - prev_u
            new, report = picard_step(state, cfg, rho0, u0, law, guess=guess, dt=dt)
            new = replace(new, t=(i + 1) * dt)
            check_resolution(new.rho, new.u, grid, dt, new.t, cfg.blowup_factor, cfg.tail_tol)
            prev_u, state = state.u, new
            _record(sol.diagnostics, grid, state, beta, cfg.p, report)
            sol.reports.append(report)
            if (i + 1) % cfg.stride == 0 or i + 1 == nsteps:
                sol.states.append(state)
            log.debug("t=%.4g iterations=%d residual=%.3g", state.t, report.iterations, report.residual)
    except SolverError as err:
        err.partial = sol
        raise
    return sol


def _solve_global(grid, rho0, u0, law, T, cfg):
    # experimental: one fixed point for the whole trajectory on [0, T]
    beta = cfg.beta_for(grid)
    eps = cfg.eps_for(grid)
    nsteps = max(1, math.ceil(T / cfg.dt - 1e-9))
    dt = T / nsteps
    u = np.repeat(np.asarray(u0, dtype=float)[None], nsteps + 1, axis=0)
    theta = cfg.damping
    last = np.inf
    for sweep in range(1, cfg.max_iters + 1):
        states = [initial_state(grid, rho0, u0, law)]
        worst = 0.0
        for j in range(nsteps):
            new, rhs = _advance(states[-1], u[j + 1], dt, rho0, u0, law, cfg.substeps, cfg.method)
            new = replace(new, t=(j + 1) * dt)
            inc = heat_smooth(u[j + 1] - rhs, grid, eps)
            worst = max(worst, bessel_norm(inc, grid, beta, cfg.p))
            u[j + 1] = u[j + 1] - theta * inc
            states.append(new)
        if not np.isfinite(worst):
            break
        if worst <= cfg.picard_tol:
            sol = Solution([], Diagnostics())
            for j, s in enumerate(states):
                _record(sol.diagnostics, grid, s, beta, cfg.p)
                if j % cfg.stride == 0 or j == nsteps:
                    sol.states.append(s)
            return sol
        if worst >= last:
            theta /= 2
        last = worst
    raise NoConvergenceError(f"no-convergence: global Picard sweep increment {last:.3g}", T)
