"""Eulerian pseudo-spectral method-of-lines solver for isentropic Euler.

Evolves the primitive variables ``(rho, u)`` with classical RK4 and
two-thirds dealiasing of every nonlinear term. It serves as the independent
oracle for the Lagrangian solver and, through :func:`advect_solve`, for the
transport of labels and virtual velocities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BlowupError, CFLError, SolverError
from .flow import VelocityHistory
from .spectral import TorusGrid, dealias, divergence, gradient
from .thermo import PressureLaw, check_density

__all__ = [
    "EulerState",
    "euler_rhs",
    "rk4_solve",
    "advect_solve",
    "cfl_limit",
    "spectral_tail",
    "check_resolution",
    "momentum_residual",
]

BLOWUP_FACTOR = 0.1
TAIL_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class EulerState:
    t: float
    rho: np.ndarray
    u: np.ndarray


def _advect(u: np.ndarray, f: np.ndarray, grid: TorusGrid) -> np.ndarray:
    # (u . grad) f for scalar or vector f
    return np.einsum("j...,j...->...", u, gradient(f, grid))


def euler_rhs(state: EulerState, law: PressureLaw, grid: TorusGrid):
    """Time derivatives ``(drho, du)`` of the isentropic Euler system.

    The continuity term is evaluated as ``-div(rho u)``, which equals
    ``-(u . grad) rho - rho div u`` for resolved fields and keeps the mean
    density exactly invariant.
    """
    check_density(law, state.rho, state.t)
    rho, u = state.rho, state.u
    drho = -divergence(dealias(rho * u, grid), grid)
    du = -dealias(_advect(u, u, grid), grid) - gradient(dealias(law.h(rho), grid), grid)
    return drho, du


def momentum_residual(before, at, after, law: PressureLaw, grid: TorusGrid, form: str = "conservative") -> np.ndarray:
    """Momentum defect of three consecutive, equally spaced samples.

    ``form="conservative"`` gives ``d_t(rho u) + div(rho u (x) u) + grad p``;
    ``form="primitive"`` gives ``d_t u + (u . grad) u + grad h(rho)``. The
    time derivative is the central difference, so the defect carries an
    ``O(dt^2)`` contribution from it.
    """
    h = after.t - before.t
    if not h > 0 or abs((at.t - before.t) - (after.t - at.t)) > 1e-9 * h:
        raise ValueError("need three equally spaced, increasing times")
    rho, u = at.rho, at.u
    if form == "primitive":
        return (after.u - before.u) / h + dealias(_advect(u, u, grid), grid) + gradient(
            dealias(law.h(rho), grid), grid
        )
    if form != "conservative":
        raise ValueError(f"form must be 'conservative' or 'primitive', got {form!r}")
    flux = rho * u[:, None] * u[None, :]
    div_flux = np.stack([divergence(dealias(flux[:, i], grid), grid) for i in range(grid.d)])
    dm = (after.rho * after.u - before.rho * before.u) / h
    return dm + div_flux + gradient(dealias(law.p(rho), grid), grid)


def cfl_limit(rho: np.ndarray, u: np.ndarray, law: PressureLaw, grid: TorusGrid) -> float:
    """Largest admissible step ``0.5 h / (max|u| + max c)``."""
    speed = np.max(np.sqrt(np.sum(u**2, axis=0))) + np.max(law.sound_speed(rho))
    return 0.5 * grid.spacing / max(float(speed), 1e-300)


def spectral_tail(f: np.ndarray, grid: TorusGrid) -> float:
    """Largest Fourier amplitude in the band ``n/6 <= max|k_i| < n/3``
    relative to the largest non-constant amplitude."""
    fh = np.abs(grid.fft(f)).reshape((-1,) + grid.k2.shape)
    kmax = np.zeros(grid.k2.shape)
    for k in grid._k:
        kmax = np.maximum(kmax, np.abs(k))
    band = (kmax >= grid.n / 6) & (kmax < grid.n / 3)
    body = fh[:, kmax > 0]
    top = float(body.max()) if body.size else 0.0
    if top == 0.0:
        return 0.0
    return float(fh[:, band].max()) / top


def check_resolution(
    rho: np.ndarray,
    u: np.ndarray,
    grid: TorusGrid,
    dt: float,
    t: float,
    blowup_factor: float = BLOWUP_FACTOR,
    tail_tol: float = TAIL_TOL,
) -> None:
    """Refuse states beyond the classical regime.

    Raises :class:`BlowupError` on non-finite values, on
    ``max|grad u| * dt > blowup_factor`` or on loss of spectral resolution.
    """
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u))):
        raise BlowupError("non-finite state", t)
    gmax = float(np.max(np.abs(gradient(u, grid))))
    if gmax * dt > blowup_factor:
        raise BlowupError(f"approaching blowup: max|grad u| = {gmax:.3g}", t)
    tail = max(spectral_tail(u, grid), spectral_tail(rho, grid))
    if tail > tail_tol:
        raise BlowupError(f"approaching blowup: under-resolved, spectral tail {tail:.2e}", t)


def _nsteps(T: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    return math.ceil(T / dt - 1e-9) if T > 0 else 0


def rk4_solve(
    state0: EulerState,
    law: PressureLaw,
    grid: TorusGrid,
    T: float,
    dt: float,
    stride: int = 1,
    blowup_factor: float = BLOWUP_FACTOR,
    tail_tol: float = TAIL_TOL,
    callback=None,
) -> list[EulerState]:
    """Integrate to time ``T``; returns every ``stride``-th state plus the last.

    The step is ``T / ceil(T / dt)``. ``callback``, if given, is called with
    the initial state and with every accepted state. Failures raise a
    :class:`SolverError` whose ``partial`` attribute holds the states
    produced so far.
    """
    nsteps = _nsteps(T, dt)
    h = T / nsteps if nsteps else dt
    state = EulerState(state0.t, np.array(state0.rho, dtype=float), np.array(state0.u, dtype=float))
    out = [state]

    def f(rho, u, t):
        return euler_rhs(EulerState(t, rho, u), law, grid)

    try:
        check_density(law, state.rho, state.t)
        if callback is not None:
            callback(state)
        for i in range(nsteps):
            rho, u, t = state.rho, state.u, state.t
            if h > cfl_limit(rho, u, law, grid) * (1 + 1e-12):
                raise CFLError(f"dt={h:.3g} exceeds CFL limit {cfl_limit(rho, u, law, grid):.3g}", t)
            k1 = f(rho, u, t)
            k2 = f(rho + h / 2 * k1[0], u + h / 2 * k1[1], t + h / 2)
            k3 = f(rho + h / 2 * k2[0], u + h / 2 * k2[1], t + h / 2)
            k4 = f(rho + h * k3[0], u + h * k3[1], t + h)
            rho = rho + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            u = u + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            t_new = state0.t + (i + 1) * h
            check_resolution(rho, u, grid, h, t_new, blowup_factor, tail_tol)
            check_density(law, rho, t_new)
            state = EulerState(t_new, rho, u)
            if callback is not None:
                callback(state)
            if (i + 1) % stride == 0 or i + 1 == nsteps:
                out.append(state)
    except SolverError as err:
        err.partial = out
        raise
    return out


def advect_solve(
    u: VelocityHistory,
    f0: np.ndarray,
    T: float,
    dt: float,
    t0: float = 0.0,
) -> np.ndarray:
    """Solve ``f_t + (u . grad) f = 0`` from ``t0`` to ``t0 + T`` by RK4.

    ``f0`` may be a scalar field or a stack of fields sharing the velocity.
    """
    grid = u.grid
    nsteps = _nsteps(T, dt)
    h = T / nsteps if nsteps else dt
    f = np.array(f0, dtype=float, copy=True)
    if nsteps == 0:
        return f

    def rhs(g, t):
        return -dealias(_advect(u.field_at(t), g, grid), grid)

    for i in range(nsteps):
        t = t0 + i * h
        speed = float(np.max(np.abs(u.field_at(t))))
        if h * speed > 0.5 * grid.spacing * grid.d:
            raise CFLError(f"dt={h:.3g} too large for advection speed {speed:.3g}", t)
        k1 = rhs(f, t)
        k2 = rhs(f + h / 2 * k1, t + h / 2)
        k3 = rhs(f + h / 2 * k2, t + h / 2)
        k4 = rhs(f + h * k3, t + h)
        f = f + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return f
