"""Derivatives of the flow and back-to-labels maps with respect to velocity.

At a steady base velocity ``u0`` and a time-constant direction ``w``, the
derivative ``M = d/dd X_t^{u0 + dd w}`` at ``dd = 0`` solves the variational
equation along each characteristic,

    dM/ds = grad u0(X_s) M + w(X_s),    M(0) = 0,

integrated here jointly with ``X`` by the same RK4 scheme that produces the
flow. The derivative of the inverse map follows from differentiating
``X_t o A_t = id``: ``dA = -(grad X_t)^{-1}(A_t) M(A_t)``.

Central finite differences provide the independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .flow import VelocityHistory, advance_flow, back_to_labels, compose, grad_map
from .spectral import TorusGrid, gradient, interpolate

__all__ = [
    "LinearizationResult",
    "flow_and_variation",
    "flow_frechet_at_zero",
    "flow_frechet_literal_1d",
    "labels_frechet_at_zero",
    "fd_gateaux",
    "compare_linearization",
    "delta_sweep",
    "flow_functional",
    "labels_functional",
]


@dataclass(frozen=True, eq=False)
class LinearizationResult:
    analytic: np.ndarray
    finite_diff: np.ndarray
    delta: float
    rel_error_l2: float
    rel_error_max: float


def compare_linearization(analytic, finite_diff, delta: float, floor: float = 1e-14) -> LinearizationResult:
    diff = np.asarray(finite_diff) - np.asarray(analytic)
    l2 = np.linalg.norm(diff) / max(np.linalg.norm(analytic), floor)
    mx = np.max(np.abs(diff)) / max(np.max(np.abs(analytic)), floor)
    return LinearizationResult(np.asarray(analytic), np.asarray(finite_diff), delta, float(l2), float(mx))


def _check_inputs(*fields):
    for f in fields:
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite input field")


def _rk4(rhs, y, t, dt):
    nsteps = max(1, math.ceil(t / dt - 1e-9))
    h = t / nsteps
    for _ in range(nsteps):
        k1 = rhs(y)
        k2 = rhs(y + h / 2 * k1)
        k3 = rhs(y + h / 2 * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def flow_and_variation(u0, w, t, grid: TorusGrid, dt: float, method: str = "spectral"):
    """Positions ``X_t(a)`` and variation ``M(a)`` at the grid labels.

    Both are returned with shape ``(d, *grid.shape)``; positions are not
    reduced modulo 2pi.
    """
    _check_inputs(u0, w)
    d = grid.d
    # stacked fields: u0 (d), grad u0 as J[i, j] = d_j u0_i (d*d), w (d)
    jac = np.swapaxes(gradient(u0, grid), 0, 1).reshape((d * d,) + grid.shape)
    stack = np.concatenate([u0, jac, w])
    size = grid.size

    nodes = grid.nodes.reshape(d, -1)

    def rhs(y):
        xi, m = y[:d], y[d:]
        vals = interpolate(stack, grid, nodes + xi, method)
        vel = vals[:d]
        j = vals[d : d + d * d].reshape(d, d, size)
        dm = np.einsum("ijp,jp->ip", j, m) + vals[d + d * d :]
        return np.concatenate([vel, dm])

    y0 = np.zeros((2 * d, size))
    y = y0 if t == 0 else _rk4(rhs, y0, t, dt)
    return (nodes + y[:d]).reshape((d,) + grid.shape), y[d:].reshape((d,) + grid.shape)


def flow_frechet_at_zero(u0, w, t, grid: TorusGrid, dt: float, method: str = "spectral") -> np.ndarray:
    """Derivative of the flow of ``u0 + dd w`` in ``dd`` at 0, per label."""
    return flow_and_variation(u0, w, t, grid, dt, method)[1]


def flow_frechet_literal_1d(u0, w, t, grid: TorusGrid, dt: float, method: str = "spectral") -> np.ndarray:
    """``exp(int_0^t u0'(X_s) ds) * int_0^t w(X_s) ds`` along each characteristic.

    One-dimensional only. This product form is the solution of the
    variational equation only when ``u0'`` or ``w`` vanishes along the
    characteristic; it is provided for comparison.
    """
    if grid.d != 1:
        raise ValueError("the scalar exponential form is defined for d = 1 only")
    _check_inputs(u0, w)
    stack = np.concatenate([u0, gradient(u0[0], grid), w])

    nodes = grid.nodes.reshape(1, -1)

    def rhs(y):
        return interpolate(stack, grid, nodes + y[:1], method)

    y0 = np.zeros((3, grid.size))
    y = y0 if t == 0 else _rk4(rhs, y0, t, dt)
    return (np.exp(y[1]) * y[2]).reshape((1,) + grid.shape)


def labels_frechet_at_zero(u0, w, t, grid: TorusGrid, dt: float, method: str = "spectral") -> np.ndarray:
    """Derivative of the back-to-labels map of ``u0 + dd w`` at ``dd = 0``."""
    d = grid.d
    hist = VelocityHistory.steady(grid, u0)
    A = back_to_labels(hist, t, grid, dt, method)
    X = advance_flow(hist, 0.0, t, grid, dt, method)
    m = flow_frechet_at_zero(u0, w, t, grid, dt, method)
    gx = grad_map(X).reshape((d * d,) + grid.shape)
    pulled = compose(np.concatenate([gx, m]), A, method)
    gxa = np.moveaxis(pulled[: d * d].reshape((d, d) + grid.shape), (0, 1), (-2, -1))
    ma = np.moveaxis(pulled[d * d :], 0, -1)
    da = -np.linalg.solve(gxa, ma[..., None])[..., 0]
    return np.moveaxis(da, -1, 0)


def fd_gateaux(fn: Callable, base, w, delta: float):
    """Central difference ``(fn(base + delta w) - fn(base - delta w)) / (2 delta)``."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    base = np.asarray(base, dtype=float)
    w = np.asarray(w, dtype=float)
    return (np.asarray(fn(base + delta * w)) - np.asarray(fn(base - delta * w))) / (2 * delta)


def delta_sweep(fn: Callable, base, w, reference, deltas=(1e-2, 1e-3, 1e-4)):
    """Relative L2 errors of :func:`fd_gateaux` against ``reference`` and
    the least-squares slope of log(error) against log(delta)."""
    deltas = np.asarray(deltas, dtype=float)
    ref_norm = max(np.linalg.norm(reference), 1e-300)
    errors = np.array(
        [np.linalg.norm(fd_gateaux(fn, base, w, dd) - reference) / ref_norm for dd in deltas]
    )
    slope = float(np.polyfit(np.log(deltas), np.log(errors), 1)[0])
    return errors, slope


def flow_functional(grid: TorusGrid, t: float, dt: float, method: str = "spectral") -> Callable:
    """``u -> displacement of the flow of the steady field u at time t``."""

    def fn(u):
        return advance_flow(VelocityHistory.steady(grid, u), 0.0, t, grid, dt, method).displacement

    return fn


def labels_functional(grid: TorusGrid, t: float, dt: float, method: str = "spectral") -> Callable:
    """``u -> displacement of the back-to-labels map of steady u at time t``."""

    def fn(u):
        return back_to_labels(VelocityHistory.steady(grid, u), t, grid, dt, method).displacement

    return fn
