"""Characteristic integration: flow maps, back-to-labels maps, compositions.

A :class:`FlowMap` stores the periodic displacement ``m(x) - x`` wrapped to
``(-pi, pi]``, which keeps spectral gradients of the map well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FoldingError
from .spectral import TorusGrid, gradient, interpolate

__all__ = [
    "FOLD_TOL",
    "FlowMap",
    "VelocityHistory",
    "identity_map",
    "translation_map",
    "wrap",
    "trace",
    "advance_flow",
    "back_to_labels",
    "grad_map",
    "jacobian",
    "compose",
    "compose_maps",
    "pushforward_covector",
]

FOLD_TOL = 1e-8


def wrap(x):
    """Map angles to ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


@dataclass(frozen=True, eq=False)
class FlowMap:
    grid: TorusGrid
    displacement: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        disp = np.asarray(self.displacement, dtype=float)
        if disp.shape != (self.grid.d,) + self.grid.shape:
            raise ValueError(f"displacement has shape {disp.shape}")
        object.__setattr__(self, "displacement", disp)

    @property
    def positions(self) -> np.ndarray:
        """Image points ``m(x)`` of the nodes (not reduced mod 2pi)."""
        return self.grid.nodes + self.displacement

    @property
    def is_identity(self) -> bool:
        return not np.any(self.displacement)


def identity_map(grid: TorusGrid, time: float = 0.0) -> FlowMap:
    return FlowMap(grid, np.zeros((grid.d,) + grid.shape), time)


def translation_map(grid: TorusGrid, shift, time: float = 0.0) -> FlowMap:
    """Map ``x -> x + shift``."""
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (grid.d,))
    disp = np.broadcast_to(wrap(shift).reshape((grid.d,) + (1,) * grid.d), (grid.d,) + grid.shape)
    return FlowMap(grid, disp.copy(), time)


@dataclass(frozen=True, eq=False)
class VelocityHistory:
    """Velocity samples ``fields[j]`` at increasing ``times[j]``.

    Between samples the velocity is linear in time. A single sample is a
    steady field valid for all times.
    """

    grid: TorusGrid
    times: np.ndarray
    fields: np.ndarray

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        fields = np.asarray(self.fields, dtype=float)
        if fields.shape != times.shape + (self.grid.d,) + self.grid.shape:
            raise ValueError(f"fields shape {fields.shape} does not match times/grid")
        if np.any(np.diff(times) <= 0):
            raise ValueError("history times must be strictly increasing")
        if not np.all(np.isfinite(fields)):
            raise ValueError("non-finite velocity sample in history")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fields", fields)

    @classmethod
    def steady(cls, grid: TorusGrid, u: np.ndarray) -> "VelocityHistory":
        return cls(grid, np.array([0.0]), np.asarray(u)[None])

    @property
    def is_steady(self) -> bool:
        return self.times.size == 1

    def covers(self, t0: float, t1: float) -> bool:
        if self.is_steady:
            return True
        slack = 1e-12 * max(1.0, abs(self.times[-1]))
        lo, hi = min(t0, t1), max(t0, t1)
        return self.times[0] - slack <= lo and hi <= self.times[-1] + slack

    def _bracket(self, t: float) -> tuple[int, float]:
        j = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2))
        w = (t - self.times[j]) / (self.times[j + 1] - self.times[j])
        return j, float(np.clip(w, 0.0, 1.0))

    def field_at(self, t: float) -> np.ndarray:
        """Nodal velocity at time ``t``."""
        if self.is_steady:
            return self.fields[0]
        j, w = self._bracket(t)
        return (1 - w) * self.fields[j] + w * self.fields[j + 1]

    def at(self, t: float, points: np.ndarray, method: str = "spectral") -> np.ndarray:
        """Velocity at time ``t`` evaluated at ``points`` (shape ``(d, ...)``)."""
        if self.is_steady:
            return interpolate(self.fields[0], self.grid, points, method)
        j, w = self._bracket(t)
        if w == 0.0:
            return interpolate(self.fields[j], self.grid, points, method)
        if w == 1.0:
            return interpolate(self.fields[j + 1], self.grid, points, method)
        both = interpolate(self.fields[j : j + 2], self.grid, points, method)
        return (1 - w) * both[0] + w * both[1]


def _trace_displacement(u, points, t0, t1, dt, method):
    # integrate the offset from the start points; it stays small, which keeps
    # rounding well below that of the absolute positions
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not u.covers(t0, t1):
        raise ValueError(f"velocity history does not cover [{t0}, {t1}]")
    x0 = np.asarray(points, dtype=float)
    xi = np.zeros_like(x0)
    if t1 == t0:
        return xi
    nsteps = max(1, math.ceil(abs(t1 - t0) / dt - 1e-9))
    h = (t1 - t0) / nsteps
    for i in range(nsteps):
        t = t0 + i * h
        k1 = u.at(t, x0 + xi, method)
        k2 = u.at(t + h / 2, x0 + (xi + (h / 2) * k1), method)
        k3 = u.at(t + h / 2, x0 + (xi + (h / 2) * k2), method)
        k4 = u.at(t + h, x0 + (xi + h * k3), method)
        xi = xi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return xi


def trace(
    u: VelocityHistory,
    points: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
    method: str = "spectral",
) -> np.ndarray:
    """Integrate ``dx/dt = u(t, x)`` from ``t0`` to ``t1`` with classical RK4.

    Integration runs backward when ``t1 < t0``. The step is the largest
    ``h <= dt`` that divides the interval evenly.
    """
    return np.asarray(points, dtype=float) + _trace_displacement(u, points, t0, t1, dt, method)


def _checked_map(grid: TorusGrid, disp: np.ndarray, time: float) -> FlowMap:
    if not np.all(np.isfinite(disp)):
        raise FoldingError("non-finite characteristic position", time)
    m = FlowMap(grid, wrap(disp), time)
    jacobian(m)
    return m


def advance_flow(
    u: VelocityHistory,
    t0: float,
    t1: float,
    grid: TorusGrid,
    dt: float,
    method: str = "spectral",
) -> FlowMap:
    """Forward flow ``X`` with ``X(a)`` the position at ``t1`` of the label ``a`` at ``t0``.

    Raises
    ------
    FoldingError
        If the Jacobian determinant drops to ``FOLD_TOL`` or below anywhere.
    """
    return _checked_map(grid, _trace_displacement(u, grid.nodes, t0, t1, dt, method), t1)


def back_to_labels(
    u: VelocityHistory,
    t: float,
    grid: TorusGrid,
    dt: float,
    method: str = "spectral",
) -> FlowMap:
    """Back-to-labels map ``A_t``: trace each node from time ``t`` back to 0."""
    return _checked_map(grid, _trace_displacement(u, grid.nodes, t, 0.0, dt, method), t)


def grad_map(m: FlowMap) -> np.ndarray:
    """``G[i, j] = delta_ij + d_j disp_i``, shape ``(d, d, *shape)``."""
    g = np.swapaxes(gradient(m.displacement, m.grid), 0, 1)
    for i in range(m.grid.d):
        g[i, i] += 1.0
    return g


def _det(g: np.ndarray) -> np.ndarray:
    if g.shape[0] == 1:
        return g[0, 0].copy()
    return g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]


def jacobian(m: FlowMap, check: bool = True) -> np.ndarray:
    """Nodewise determinant of :func:`grad_map`.

    Raises :class:`FoldingError` when ``check`` and the minimum is
    ``<= FOLD_TOL``.
    """
    if m.is_identity:
        return np.ones(m.grid.shape)
    det = _det(grad_map(m))
    if check:
        lo = float(np.min(det)) if np.all(np.isfinite(det)) else -np.inf
        if lo <= FOLD_TOL:
            raise FoldingError(f"map folding: min det = {lo:.3g}", m.time)
    return det


def compose(f: np.ndarray, m: FlowMap, method: str = "spectral") -> np.ndarray:
    """Evaluate ``f`` (scalar, vector or stacked fields) at ``m(x)`` per node."""
    if m.is_identity:
        return np.array(f, dtype=float, copy=True)
    return interpolate(f, m.grid, m.positions, method)


def compose_maps(outer: FlowMap, inner: FlowMap, method: str = "spectral") -> FlowMap:
    """The map ``outer o inner``."""
    shift = compose(outer.displacement, inner, method)
    return FlowMap(inner.grid, wrap(inner.displacement + shift), outer.time)


def pushforward_covector(m: FlowMap, v: np.ndarray) -> np.ndarray:
    """Nodewise ``grad_map(m)^T v``."""
    if m.is_identity:
        return np.array(v, dtype=float, copy=True)
    return np.einsum("ij...,i...->j...", grad_map(m), v)
