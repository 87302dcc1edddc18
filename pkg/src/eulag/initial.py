"""Named initial data and Fourier-polynomial fields on the torus.

Every preset returns ``(rho0, u0)`` sampled on the grid nodes. Parameters
are keyword arguments with the defaults listed in :data:`PRESETS`.

A Fourier field is a mean plus a list of terms ``{amp, kind, k}`` with
``kind`` either ``"sin"`` or ``"cos"`` and ``k`` an integer wave vector,
evaluated as ``amp * sin(k . x)`` or ``amp * cos(k . x)``.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from .spectral import TorusGrid

__all__ = ["PRESETS", "fourier_field", "make_initial", "preset_names"]


def fourier_field(grid: TorusGrid, mean: float = 0.0, terms: Sequence[Mapping] = ()) -> np.ndarray:
    """Scalar Fourier polynomial on the grid nodes.

    Raises ``ValueError`` for malformed terms or for wave numbers at or
    beyond the dealiasing cutoff ``n/3``.
    """
    out = np.full(grid.shape, float(mean))
    for i, term in enumerate(terms):
        unknown = set(term) - {"amp", "kind", "k"}
        if unknown:
            raise ValueError(f"term {i}: unknown keys {sorted(unknown)}")
        kind = term.get("kind", "sin")
        if kind not in ("sin", "cos"):
            raise ValueError(f"term {i}: kind must be 'sin' or 'cos', got {kind!r}")
        k = np.atleast_1d(np.asarray(term.get("k", [1] * grid.d)))
        if k.shape != (grid.d,) or not np.all(k == np.round(k)):
            raise ValueError(f"term {i}: k must be {grid.d} integer(s), got {term.get('k')!r}")
        if np.any(np.abs(k) >= grid.n / 3):
            raise ValueError(f"term {i}: wave number {k.tolist()} not below the cutoff n/3 = {grid.n / 3:g}")
        phase = np.tensordot(k.astype(float), grid.nodes, axes=1)
        out += float(term.get("amp", 1.0)) * (np.sin(phase) if kind == "sin" else np.cos(phase))
    return out


def _x(grid):
    return grid.nodes[0]


def _vec(grid, *components):
    u = np.zeros((grid.d,) + grid.shape)
    for i, c in enumerate(components[: grid.d]):
        u[i] = c
    return u


def _constant(grid, rho=1.0, velocity=0.0):
    vel = np.broadcast_to(np.asarray(velocity, dtype=float), (grid.d,))
    return np.full(grid.shape, float(rho)), _vec(grid, *(np.full(grid.shape, v) for v in vel))


def _translation(grid, amplitude=0.2, velocity=0.5):
    # density wave on a uniform stream; not steady in the moving frame unless amplitude = 0
    vel = np.broadcast_to(np.asarray(velocity, dtype=float), (grid.d,))
    rho = 1.0 + amplitude * np.sin(grid.nodes.sum(axis=0))
    return rho, _vec(grid, *(np.full(grid.shape, v) for v in vel))


def _smooth(grid, rho_amp=0.2, u_amp=0.1):
    x = _x(grid)
    return 1.0 + rho_amp * np.sin(x), _vec(grid, u_amp * np.sin(x))


def _acoustic(grid, amplitude=1e-3):
    return np.ones(grid.shape), _vec(grid, amplitude * np.sin(_x(grid)))


def _steep(grid, amplitude=0.9):
    return 1.0 + amplitude * np.sin(_x(grid)), np.zeros((grid.d,) + grid.shape)


def _vortex(grid, amplitude=0.1, rho_amp=0.0):
    if grid.d != 2:
        raise ValueError("the vortex preset needs d = 2")
    x, y = grid.nodes
    rho = 1.0 + rho_amp * np.cos(x) * np.cos(y)
    return rho, amplitude * np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])


PRESETS: dict[str, tuple[Callable, dict]] = {
    "constant": (_constant, {"rho": 1.0, "velocity": 0.0}),
    "translation": (_translation, {"amplitude": 0.2, "velocity": 0.5}),
    "smooth": (_smooth, {"rho_amp": 0.2, "u_amp": 0.1}),
    "acoustic": (_acoustic, {"amplitude": 1e-3}),
    "steep": (_steep, {"amplitude": 0.9}),
    "vortex": (_vortex, {"amplitude": 0.1, "rho_amp": 0.0}),
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def make_initial(grid: TorusGrid, preset: str | None = None, params: Mapping | None = None,
                 rho: Mapping | None = None, u: Sequence[Mapping] | None = None):
    """Build ``(rho0, u0)`` from a preset, Fourier specifications, or both.

    Explicit ``rho`` (a Fourier mapping with ``mean`` and ``terms``) or
    ``u`` (one such mapping per component) override the preset's fields.
    """
    params = dict(params or {})
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; available: {', '.join(preset_names())}")
        fn, defaults = PRESETS[preset]
        unknown = set(params) - set(defaults)
        if unknown:
            raise ValueError(f"preset {preset!r}: unknown parameters {sorted(unknown)}")
        rho0, u0 = fn(grid, **{**defaults, **params})
    else:
        if params:
            raise ValueError("preset parameters given without a preset")
        rho0, u0 = np.ones(grid.shape), np.zeros((grid.d,) + grid.shape)
    if rho is not None:
        rho0 = fourier_field(grid, rho.get("mean", 1.0), rho.get("terms", ()))
    if u is not None:
        if len(u) != grid.d:
            raise ValueError(f"u needs {grid.d} component(s), got {len(u)}")
        u0 = np.stack([fourier_field(grid, c.get("mean", 0.0), c.get("terms", ())) for c in u])
    return rho0, u0
