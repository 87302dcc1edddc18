"""Barotropic pressure laws and their enthalpy.

The enthalpy is the primitive of ``p'(rho) / rho`` normalized by ``h(1) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import VacuumError

Func = Callable[[np.ndarray], np.ndarray]

RHO_MIN = 1e-6


@dataclass(frozen=True)
class PressureLaw:
    name: str
    p: Func
    dp: Func
    h: Func
    dh: Func
    rho_min: float = RHO_MIN
    params: dict = field(default_factory=dict)

    def sound_speed(self, rho):
        return np.sqrt(self.dp(rho))


def gamma_law(kappa: float = 1.0, gamma: float = 1.4, rho_min: float = RHO_MIN) -> PressureLaw:
    """Polytropic law ``p = kappa rho^gamma``."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if gamma == 1:
        raise ValueError("gamma = 1 is the isothermal law; use isothermal_law")
    if gamma < 1:
        raise ValueError(f"gamma must be > 1, got {gamma}")
    c = kappa * gamma / (gamma - 1)
    return PressureLaw(
        name="gamma",
        p=lambda r: kappa * np.power(r, gamma),
        dp=lambda r: kappa * gamma * np.power(r, gamma - 1),
        h=lambda r: c * np.expm1((gamma - 1) * np.log(r)),
        dh=lambda r: kappa * gamma * np.power(r, gamma - 2),
        rho_min=rho_min,
        params={"kappa": kappa, "gamma": gamma},
    )


def isothermal_law(kappa: float = 1.0, rho_min: float = RHO_MIN) -> PressureLaw:
    """``p = kappa rho``, ``h = kappa log(rho)``."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return PressureLaw(
        name="isothermal",
        p=lambda r: kappa * np.asarray(r, dtype=float),
        dp=lambda r: np.full_like(np.asarray(r, dtype=float), kappa),
        h=lambda r: kappa * np.log(r),
        dh=lambda r: kappa / np.asarray(r, dtype=float),
        rho_min=rho_min,
        params={"kappa": kappa},
    )


def tabulated_law(rho, p, rho_min: float | None = None) -> PressureLaw:
    """Monotone cubic (PCHIP) interpolant of tabulated ``(rho, p)`` pairs.

    The enthalpy is integrated in closed form piece by piece, so
    ``h' = p'/rho`` holds to round-off inside the table. Evaluation outside
    ``[rho[0], rho[-1]]`` raises ``ValueError``.
    """
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=float)
    if rho.ndim != 1 or rho.shape != p.shape or rho.size < 2:
        raise ValueError("rho and p must be 1-D arrays of equal length >= 2")
    if np.any(np.diff(rho) <= 0) or rho[0] <= 0:
        raise ValueError("rho must be positive and strictly increasing")
    if np.any(np.diff(p) <= 0):
        raise ValueError("p must be strictly increasing (p' > 0)")
    if not rho[0] <= 1.0 <= rho[-1]:
        raise ValueError("table must contain rho = 1 (enthalpy reference)")

    spline = PchipInterpolator(rho, p, extrapolate=False)
    dspline = spline.derivative()
    # p'(x_i + s) = a s^2 + b s + c on piece i
    a = 3 * spline.c[0]
    b = 2 * spline.c[1]
    c = spline.c[2]
    xi = rho[:-1]
    lin = b - a * xi
    res = c - b * xi + a * xi**2

    def piece_integral(i, s):
        return a[i] * s**2 / 2 + lin[i] * s + res[i] * np.log1p(s / xi[i])

    widths = np.diff(rho)
    cum = np.concatenate([[0.0], np.cumsum(piece_integral(np.arange(xi.size), widths))])
    i1 = min(np.searchsorted(rho, 1.0, side="right") - 1, xi.size - 1)
    h_at_1 = cum[i1] + piece_integral(i1, 1.0 - xi[i1])

    def _check(r):
        r = np.asarray(r, dtype=float)
        if np.any(r < rho[0]) or np.any(r > rho[-1]):
            raise ValueError(f"density outside tabulated range [{rho[0]}, {rho[-1]}]")
        return r

    def h(r):
        r = _check(r)
        i = np.clip(np.searchsorted(rho, r, side="right") - 1, 0, xi.size - 1)
        return cum[i] + piece_integral(i, r - xi[i]) - h_at_1

    def dp(r):
        return dspline(_check(r))

    return PressureLaw(
        name="tabulated",
        p=lambda r: spline(_check(r)),
        dp=dp,
        h=h,
        dh=lambda r: dp(r) / np.asarray(r, dtype=float),
        rho_min=float(rho[0]) if rho_min is None else rho_min,
        params={"rho": rho.tolist(), "p": p.tolist()},
    )


LAWS = {"gamma": gamma_law, "isothermal": isothermal_law, "tabulated": tabulated_law}


def make_law(name: str, **params) -> PressureLaw:
    try:
        factory = LAWS[name]
    except KeyError:
        raise ValueError(
            f"unknown pressure law {name!r}; available: {', '.join(sorted(LAWS))}"
        ) from None
    return factory(**params)


def check_density(law: PressureLaw, rho: np.ndarray, t: float | None = None) -> None:
    if not np.all(np.isfinite(rho)):
        raise VacuumError("non-finite density", t)
    lo = float(np.min(rho))
    if lo < law.rho_min:
        raise VacuumError(f"density {lo:.3g} below rho_min={law.rho_min:g}", t)


def enthalpy_field(law: PressureLaw, rho: np.ndarray, t: float | None = None) -> np.ndarray:
    """Nodewise ``h(rho)``; raises :class:`VacuumError` below ``law.rho_min``."""
    check_density(law, rho, t)
    return law.h(rho)
