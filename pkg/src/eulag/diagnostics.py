"""Per-step scalar time series shared by both solvers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields

import numpy as np

from .spectral import TorusGrid, bessel_norm, mean


@dataclass
class Diagnostics:
    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    rho_norm: list = field(default_factory=list)
    u_norm: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    min_rho: list = field(default_factory=list)
    min_det: list = field(default_factory=list)
    iterations: list = field(default_factory=list)

    def record(
        self,
        grid: TorusGrid,
        t: float,
        rho: np.ndarray,
        u: np.ndarray,
        beta: float,
        p: float,
        residual: float = float("nan"),
        min_det: float = float("nan"),
        iterations: int = 0,
    ) -> None:
        self.t.append(float(t))
        self.mass.append(float(mean(rho, grid)))
        self.rho_norm.append(bessel_norm(rho, grid, beta, p))
        self.u_norm.append(bessel_norm(u, grid, beta, p))
        self.residual.append(float(residual))
        self.min_rho.append(float(np.min(rho)))
        self.min_det.append(float(min_det))
        self.iterations.append(int(iterations))

    def __len__(self) -> int:
        return len(self.t)

    @property
    def columns(self) -> list[str]:
        return [f.name for f in fields(self)]

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {name: np.asarray(getattr(self, name)) for name in self.columns}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in zip(*(getattr(self, name) for name in self.columns)):
                writer.writerow([repr(v) for v in row])
