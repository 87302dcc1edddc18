"""Compressible isentropic Euler flow on the torus, solved in an
Eulerian-Lagrangian formulation and by a reference pseudo-spectral method."""

from .errors import (
    BlowupError,
    CFLError,
    ConfigError,
    FoldingError,
    NoConvergenceError,
    SolverError,
    VacuumError,
)
from .flow import FlowMap, VelocityHistory, advance_flow, back_to_labels, compose, jacobian
from .lagrangian import PicardConfig, picard_step, residual_F, solve
from .reference import EulerState, rk4_solve
from .spectral import TorusGrid, make_grid
from .thermo import PressureLaw, gamma_law, isothermal_law, make_law, tabulated_law

__all__ = [
    "BlowupError",
    "CFLError",
    "ConfigError",
    "EulerState",
    "FlowMap",
    "FoldingError",
    "NoConvergenceError",
    "PicardConfig",
    "PressureLaw",
    "SolverError",
    "TorusGrid",
    "VacuumError",
    "VelocityHistory",
    "advance_flow",
    "back_to_labels",
    "compose",
    "gamma_law",
    "isothermal_law",
    "jacobian",
    "make_grid",
    "make_law",
    "picard_step",
    "residual_F",
    "rk4_solve",
    "solve",
    "tabulated_law",
]
__version__ = "0.1.0"
