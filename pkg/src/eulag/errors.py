"""Exception types raised by the solvers and field operations."""

from __future__ import annotations


class SolverError(RuntimeError):
    """Base class for failures during time integration.

    ``t`` is the simulation time at which the failure was detected, or
    ``None`` when the error is not tied to a time level.
    """

    kind = "solver error"

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        if t is not None:
            message = f"{message} (at t={t:.6g})"
        super().__init__(message)


class FoldingError(SolverError):
    kind = "folding"


class VacuumError(SolverError):
    kind = "vacuum"


class BlowupError(SolverError):
    kind = "blowup"


class NoConvergenceError(SolverError):
    kind = "no-convergence"


class CFLError(SolverError):
    kind = "cfl"


class ConfigError(ValueError):
    """Configuration file could not be parsed or failed validation.

    ``problems`` lists every violated constraint, one string per field.
    """

    def __init__(self, problems: list[str] | str):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))
