"""
Exception hierarchy shared by the planning apps.

Pure numerical operations raise these; service entry points that run once per
roll catch them and hand back ``(result, error_message)`` tuples instead.
"""

from typing import Any, Optional


class PlannerError(Exception):
    """Base class for every error raised by the planner."""


class InvalidInputError(PlannerError, ValueError):
    """Input data violates an operation's precondition."""


class ConfigurationError(PlannerError):
    """A parameter set is unusable (e.g. a non positive definite prior)."""


class TurbineFailedError(PlannerError):
    """
    The observed amplitude has already reached the failure threshold.

    Attributes:
        distribution: the degenerate point-mass RUL, so callers that expect
            failures (the harness) can keep going with it.
    """

    def __init__(self, message: str, distribution: Optional[Any] = None) -> None:
        super().__init__(message)
        self.distribution = distribution


class DivisionByZeroError(PlannerError, ZeroDivisionError):
    """Zero denominator in the dynamic maintenance cost rate."""


class SolverUnavailableError(PlannerError):
    """The requested MILP backend cannot be found on this machine."""

    def __init__(self, backend: str, detail: str = "") -> None:
        message = f"MILP backend '{backend}' is not available"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.backend = backend
