"""
Solver backends.

A backend loads a ``MilpInstance`` row by row, optimises and hands back
variable values. Backends are single-use: build one per solve so concurrent
policy evaluations never share solver state.
"""

import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, Mapping, Optional

import pulp
from django.conf import settings

from milp.entities import Constraint, MilpInstance, Sense, SolveStatus, Variable, VariableKind
from om_planner.errors import SolverUnavailableError

logger = logging.getLogger("om_planner")


class SolverBackend(ABC):
    """
    add-variable, add-constraint, set-objective, set-limits, optimize, values.

    ``load`` is the template every caller goes through; subclasses only fill
    in the primitive operations.
    """

    name = "abstract"

    def __init__(self) -> None:
        self.diagnostics = ""

    @abstractmethod
    def available(self) -> bool:
        raise NotImplementedError

    @abstractmethod
    def add_variable(self, variable: Variable) -> None:
        raise NotImplementedError

    @abstractmethod
    def add_constraint(self, constraint: Constraint) -> None:
        raise NotImplementedError

    @abstractmethod
    def set_objective(self, coefficients: Mapping[str, float]) -> None:
        """Maximise the linear form; constants are added back by the caller."""
        raise NotImplementedError

    @abstractmethod
    def set_limits(self, gap: float, time_limit: float) -> None:
        raise NotImplementedError

    @abstractmethod
    def optimize(self) -> SolveStatus:
        raise NotImplementedError

    @abstractmethod
    def values(self) -> Dict[str, float]:
        raise NotImplementedError

    def load(self, instance: MilpInstance) -> None:
        for variable in instance.variables.values():
            self.add_variable(variable)
        for constraint in instance.constraints:
            if constraint.coefficients:
                self.add_constraint(constraint)
            elif constraint.residual({}) > 0:
                logger.warning(
                    "Row without variables cannot be satisfied",
                    extra={"row": constraint.name, "tag": constraint.tag},
                )
        self.set_objective(instance.objective)
        self.set_limits(instance.config.gap, instance.config.time_limit)


_SENSES = {
    Sense.LE: pulp.LpConstraintLE,
    Sense.GE: pulp.LpConstraintGE,
    Sense.EQ: pulp.LpConstraintEQ,
}

_SOLUTION_STATUS_TO_STATUS = {
    pulp.LpSolutionOptimal: SolveStatus.OPTIMAL,
    pulp.LpSolutionIntegerFeasible: SolveStatus.TIME_LIMIT_FEASIBLE,
    pulp.LpSolutionInfeasible: SolveStatus.INFEASIBLE,
    pulp.LpSolutionUnbounded: SolveStatus.ERROR,
    pulp.LpSolutionNoSolutionFound: SolveStatus.ERROR,
}


class PulpBackend(SolverBackend):
    """CBC through PuLP; the bundled binary unless ``path`` names another one."""

    name = "cbc"

    def __init__(self, path: Optional[str] = None) -> None:
        super().__init__()
        self.path = path
        self.problem = pulp.LpProblem("om_planner", pulp.LpMaximize)
        self._variables: Dict[str, pulp.LpVariable] = {}
        self._gap = 0.001
        self._time_limit = 1800.0

    def _solver(self) -> pulp.LpSolver:
        options = {"msg": False, "timeLimit": self._time_limit, "gapRel": self._gap}
        if self.path:
            return pulp.COIN_CMD(path=self.path, **options)
        return pulp.PULP_CBC_CMD(**options)

    def available(self) -> bool:
        try:
            return bool(self._solver().available())
        except pulp.PulpSolverError:
            return False

    def add_variable(self, variable: Variable) -> None:
        upper = None if variable.upper == float("inf") else variable.upper
        lower = None if variable.lower == float("-inf") else variable.lower
        # binaries go in as bounded integers so that fixed-to-zero bounds survive
        category = pulp.LpContinuous if variable.kind is VariableKind.CONTINUOUS else pulp.LpInteger
        self._variables[variable.name] = pulp.LpVariable(
            variable.name, lowBound=lower, upBound=upper, cat=category
        )

    def add_constraint(self, constraint: Constraint) -> None:
        expression = pulp.LpAffineExpression(
            [(self._variables[name], coef) for name, coef in constraint.coefficients.items()]
        )
        self.problem.addConstraint(
            pulp.LpConstraint(expression, sense=_SENSES[constraint.sense], rhs=constraint.rhs),
            name=constraint.name,
        )

    def set_objective(self, coefficients: Mapping[str, float]) -> None:
        self.problem.setObjective(
            pulp.LpAffineExpression(
                [(self._variables[name], coef) for name, coef in coefficients.items()]
            )
        )

    def set_limits(self, gap: float, time_limit: float) -> None:
        self._gap = gap
        self._time_limit = time_limit

    def optimize(self) -> SolveStatus:
        try:
            self.problem.solve(self._solver())
        except pulp.PulpSolverError as error:
            self.diagnostics = str(error)
            return SolveStatus.ERROR
        status = _SOLUTION_STATUS_TO_STATUS.get(self.problem.sol_status, SolveStatus.ERROR)
        if status is SolveStatus.ERROR and self.problem.status == pulp.LpStatusInfeasible:
            status = SolveStatus.INFEASIBLE
        self.diagnostics = pulp.LpStatus.get(self.problem.status, "Undefined")
        return status

    def values(self) -> Dict[str, float]:
        return {
            name: float(variable.varValue or 0.0) for name, variable in self._variables.items()
        }


BACKENDS: Dict[str, Callable[[Optional[str]], SolverBackend]] = {
    "cbc": PulpBackend,
    "pulp": PulpBackend,
}


def get_backend(name: Optional[str] = None, path: Optional[str] = None) -> SolverBackend:
    """
    A fresh backend; name and path default to the OM_PLANNER_SOLVER settings.

    Raises:
        SolverUnavailableError: unknown name or no executable found.
    """
    name = (name or getattr(settings, "OM_PLANNER_SOLVER", "cbc") or "cbc").lower()
    path = path or getattr(settings, "OM_PLANNER_SOLVER_PATH", None)
    factory = BACKENDS.get(name)
    if factory is None:
        raise SolverUnavailableError(name, f"known backends are {', '.join(sorted(BACKENDS))}")
    backend = factory(path)
    if not backend.available():
        raise SolverUnavailableError(name, f"no executable at {path}" if path else "bundled CBC not found")
    return backend
