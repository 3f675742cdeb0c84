"""
Types for the yaw and maintenance MILP.

Hours of the short-term day are clock hours 0..23; long-term days are 1..N_D.
The instance is an immutable ledger of variables and rows that any backend
can load, so counting, verification and LP export never touch a solver.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import numpy.typing as npt

from om_planner.errors import ConfigurationError, InvalidInputError

logger = logging.getLogger("om_planner")


class VariableKind(str, enum.Enum):
    BINARY = "binary"
    INTEGER = "integer"
    CONTINUOUS = "continuous"


class Sense(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT_FEASIBLE = "time_limit_feasible"
    INFEASIBLE = "infeasible"
    ERROR = "error"
    # decisions produced by a rule instead of a solver
    HEURISTIC = "heuristic"

    @property
    def has_decisions(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.TIME_LIMIT_FEASIBLE, SolveStatus.HEURISTIC)


class Criticality(str, enum.Enum):
    UNIT = "unit"
    CYCLE = "cycle"


@dataclass(frozen=True)
class MilpConfig:
    """
    Costs, limits and solver settings.

    Attributes:
        preventive_cost (float): C^PM, $ per preventive task
        corrective_cost (float): C^CM, $ per corrective task
        crew_cost (float): C^x, $ per crew hour
        overtime_cost (float): C^q, $ per overtime hour
        vessel_cost (float): C^r, $ per vessel day
        rul_value (float): C^λ, $ per day of remaining life
        crews (int): N^x
        shift_hours (float): N^q, regular hours per crew and day
        max_overtime (float): N^H
        maintenance_threshold_days (float): N^θ, RUL below which a turbine must be scheduled
        interruption_upfront (float | None): U_s; None means one extra vessel day
        interruption_hourly (float | None): Y_s; None means the scenario's mean price times R
        lth_days (int): N_D
        n_scenarios (int): N_S
        big_m (float | None): None for per-row tight values, else one global M
        gap (float): relative optimality gap
        time_limit (float): seconds
        integer_overtime (bool): keep q and q^L integer
        criticality (Criticality): how the harness sets ξ
    """

    preventive_cost: float = 4000.0
    corrective_cost: float = 10000.0
    crew_cost: float = 250.0
    overtime_cost: float = 125.0
    vessel_cost: float = 2500.0
    rul_value: float = 30.0
    crews: int = 2
    shift_hours: float = 8.0
    max_overtime: float = 8.0
    maintenance_threshold_days: float = 10.0
    interruption_upfront: Optional[float] = None
    interruption_hourly: Optional[float] = None
    lth_days: int = 9
    n_scenarios: int = 50
    big_m: Optional[float] = None
    gap: float = 0.001
    time_limit: float = 1800.0
    integer_overtime: bool = False
    criticality: Criticality = Criticality.UNIT

    def __post_init__(self) -> None:
        costs = {
            "preventive_cost": self.preventive_cost,
            "corrective_cost": self.corrective_cost,
            "crew_cost": self.crew_cost,
            "overtime_cost": self.overtime_cost,
            "vessel_cost": self.vessel_cost,
            "rul_value": self.rul_value,
        }
        for name, value in costs.items():
            if value < 0:
                raise ConfigurationError(f"{name} must be nonnegative")
        if self.corrective_cost < self.preventive_cost:
            raise ConfigurationError("Corrective cost must be at least the preventive cost")
        if self.crews < 1 or self.shift_hours < 0 or self.max_overtime < 0:
            raise ConfigurationError("Crew limits must be nonnegative with at least one crew")
        if self.lth_days < 1 or self.n_scenarios < 1:
            raise ConfigurationError("Need at least one long-term day and one scenario")
        if not 0 < self.gap < 1:
            raise ConfigurationError("Optimality gap must lie in (0, 1)")
        if self.time_limit <= 0:
            raise ConfigurationError("Time limit must be positive")
        if self.big_m is not None and self.big_m <= 0:
            raise ConfigurationError("A global big-M must be positive")
        for name in ("interruption_upfront", "interruption_hourly"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigurationError(f"{name} must be nonnegative")
        if self.maintenance_threshold_days > self.lth_days + 1:
            logger.warning(
                "Maintenance threshold exceeds the optimisation horizon",
                extra={
                    "maintenance_threshold_days": self.maintenance_threshold_days,
                    "horizon_days": self.lth_days + 1,
                },
            )


@dataclass(frozen=True)
class TurbineBoundary:
    """
    Per-turbine state the optimiser inherits from the previous day.

    Attributes:
        carryover (bool): ρ, a task started earlier is still unfinished
        criticality (float): ξ, weight on the repair cost
        elapsed_days (float): t^c, days since the last renewal
        remaining_hours (float): work left on the carried-over task
        observed_failure (bool): the turbine is seen stopped; only rule-based
            policies read it, the MILP learns failure from λ⁰
    """

    carryover: bool = False
    criticality: float = 1.0
    elapsed_days: float = 1.0
    remaining_hours: float = 0.0
    observed_failure: bool = False

    def __post_init__(self) -> None:
        if self.remaining_hours < 0 or self.criticality < 0:
            raise InvalidInputError("Remaining hours and criticality must be nonnegative")
        if self.remaining_hours > 0 and not self.carryover:
            raise InvalidInputError("Remaining task hours require the carry-over flag")


@dataclass(frozen=True)
class Variable:
    name: str
    family: str
    index: Tuple[int, ...]
    kind: VariableKind
    lower: float = 0.0
    upper: float = float("inf")


@dataclass(frozen=True)
class Constraint:
    name: str
    tag: str
    coefficients: Mapping[str, float]
    sense: Sense
    rhs: float

    def residual(self, values: Mapping[str, float]) -> float:
        """Amount by which ``values`` violate the row; 0 when satisfied."""
        lhs = sum(coef * values.get(name, 0.0) for name, coef in self.coefficients.items())
        if self.sense is Sense.LE:
            return max(lhs - self.rhs, 0.0)
        if self.sense is Sense.GE:
            return max(self.rhs - lhs, 0.0)
        return abs(lhs - self.rhs)


@dataclass(frozen=True, eq=False)
class InstanceData:
    """
    Numbers the rows were built from, kept for independent re-evaluation.

    Shapes follow the scenario tensors; ``carryover``, ``criticality`` and
    ``elapsed_days`` are per turbine, ``interruption_*`` per scenario.
    """

    price_sth: npt.NDArray[np.float64]  # (24, N_S)
    price_lth: npt.NDArray[np.float64]  # (N_D, N_S)
    power_sth: npt.NDArray[np.float64]  # (24, N_I, J, N_S)
    power_lth: npt.NDArray[np.float64]  # (N_D, N_I, J, N_S)
    power_lth_max: npt.NDArray[np.float64]  # (N_D, N_I, N_S)
    factor_sth: npt.NDArray[np.float64]
    factor_lth: npt.NDArray[np.float64]
    mission_sth: npt.NDArray[np.float64]  # (24, N_I, N_S)
    mission_lth: npt.NDArray[np.float64]  # (N_D, N_I, N_S)
    rul0: npt.NDArray[np.float64]  # (N_I, N_S)
    zeta0: npt.NDArray[np.float64]
    zeta0_lth: npt.NDArray[np.float64]
    carryover: npt.NDArray[np.float64]
    criticality: npt.NDArray[np.float64]
    elapsed_days: npt.NDArray[np.float64]
    interruption_upfront: npt.NDArray[np.float64]
    interruption_hourly: npt.NDArray[np.float64]
    rated_capacity: float
    first_light: int
    last_light: int


@dataclass(frozen=True, eq=False)
class MilpInstance:
    variables: Mapping[str, Variable]
    constraints: Tuple[Constraint, ...]
    objective: Mapping[str, float]
    objective_constant: float
    objective_terms: Mapping[str, Tuple[Mapping[str, float], float]]
    config: MilpConfig
    data: InstanceData
    n_turbines: int
    lth_days: int
    n_levels: int
    n_scenarios: int
    yaw_fixed_level: Optional[int] = None

    @property
    def sizes(self) -> Tuple[int, int, int, int]:
        return self.n_turbines, self.lth_days, self.n_levels, self.n_scenarios

    def counts(self) -> Dict[str, int]:
        """Variable and row counts, totals first then per kind and per tag."""
        result: Dict[str, int] = {
            "variables": len(self.variables),
            "constraints": len(self.constraints),
        }
        for kind in VariableKind:
            result[f"variables.{kind.value}"] = sum(
                1 for variable in self.variables.values() if variable.kind is kind
            )
        for constraint in self.constraints:
            key = f"constraints.{constraint.tag}"
            result[key] = result.get(key, 0) + 1
        return result

    @property
    def tags(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(constraint.tag for constraint in self.constraints))

    def objective_value(self, values: Mapping[str, float]) -> float:
        return self.objective_constant + sum(
            coef * values.get(name, 0.0) for name, coef in self.objective.items()
        )


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """
    The four parts of the objective.

    ``prolonged_interruptions`` is the expected cost of tasks spilling past
    the short-term day and enters the total with a minus sign.
    """

    short_term_profit: float
    long_term_profit: float
    prolonged_interruptions: float
    end_of_horizon: float

    @property
    def total(self) -> float:
        return (
            self.short_term_profit
            + self.long_term_profit
            - self.prolonged_interruptions
            + self.end_of_horizon
        )


@dataclass(frozen=True, eq=False)
class MilpSolution:
    """
    Extracted decisions; decision arrays are None when the solve produced none.

    Attributes:
        sth_maintenance: (24, N_I) start indicators m
        sth_yaw: (24, N_I, J) one-hot yaw choices γ, an all-zero row is a shut-down hour
        lth_maintenance: (N_D, N_I, N_S)
        lth_yaw: (N_D, N_I, J, N_S)
        rul: (N_I, N_S) λ at the end of the horizon
    """

    status: SolveStatus
    objective: Optional[float] = None
    breakdown: Optional[ObjectiveBreakdown] = None
    gap: Optional[float] = None
    sth_maintenance: Optional[npt.NDArray[np.int_]] = None
    sth_yaw: Optional[npt.NDArray[np.int_]] = None
    lth_maintenance: Optional[npt.NDArray[np.int_]] = None
    lth_yaw: Optional[npt.NDArray[np.int_]] = None
    rul: Optional[npt.NDArray[np.float64]] = None
    values: Mapping[str, float] = field(default_factory=dict)
    policy: str = "posydon"
    diagnostics: str = ""
    duration_ns: int = 0

    @property
    def feasible(self) -> bool:
        return self.status.has_decisions and self.sth_maintenance is not None

    def sth_yaw_levels(self) -> npt.NDArray[np.int_]:
        """(24, N_I) chosen level index per hour, -1 for shut-down."""
        if self.sth_yaw is None:
            raise InvalidInputError("Solution carries no yaw decisions")
        chosen = self.sth_yaw.argmax(axis=2)
        return np.where(self.sth_yaw.sum(axis=2) > 0, chosen, -1)

    def maintenance_starts(self) -> Tuple[Tuple[int, int], ...]:
        """(hour, turbine) pairs of short-term starts."""
        if self.sth_maintenance is None:
            return ()
        hours, turbines = np.nonzero(self.sth_maintenance)
        return tuple((int(h), int(i)) for h, i in zip(hours, turbines))


@dataclass(frozen=True)
class VerificationReport:
    max_violation: Mapping[str, float]
    violated_rows: Tuple[str, ...]
    breakdown: ObjectiveBreakdown
    objective_residual: float
    linearization_residual: float
    tolerance: float = 1e-6

    @property
    def ok(self) -> bool:
        return (
            not self.violated_rows
            and self.objective_residual <= self.tolerance
            and self.linearization_residual <= self.tolerance
        )
