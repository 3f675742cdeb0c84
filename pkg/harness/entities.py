"""
Campaign configuration, per-roll records and the O&M metrics table.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from degradation.entities import BaselinePrior, LoadFactorTable
from milp.entities import MilpConfig
from om_planner.errors import ConfigurationError, InvalidInputError
from power.entities import BasePowerCurve, PowerCurve, YawGrid
from scenario.entities import AccessRule, WeatherModel


@dataclass(frozen=True)
class CampaignConfig:
    """
    Attributes:
        n_turbines (int): fleet size
        n_rolls (int): simulated days
        truth_seed (int): seeds every hidden-truth stream
        failure_threshold (float): Λ, signal units
        initial_age_days (tuple): range the starting equivalent age is drawn from
        failure_injections (dict): turbine -> roll at whose start the
            amplitude jumps over Λ
        min_elapsed_days (float): floor on t^c handed to the optimiser
    """

    n_turbines: int = 5
    n_rolls: int = 60
    truth_seed: int = 0
    failure_threshold: float = 100.0
    initial_age_days: Tuple[float, float] = (40.0, 140.0)
    failure_injections: Mapping[int, int] = field(default_factory=dict)
    min_elapsed_days: float = 1.0

    def __post_init__(self) -> None:
        if self.n_turbines < 1 or self.n_rolls < 1:
            raise ConfigurationError("A campaign needs at least one turbine and one roll")
        low, high = self.initial_age_days
        if not 0 <= low <= high:
            raise ConfigurationError("Initial age range needs 0 <= low <= high")
        if self.min_elapsed_days <= 0:
            raise ConfigurationError("The elapsed-life floor must be positive")
        for turbine, day in self.failure_injections.items():
            if not 0 <= turbine < self.n_turbines or day < 0:
                raise ConfigurationError(f"Failure injection {turbine}: {day} is outside the campaign")


@dataclass(frozen=True, eq=False)
class PlannerSetup:
    """Every model a campaign consumes."""

    milp: MilpConfig
    campaign: CampaignConfig
    load_table: LoadFactorTable
    access: AccessRule = field(default_factory=AccessRule)
    weather: WeatherModel = field(default_factory=WeatherModel)
    power_curve: BasePowerCurve = field(default_factory=PowerCurve)
    yaw_grid: YawGrid = field(default_factory=YawGrid)
    prior: BaselinePrior = field(default_factory=BaselinePrior)


@dataclass(frozen=True)
class MaintenanceEvent:
    roll: int
    hour: int
    turbine: int
    corrective: bool
    repair_hours: float
    # true remaining life at the start, preventive tasks only
    lost_cycle_days: Optional[float] = None


@dataclass
class RollRecord:
    """
    What happened on one simulated day.

    ``maintenance`` and ``yaw_levels`` are the executed short-term decisions
    (24 x N_I; yaw -1 is a shut-down hour).
    """

    roll: int
    policy: str
    status: str
    objective: Optional[float]
    gap: Optional[float]
    maintenance: List[List[int]]
    yaw_levels: List[List[int]]
    prices: List[float]
    production_mwh: float
    baseline_mwh: float
    revenue: float
    baseline_revenue: float
    repair_cost: float
    crew_cost: float
    overtime_cost: float
    vessel_cost: float
    downtime_hours: float
    access_downtime_hours: float
    vessel_rented: bool
    events: List[MaintenanceEvent] = field(default_factory=list)
    expected_rul_days: List[Optional[float]] = field(default_factory=list)
    degraded: bool = False
    diagnostics: str = ""
    duration_ns: int = 0

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class OmMetrics:
    """
    Campaign totals for one policy.

    total_cost = repair_cost + crew_cost + overtime_cost + vessel_cost + revenue_loss
    """

    policy: str
    total_cost: float
    revenue_loss: float
    production_loss_mwh: float
    downtime_days: float
    access_downtime_days: float
    lost_cycle_days_per_task: Optional[float]
    maintenance_count: int
    corrective_count: int
    vessel_rentals: int
    repair_cost: float = 0.0
    crew_cost: float = 0.0
    overtime_cost: float = 0.0
    vessel_cost: float = 0.0
    production_mwh: float = 0.0
    baseline_mwh: float = 0.0
    degraded_rolls: int = 0

    def __post_init__(self) -> None:
        if self.corrective_count > self.maintenance_count:
            raise InvalidInputError("Corrective tasks cannot outnumber all tasks")


METRICS_COLUMNS = (
    "policy",
    "total_cost",
    "revenue_loss",
    "production_loss_mwh",
    "downtime_days",
    "access_downtime_days",
    "lost_cycle_days_per_task",
    "maintenance_count",
    "corrective_count",
    "vessel_rentals",
)
