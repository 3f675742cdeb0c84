from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from degradation.entities import BaselinePrior, LoadFactorTable
from degradation.services import default_load_factor_table, load_factor_table_from_csv
from harness.entities import CampaignConfig, PlannerSetup
from milp.entities import MilpConfig
from om_planner.errors import ConfigurationError, InvalidInputError
from policies.entities import Policy, PolicyKind
from power.entities import BasePowerCurve, PowerCurve, YawGrid
from power.services import load_power_curve_csv
from scenario.entities import AccessRule, WeatherModel


@dataclass(frozen=True)
class PowerCurveSettings:
    """The parametric curve, replaced by a tabulated one when ``csv`` is set."""

    curve: PowerCurve = field(default_factory=PowerCurve)
    csv: Optional[str] = None

    def build(self) -> BasePowerCurve:
        if self.csv is None:
            return self.curve
        return load_power_curve_csv(self.csv, self.curve.rated_capacity, self.curve.yaw_exponent)


@dataclass(frozen=True)
class DegradationSettings:
    prior: BaselinePrior = field(default_factory=BaselinePrior)
    load_table_csv: Optional[str] = None
    fatigue_exponent: float = 10.0

    def load_table(self, grid: YawGrid) -> LoadFactorTable:
        if self.load_table_csv is None:
            return default_load_factor_table(list(grid.levels), self.fatigue_exponent)
        table = load_factor_table_from_csv(self.load_table_csv, self.fatigue_exponent)
        if len(table.yaw_levels) != grid.size or not np.allclose(table.yaw_levels, grid.levels):
            raise InvalidInputError(f"Load table {self.load_table_csv} does not cover the yaw grid {grid.levels}")
        return table


@dataclass(frozen=True)
class PolicySettings:
    kinds: Tuple[PolicyKind, ...] = tuple(PolicyKind)
    tbs_interval_days: float = 60.0
    det_reduction: str = "mean"

    def __post_init__(self) -> None:
        if not self.kinds:
            raise ConfigurationError("At least one policy kind is needed")
        self.policies()

    def policies(self) -> List[Policy]:
        return [Policy(kind, self.tbs_interval_days, self.det_reduction) for kind in self.kinds]


@dataclass(frozen=True)
class RunConfig:
    """Everything one ``run``, ``compare`` or ``inspect`` consumes."""

    milp: MilpConfig = field(default_factory=MilpConfig)
    access: AccessRule = field(default_factory=AccessRule)
    weather: WeatherModel = field(default_factory=WeatherModel)
    power_curve: PowerCurveSettings = field(default_factory=PowerCurveSettings)
    yaw_grid: YawGrid = field(default_factory=YawGrid)
    degradation: DegradationSettings = field(default_factory=DegradationSettings)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)
    policies: PolicySettings = field(default_factory=PolicySettings)

    def setup(self) -> PlannerSetup:
        """
        Raises:
            InvalidInputError: a table file is unreadable or does not match the yaw grid.
        """
        return PlannerSetup(
            milp=self.milp,
            campaign=self.campaign,
            load_table=self.degradation.load_table(self.yaw_grid),
            access=self.access,
            weather=self.weather,
            power_curve=self.power_curve.build(),
            yaw_grid=self.yaw_grid,
            prior=self.degradation.prior,
        )
