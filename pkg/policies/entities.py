import enum
from dataclasses import dataclass

from om_planner.errors import ConfigurationError


class PolicyKind(str, enum.Enum):
    POSYDON = "posydon"
    STOCHOS = "stochos"
    DET = "det"
    TBS = "tbs"


@dataclass(frozen=True)
class Policy:
    """
    A maintenance strategy and its parameters.

    Attributes:
        kind (PolicyKind): posydon optimises yaw and maintenance jointly,
            stochos pins yaw to 0°, det optimises the mean scenario and tbs
            maintains on a fixed calendar
        tbs_interval_days (float): days between time-based tasks
        det_reduction (str): how det collapses the scenario set
    """

    kind: PolicyKind = PolicyKind.POSYDON
    tbs_interval_days: float = 60.0
    det_reduction: str = "mean"

    def __post_init__(self) -> None:
        if self.tbs_interval_days <= 0:
            raise ConfigurationError("TBS interval must be positive")
        if self.det_reduction != "mean":
            raise ConfigurationError(f"Unknown scenario reduction '{self.det_reduction}'")
