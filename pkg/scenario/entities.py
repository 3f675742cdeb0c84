"""
Scenario types: the weather/price process, the site access rule and the
scenario set handed to the optimiser.

Hourly paths cover the short-term day followed by ``lth_days`` long-term days,
so they always hold ``24 * (1 + lth_days)`` values. Hour indices are clock
hours 0..23 within a day.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt

from degradation.entities import LoadFactorTable
from om_planner.errors import ConfigurationError, InvalidInputError
from power.entities import BasePowerCurve, YawGrid

HOURS_PER_DAY = 24


def _diurnal(mean: float, amplitude: float, peak_hour: int) -> Tuple[float, ...]:
    return tuple(
        mean + amplitude * math.cos(2 * math.pi * (hour - peak_hour) / HOURS_PER_DAY)
        for hour in range(HOURS_PER_DAY)
    )


@dataclass(frozen=True)
class VariableProcess:
    """
    Seasonal-mean AR(1) process for one variable.

    Attributes:
        mean_profile (tuple): 24 hourly means, indexed by clock hour
        std (float): stationary standard deviation of the deviation from the mean
        autocorrelation (float): lag-1 coefficient of the deviation
    """

    mean_profile: Tuple[float, ...]
    std: float
    autocorrelation: float

    def __post_init__(self) -> None:
        if len(self.mean_profile) != HOURS_PER_DAY:
            raise ConfigurationError("Mean profiles need one value per clock hour (24)")
        if self.std < 0:
            raise ConfigurationError("Process standard deviation must be nonnegative")
        if not -1 < self.autocorrelation < 1:
            raise ConfigurationError("Autocorrelation must lie in (-1, 1)")


def default_wind() -> VariableProcess:
    return VariableProcess(mean_profile=_diurnal(8.5, 1.0, 15), std=2.5, autocorrelation=0.9)


def default_wave() -> VariableProcess:
    return VariableProcess(mean_profile=_diurnal(1.2, 0.1, 16), std=0.4, autocorrelation=0.95)


def default_price() -> VariableProcess:
    return VariableProcess(mean_profile=_diurnal(40.0, 10.0, 18), std=8.0, autocorrelation=0.8)


@dataclass(frozen=True)
class WeatherModel:
    """Joint wind / wave / price generator; wind and wave innovations are correlated."""

    wind: VariableProcess = field(default_factory=default_wind)
    wave: VariableProcess = field(default_factory=default_wave)
    price: VariableProcess = field(default_factory=default_price)
    wind_wave_correlation: float = 0.6
    allow_negative_prices: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if not -1 <= self.wind_wave_correlation <= 1:
            raise ConfigurationError("Wind/wave correlation must lie in [-1, 1]")


@dataclass(frozen=True)
class AccessRule:
    wind_threshold: float = 15.0
    wave_threshold: float = 1.8
    first_light: int = 6
    last_light: int = 21
    preventive_hours: float = 6.0
    corrective_hours: float = 12.0
    mission_cap_hours: int = 72

    def __post_init__(self) -> None:
        if self.wind_threshold <= 0 or self.wave_threshold <= 0:
            raise ConfigurationError("Access thresholds must be positive")
        if not 0 <= self.first_light < self.last_light <= HOURS_PER_DAY:
            raise ConfigurationError("Access window needs 0 <= first_light < last_light <= 24")
        if self.preventive_hours <= 0 or self.corrective_hours <= 0:
            raise ConfigurationError("Repair durations must be positive")
        if self.mission_cap_hours < max(self.preventive_hours, self.corrective_hours):
            raise ConfigurationError("Mission cap must cover the bare repair durations")


@dataclass(frozen=True, eq=False)
class DerivationContext:
    """What a scenario set was derived with, so reductions can re-derive."""

    curve: BasePowerCurve
    grid: YawGrid
    table: LoadFactorTable
    rule: AccessRule
    repair_overrides: Tuple[Optional[float], ...] = ()


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """
    Sampled trajectories and, once derived, the optimiser's parameter tensors.

    Raw fields (from ``scenario.services.generate``):
        wind, wave, price: (N_S, 24 * (1 + N_D)) hourly paths
        rul0: (N_I, N_S) nominal RUL in days, filled by derivation

    Derived fields (from ``scenario.services.derive_parameters``):
        power_sth (24, N_I, J, N_S), power_lth (N_D, N_I, J, N_S),
        power_lth_max (N_D, N_I, N_S), factor_sth (24, N_I, J, N_S),
        factor_lth (N_D, N_I, J, N_S), mission_sth (24, N_I, N_S),
        mission_lth (N_D, N_I, N_S), zeta0 (N_I, N_S), zeta0_lth (N_D, N_I, N_S)
    """

    wind: npt.NDArray[np.float64]
    wave: npt.NDArray[np.float64]
    price: npt.NDArray[np.float64]
    rul0: Optional[npt.NDArray[np.float64]] = None
    power_sth: Optional[npt.NDArray[np.float64]] = None
    power_lth: Optional[npt.NDArray[np.float64]] = None
    power_lth_max: Optional[npt.NDArray[np.float64]] = None
    factor_sth: Optional[npt.NDArray[np.float64]] = None
    factor_lth: Optional[npt.NDArray[np.float64]] = None
    mission_sth: Optional[npt.NDArray[np.float64]] = None
    mission_lth: Optional[npt.NDArray[np.float64]] = None
    mission_capped: Optional[npt.NDArray[np.bool_]] = None
    zeta0: Optional[npt.NDArray[np.float64]] = None
    zeta0_lth: Optional[npt.NDArray[np.float64]] = None
    context: Optional[DerivationContext] = None

    sth_hours = HOURS_PER_DAY

    def __post_init__(self) -> None:
        shapes = {self.wind.shape, self.wave.shape, self.price.shape}
        if len(shapes) != 1 or self.wind.ndim != 2:
            raise InvalidInputError(f"Wind, wave and price paths must share one 2-D shape, got {shapes}")
        if self.wind.shape[1] % HOURS_PER_DAY or self.wind.shape[1] < 2 * HOURS_PER_DAY:
            raise InvalidInputError("Hourly paths must span 24 * (1 + N_D) hours with N_D >= 1")
        if np.any(self.wind < 0) or np.any(self.wave < 0):
            raise InvalidInputError("Wind and wave trajectories must be nonnegative")
        if self.rul0 is not None and self.rul0.shape[1] != self.n_scenarios:
            raise InvalidInputError("rul0 must be shaped (turbines, scenarios)")

    @property
    def n_scenarios(self) -> int:
        return int(self.wind.shape[0])

    @property
    def lth_days(self) -> int:
        return int(self.wind.shape[1] // HOURS_PER_DAY - 1)

    @property
    def n_turbines(self) -> int:
        if self.rul0 is None:
            raise InvalidInputError("Scenario set has no RUL draws yet")
        return int(self.rul0.shape[0])

    @property
    def derived(self) -> bool:
        return all(
            value is not None
            for value in (
                self.rul0, self.power_sth, self.power_lth, self.power_lth_max,
                self.factor_sth, self.factor_lth, self.mission_sth, self.mission_lth,
                self.zeta0, self.zeta0_lth,
            )
        )

    def _daily(self, hourly: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        days = hourly[:, HOURS_PER_DAY:]
        return days.reshape(self.n_scenarios, self.lth_days, HOURS_PER_DAY).mean(axis=2)

    @property
    def wind_daily(self) -> npt.NDArray[np.float64]:
        return self._daily(self.wind)

    @property
    def wave_daily(self) -> npt.NDArray[np.float64]:
        return self._daily(self.wave)

    @property
    def price_sth(self) -> npt.NDArray[np.float64]:
        """(24, N_S) hourly prices of the short-term day."""
        return self.price[:, :HOURS_PER_DAY].T

    @property
    def price_daily(self) -> npt.NDArray[np.float64]:
        """(N_D, N_S) mean daily prices of the long-term days."""
        return self._daily(self.price).T
