"""
Power curve and yaw grid types.

A curve maps wind speed to scaled power at zero yaw (``base``); yaw loss is
applied on top as cos(γ)^p by ``power.services.scaled_power``.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
import numpy.typing as npt
from scipy.interpolate import CubicHermiteSpline

from om_planner.errors import ConfigurationError, InvalidInputError


class BasePowerCurve(ABC):
    rated_capacity: float
    yaw_exponent: float

    @abstractmethod
    def base(self, wind_speed: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Scaled power at zero yaw, in [0, 1]."""
        raise NotImplementedError


@dataclass(frozen=True)
class PowerCurve(BasePowerCurve):
    """
    Parametric power curve.

    Attributes:
        cut_in (float): wind speed where production starts (m/s)
        rated_speed (float): wind speed where rated power is reached (m/s)
        cut_out (float): storm shutdown speed (m/s)
        rated_capacity (float): R, in MW
        yaw_exponent (float): p in the cos(γ)^p yaw loss

    Note:
        Between cut-in and rated the curve is a cubic Hermite ramp with flat
        ends, so base is 0.5 half way up the ramp.
    """

    cut_in: float = 3.0
    rated_speed: float = 12.0
    cut_out: float = 25.0
    rated_capacity: float = 12.0
    yaw_exponent: float = 1.88

    def __post_init__(self) -> None:
        if not 0 <= self.cut_in < self.rated_speed < self.cut_out:
            raise ConfigurationError("Power curve needs 0 <= cut_in < rated_speed < cut_out")
        if self.rated_capacity <= 0:
            raise ConfigurationError("Rated capacity must be positive")
        if self.yaw_exponent <= 0:
            raise ConfigurationError("Yaw exponent must be positive")

    @cached_property
    def _ramp(self) -> CubicHermiteSpline:
        return CubicHermiteSpline([self.cut_in, self.rated_speed], [0.0, 1.0], [0.0, 0.0])

    def base(self, wind_speed: npt.ArrayLike) -> npt.NDArray[np.float64]:
        wind = np.asarray(wind_speed, dtype=float)
        ramp = self._ramp(np.clip(wind, self.cut_in, self.rated_speed))
        value = np.where(wind < self.cut_in, 0.0, np.where(wind < self.rated_speed, ramp, 1.0))
        value = np.where(wind > self.cut_out, 0.0, value)
        return np.clip(value, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class TabulatedPowerCurve(BasePowerCurve):
    """Power curve read from ``wind_speed_ms, scaled_power_at_zero_yaw`` samples."""

    wind_speeds: npt.NDArray[np.float64]
    scaled_power: npt.NDArray[np.float64]
    rated_capacity: float = 12.0
    yaw_exponent: float = 1.88
    source: str = "table"

    def __post_init__(self) -> None:
        if len(self.wind_speeds) != len(self.scaled_power) or len(self.wind_speeds) < 2:
            raise InvalidInputError("Power curve table needs at least two matching samples")
        if np.any(np.diff(self.wind_speeds) <= 0):
            raise InvalidInputError("Power curve wind speeds must be strictly increasing")
        if self.rated_capacity <= 0 or self.yaw_exponent <= 0:
            raise ConfigurationError("Rated capacity and yaw exponent must be positive")

    def base(self, wind_speed: npt.ArrayLike) -> npt.NDArray[np.float64]:
        wind = np.asarray(wind_speed, dtype=float)
        value = np.interp(wind, self.wind_speeds, self.scaled_power, left=0.0, right=0.0)
        return np.clip(value, 0.0, 1.0)


@dataclass(frozen=True)
class YawGrid:
    """Discrete yaw misalignment levels (bin centres, degrees)."""

    levels: Tuple[float, ...] = (-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
    bin_width: float = 5.0

    def __post_init__(self) -> None:
        levels = np.asarray(self.levels, dtype=float)
        if levels.size == 0:
            raise ConfigurationError("Yaw grid needs at least one level")
        if np.count_nonzero(levels == 0.0) != 1:
            raise ConfigurationError("Yaw grid must contain exactly one 0 degree level")
        if not np.allclose(np.sort(levels), np.sort(-levels)):
            raise ConfigurationError("Yaw grid levels must be symmetric about 0")
        if self.bin_width <= 0:
            raise ConfigurationError("Yaw bin width must be positive")

    @classmethod
    def symmetric(cls, n_levels: int = 7, bin_width: float = 5.0) -> "YawGrid":
        if n_levels < 1 or n_levels % 2 == 0:
            raise ConfigurationError("A symmetric yaw grid needs an odd number of levels")
        half = n_levels // 2
        return cls(
            levels=tuple(float(k * bin_width) for k in range(-half, half + 1)),
            bin_width=bin_width,
        )

    @property
    def size(self) -> int:
        return len(self.levels)

    @property
    def zero_index(self) -> int:
        return self.levels.index(0.0)
