import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd
from cachetools import LRUCache, cached

from om_planner.errors import InvalidInputError
from power.entities import BasePowerCurve, TabulatedPowerCurve, YawGrid

logger = logging.getLogger("om_planner")

HOURS_PER_DAY = 24


@dataclass(frozen=True, eq=False)
class PowerTable:
    """
    Scaled power tensors.

    Attributes:
        sth: (24, N_I, J, N_S) hourly values of the first day
        lth: (N_D, N_I, J, N_S) daily means of the following days
        lth_max: (N_D, N_I, N_S) best yaw level per day
    """

    sth: npt.NDArray[np.float64]
    lth: npt.NDArray[np.float64]
    lth_max: npt.NDArray[np.float64]


def scaled_power(curve: BasePowerCurve, wind_speed: npt.ArrayLike, yaw: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """f = base(ν) · cos(γ)^p, clamped to [0, 1]; yaw in degrees."""
    wind = np.asarray(wind_speed, dtype=float)
    if np.any(wind < 0):
        raise InvalidInputError("Wind speed must be nonnegative")
    alignment = np.clip(np.cos(np.deg2rad(np.asarray(yaw, dtype=float))), 0.0, 1.0)
    return np.clip(curve.base(wind) * alignment**curve.yaw_exponent, 0.0, 1.0)


def hourly_power(curve: BasePowerCurve, grid: YawGrid, wind: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Scaled power for every yaw level; shape ``wind.shape + (J,)``."""
    wind = np.asarray(wind, dtype=float)
    return scaled_power(curve, wind[..., None], np.asarray(grid.levels, dtype=float))


def power_table(
    curve: BasePowerCurve,
    grid: YawGrid,
    wind_hourly: npt.ArrayLike,
    n_turbines: int,
) -> PowerTable:
    """
    Power tensors for the optimiser from hourly scenario wind paths.

    Args:
        wind_hourly: (N_S, 24 * (1 + N_D)) hourly wind per scenario; the first
            24 hours are the short-term day
        n_turbines: every turbine sees the farm wind

    Raises:
        InvalidInputError: wrong shape or negative wind.
    """
    wind = np.asarray(wind_hourly, dtype=float)
    if wind.ndim != 2 or wind.shape[1] % HOURS_PER_DAY or wind.shape[1] < 2 * HOURS_PER_DAY:
        raise InvalidInputError(
            f"Wind paths must be (scenarios, 24 * (1 + N_D)) with N_D >= 1, got {wind.shape}"
        )
    if np.any(wind < 0):
        raise InvalidInputError("Scenario wind paths must be nonnegative")
    if n_turbines < 1:
        raise InvalidInputError("Need at least one turbine")

    n_scenarios, n_hours = wind.shape
    n_days = n_hours // HOURS_PER_DAY - 1
    values = hourly_power(curve, grid, wind)  # (S, H, J)

    sth = np.transpose(values[:, :HOURS_PER_DAY, :], (1, 2, 0))  # (24, J, S)
    daily = values[:, HOURS_PER_DAY:, :].reshape(n_scenarios, n_days, HOURS_PER_DAY, grid.size).mean(axis=2)
    lth = np.transpose(daily, (1, 2, 0))  # (N_D, J, S)

    sth_full = np.repeat(sth[:, None, :, :], n_turbines, axis=1)
    lth_full = np.repeat(lth[:, None, :, :], n_turbines, axis=1)
    return PowerTable(sth=sth_full, lth=lth_full, lth_max=lth_full.max(axis=2))


@cached(LRUCache(maxsize=8))
def load_power_curve_csv(path: str, rated_capacity: float = 12.0, yaw_exponent: float = 1.88) -> TabulatedPowerCurve:
    frame = pd.read_csv(path, encoding="utf-8")
    missing = {"wind_speed_ms", "scaled_power_at_zero_yaw"} - set(frame.columns)
    if missing:
        raise InvalidInputError(f"Power curve file {path} is missing columns {sorted(missing)}")
    logger.info("Loaded tabulated power curve", extra={"path": path, "rows": len(frame)})
    return TabulatedPowerCurve(
        wind_speeds=frame["wind_speed_ms"].to_numpy(dtype=float),
        scaled_power=frame["scaled_power_at_zero_yaw"].to_numpy(dtype=float),
        rated_capacity=rated_capacity,
        yaw_exponent=yaw_exponent,
        source=path,
    )
