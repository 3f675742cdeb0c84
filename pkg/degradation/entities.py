"""
Value types for the blade degradation model.

Signal amplitudes are in abstract "signal units"; degradation time is counted
in equivalent hours (calendar hours stretched by the loading factor), and RUL
is reported in equivalent days.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import numpy.typing as npt

from om_planner.errors import ConfigurationError, InvalidInputError


@dataclass(frozen=True)
class BaselinePrior:
    """
    Bivariate normal belief over the initial amplitude and the degradation rate.

    The same type carries both the configured prior and every posterior
    produced from it; ``sigma`` is the known diffusion coefficient of the
    Brownian term and is never updated.

    Attributes:
        mean_alpha (float): expected initial amplitude (signal units)
        var_alpha (float): variance of the initial amplitude
        mean_beta (float): expected drift (signal units / hour)
        var_beta (float): variance of the drift
        cov_alpha_beta (float): covariance between amplitude and drift
        sigma (float): diffusion coefficient (signal units / sqrt(hour))
    """

    mean_alpha: float = 5.0
    var_alpha: float = 1.0
    mean_beta: float = 0.026
    var_beta: float = 2.5e-5
    cov_alpha_beta: float = 0.0
    sigma: float = 0.45

    def __post_init__(self) -> None:
        if self.var_alpha <= 0 or self.var_beta <= 0:
            raise ConfigurationError("Prior variances must be positive")
        if self.sigma <= 0:
            raise ConfigurationError("Diffusion coefficient sigma must be positive")
        determinant = self.var_alpha * self.var_beta - self.cov_alpha_beta**2
        if determinant <= 0:
            raise ConfigurationError(
                "Prior covariance [[var_alpha, cov], [cov, var_beta]] is not positive definite"
            )

    @property
    def mean(self) -> npt.NDArray[np.float64]:
        return np.array([self.mean_alpha, self.mean_beta], dtype=float)

    @property
    def covariance(self) -> npt.NDArray[np.float64]:
        return np.array(
            [
                [self.var_alpha, self.cov_alpha_beta],
                [self.cov_alpha_beta, self.var_beta],
            ],
            dtype=float,
        )


@dataclass(frozen=True)
class DegradationState:
    """
    Belief about one turbine's blade health at the last observation.

    ``prior`` is kept next to ``posterior`` because every update is recomputed
    from the full signal history.
    """

    prior: BaselinePrior
    posterior: BaselinePrior
    observed_amplitude: float
    observation_time: float
    failure_threshold: float = 100.0
    signal_history: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        times = [t for t, _ in self.signal_history]
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise InvalidInputError("Signal history times must be strictly increasing")
        if times and not math.isclose(times[-1], self.observation_time):
            raise InvalidInputError("Observation time must equal the last history time")

    @property
    def failed(self) -> bool:
        return self.observed_amplitude >= self.failure_threshold


@dataclass(frozen=True)
class RulDistribution:
    """Inverse-Gaussian remaining useful life, in equivalent days."""

    mean: float
    shape: float
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.mean < 0:
            raise InvalidInputError("RUL mean must be nonnegative")
        if not self.shape > 0:
            raise InvalidInputError("RUL shape must be positive")

    @classmethod
    def point_mass(cls) -> "RulDistribution":
        """The distribution of a turbine that has already crossed the threshold."""
        return cls(mean=0.0, shape=math.inf, degenerate=True)

    @property
    def variance(self) -> float:
        if self.degenerate:
            return 0.0
        return self.mean**3 / self.shape


@dataclass(frozen=True, eq=False)
class LoadFactorTable:
    """
    Blade load ratios on a (yaw level, wind speed) grid.

    ``ratios[j, k]`` is the load at yaw ``yaw_levels[j]`` and wind
    ``wind_bins[k]`` relative to the nominal load. The relative-RUL factor is
    the ratio to the baseline cell raised to the fatigue exponent.
    ``single_cycle_strength`` divides out of the factor and is carried only so a
    table can be described completely.
    """

    yaw_levels: npt.NDArray[np.float64]
    wind_bins: npt.NDArray[np.float64]
    ratios: npt.NDArray[np.float64]
    fatigue_exponent: float = 10.0
    single_cycle_strength: float = 1.0
    baseline_yaw: float = 0.0
    baseline_wind: float = 10.0
    source: str = field(default="synthetic")

    def __post_init__(self) -> None:
        if self.ratios.shape != (len(self.yaw_levels), len(self.wind_bins)):
            raise InvalidInputError(
                f"Load table shape {self.ratios.shape} does not match "
                f"{len(self.yaw_levels)} yaw levels x {len(self.wind_bins)} wind bins"
            )
        if np.any(np.diff(self.wind_bins) <= 0):
            raise InvalidInputError("Wind bins must be strictly increasing")
        if not np.all(self.ratios > 0):
            raise InvalidInputError("Load ratios must be positive")
        if not np.any(np.isclose(self.yaw_levels, self.baseline_yaw)):
            raise InvalidInputError("Load table has no row for the baseline yaw level")
        if self.fatigue_exponent <= 0:
            raise ConfigurationError("Fatigue exponent must be positive")

    @property
    def baseline_row(self) -> int:
        return int(np.argmin(np.abs(self.yaw_levels - self.baseline_yaw)))

    @property
    def baseline_load(self) -> float:
        return float(
            np.interp(self.baseline_wind, self.wind_bins, self.ratios[self.baseline_row])
        )
