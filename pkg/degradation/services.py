"""
Degradation model operations.

Brownian degradation with drift, its conjugate Bayesian update, the
inverse-Gaussian remaining useful life and the fatigue time transformation
that turns a yaw/wind load ratio into a relative RUL factor.
"""

import logging
import math
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
import pandas as pd
from cachetools import LRUCache, cached

from degradation.entities import (
    BaselinePrior,
    DegradationState,
    LoadFactorTable,
    RulDistribution,
)
from om_planner.errors import InvalidInputError, TurbineFailedError

logger = logging.getLogger("om_planner")

HOURS_PER_DAY = 24.0


def fresh_state(prior: BaselinePrior, failure_threshold: float) -> DegradationState:
    """State of a new (or renewed) turbine: no data, belief equal to the prior."""
    return DegradationState(
        prior=prior,
        posterior=prior,
        observed_amplitude=prior.mean_alpha,
        observation_time=0.0,
        failure_threshold=failure_threshold,
        signal_history=(),
    )


def _conjugate_posterior(
    prior: BaselinePrior, history: Sequence[Tuple[float, float]]
) -> BaselinePrior:
    if not history:
        return prior

    times = np.array([t for t, _ in history], dtype=float)
    amplitudes = np.array([a for _, a in history], dtype=float)

    # The first reading sees alpha + beta * t1 with Brownian variance sigma^2 t1;
    # later readings are independent increments beta * dt with variance sigma^2 dt.
    steps = np.diff(times, prepend=0.0)
    design = np.column_stack([np.zeros_like(times), steps])
    design[0, 0] = 1.0
    responses = np.diff(amplitudes, prepend=0.0)
    responses[0] = amplitudes[0]
    weights = 1.0 / (prior.sigma**2 * steps)

    prior_precision = np.linalg.inv(prior.covariance)
    precision = prior_precision + (design * weights[:, None]).T @ design
    information = prior_precision @ prior.mean + design.T @ (weights * responses)
    covariance = np.linalg.inv(precision)
    mean = covariance @ information
    # symmetrise against round-off before handing it to the PD check
    covariance = 0.5 * (covariance + covariance.T)

    return BaselinePrior(
        mean_alpha=float(mean[0]),
        var_alpha=float(covariance[0, 0]),
        mean_beta=float(mean[1]),
        var_beta=float(covariance[1, 1]),
        cov_alpha_beta=float(covariance[0, 1]),
        sigma=prior.sigma,
    )


def update_posterior(
    state: DegradationState, new_obs: Tuple[float, float]
) -> DegradationState:
    """
    Add one signal reading and recompute the posterior from the full history.

    Args:
        state: current belief
        new_obs: ``(time_hours, amplitude)``; time must be later than the
            state's observation time

    Returns:
        A new DegradationState; the input is left untouched.

    Raises:
        InvalidInputError: the reading is not later than the last one.
    """
    time, amplitude = float(new_obs[0]), float(new_obs[1])
    if time <= state.observation_time:
        raise InvalidInputError(
            f"Observation time {time} is not after the last observation {state.observation_time}"
        )
    history = state.signal_history + ((time, amplitude),)
    return DegradationState(
        prior=state.prior,
        posterior=_conjugate_posterior(state.prior, history),
        observed_amplitude=amplitude,
        observation_time=time,
        failure_threshold=state.failure_threshold,
        signal_history=history,
    )


def state_from_history(
    prior: BaselinePrior,
    failure_threshold: float,
    history: Iterable[Tuple[float, float]],
) -> DegradationState:
    state = fresh_state(prior, failure_threshold)
    for observation in history:
        state = update_posterior(state, observation)
    return state


def nominal_rul(state: DegradationState) -> RulDistribution:
    """
    Inverse-Gaussian RUL under nominal loading, in equivalent days.

    Mean and shape are (Λ - d)/μβ and ((Λ - d)/σ)² in hours; both scale by
    1/24 to give days.

    Raises:
        TurbineFailedError: the amplitude already reached the threshold. The
            exception carries the point-mass distribution.
        InvalidInputError: the posterior drift is not positive.
    """
    gap = state.failure_threshold - state.observed_amplitude
    if gap <= 0:
        raise TurbineFailedError(
            f"Amplitude {state.observed_amplitude} has reached the threshold "
            f"{state.failure_threshold}",
            distribution=RulDistribution.point_mass(),
        )
    mean_beta = state.posterior.mean_beta
    if mean_beta <= 0:
        raise InvalidInputError("Posterior drift must be positive for an upward degradation trend")

    mean_hours = gap / mean_beta
    shape_hours = (gap / state.posterior.sigma) ** 2
    return RulDistribution(mean=mean_hours / HOURS_PER_DAY, shape=shape_hours / HOURS_PER_DAY)


def sample_rul(dist: RulDistribution, count: int, seed: int) -> npt.NDArray[np.float64]:
    """
    Draw RUL samples in days (Michael, Schucany and Haas transformation).

    Deterministic for a given seed; a degenerate distribution returns zeros.
    """
    if count < 1:
        raise InvalidInputError("RUL sample count must be at least 1")
    if dist.degenerate or dist.mean == 0:
        return np.zeros(count)

    rng = np.random.default_rng(seed)
    mu, lam = dist.mean, dist.shape
    y = rng.standard_normal(count) ** 2
    x = mu + (mu**2 * y) / (2 * lam) - (mu / (2 * lam)) * np.sqrt(
        4 * mu * lam * y + (mu * y) ** 2
    )
    x = np.maximum(x, np.finfo(float).tiny)
    z = rng.uniform(size=count)
    samples = np.where(z <= mu / (mu + x), x, mu**2 / x)
    return np.maximum(samples, 0.0)


def relative_rul_factors(
    table: LoadFactorTable, wind_speed: Union[float, npt.ArrayLike]
) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.bool_]]:
    """
    Relative-RUL factors for every yaw level of the table.

    Returns:
        ``(factors, clamped)`` where factors has shape ``wind.shape + (J,)``
        and clamped flags winds beyond the last grid bin.
    """
    wind = np.asarray(wind_speed, dtype=float)
    if np.any(wind < 0) or not np.all(np.isfinite(wind)):
        raise InvalidInputError("Wind speeds must be finite and nonnegative")

    clamped = wind > table.wind_bins[-1]
    # np.interp clamps to the edge bins on both sides
    loads = np.stack(
        [np.interp(wind, table.wind_bins, row) for row in table.ratios], axis=-1
    )
    factors = (loads / table.baseline_load) ** table.fatigue_exponent
    return factors, clamped


def relative_rul_factor(
    table: LoadFactorTable, yaw_level: int, wind_speed: float
) -> Tuple[float, bool]:
    """
    Relative-RUL factor F for one yaw level and wind speed.

    Returns:
        ``(F, clamped)``; clamped is True when the wind exceeded the grid and
        the last bin was used.
    """
    if not 0 <= yaw_level < len(table.yaw_levels):
        raise InvalidInputError(f"Yaw level {yaw_level} is not in the load table")
    factors, clamped = relative_rul_factors(table, wind_speed)
    if clamped:
        logger.warning(
            "Wind speed above load table range, clamped to last bin",
            extra={"wind_speed": wind_speed, "max_bin": float(table.wind_bins[-1])},
        )
    return float(factors[yaw_level]), bool(clamped)


def rul_after_loading(
    lambda0: float,
    factors: Sequence[float],
    period_days: Union[float, Sequence[float]] = 1.0,
) -> float:
    """
    RUL after a sequence of loading periods: λ⁰ + Σ (1 - F) · period length.

    Hourly periods use ``period_days=1/24``; a per-period sequence allows
    mixing hourly and daily periods. A factor of 0 is a parked period.
    The result is floored at 0.
    """
    if lambda0 < 0:
        raise InvalidInputError("Initial RUL must be nonnegative")
    values = np.asarray(factors, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise InvalidInputError("Relative-RUL factors must be finite and nonnegative")
    lengths = np.broadcast_to(np.asarray(period_days, dtype=float), values.shape)
    return max(float(lambda0 + np.sum((1.0 - values) * lengths)), 0.0)


def advance_amplitude(
    amplitude: Union[float, npt.NDArray[np.float64]],
    beta: Union[float, npt.NDArray[np.float64]],
    sigma: float,
    psi: Union[float, npt.NDArray[np.float64]],
    hours: float,
    noise: Union[float, npt.NDArray[np.float64]],
) -> Union[float, npt.NDArray[np.float64]]:
    """
    One step of the time-transformed Brownian degradation path.

    Over ``hours`` of calendar time at factor ``psi`` the path advances by
    ``psi * hours`` equivalent hours; ``noise`` is a standard normal draw.
    """
    equivalent = np.asarray(psi, dtype=float) * hours
    return amplitude + beta * equivalent + sigma * np.sqrt(equivalent) * noise


def simulate_first_passage(
    beta: float,
    sigma: float,
    gap: float,
    n_paths: int,
    seed: int,
    psi: float = 1.0,
    dt: float = 0.01,
    max_time: Optional[float] = None,
) -> npt.NDArray[np.float64]:
    """
    Monte Carlo first-passage times of a drifted Brownian path over ``gap``.

    A Brownian-bridge crossing test between grid points removes the
    discrete-monitoring bias, so a coarse ``dt`` is enough. Times are in the
    same unit as ``dt``; paths that never cross report ``max_time``.
    """
    rng = np.random.default_rng(seed)
    if max_time is None:
        mean = gap / (beta * psi)
        max_time = 10.0 * mean
    n_steps = int(math.ceil(max_time / dt))

    position = np.zeros(n_paths)
    passage = np.full(n_paths, float(max_time))
    active = np.arange(n_paths)
    for step in range(n_steps):
        if active.size == 0:
            break
        current = position[active]
        following = advance_amplitude(
            current, beta, sigma, psi, dt, rng.standard_normal(active.size)
        )
        bridge = np.exp(
            -2.0
            * np.maximum(gap - current, 0.0)
            * np.maximum(gap - following, 0.0)
            / (sigma**2 * psi * dt)
        )
        crossed = (following >= gap) | (rng.uniform(size=active.size) < bridge)
        passage[active[crossed]] = (step + 0.5) * dt
        position[active] = following
        active = active[~crossed]
    return passage


@cached(LRUCache(maxsize=16))
def load_factor_table_from_csv(path: str, fatigue_exponent: float = 10.0) -> LoadFactorTable:
    """
    Read a load table: header row of wind bins, first column of yaw levels
    (degrees), cells are load ratios to the nominal load.
    """
    frame = pd.read_csv(path, index_col=0, encoding="utf-8")
    return LoadFactorTable(
        yaw_levels=frame.index.to_numpy(dtype=float),
        wind_bins=frame.columns.to_numpy(dtype=float),
        ratios=frame.to_numpy(dtype=float),
        fatigue_exponent=fatigue_exponent,
        source=str(path),
    )


def default_load_factor_table(
    yaw_levels: Sequence[float],
    fatigue_exponent: float = 10.0,
    wind_bins: Optional[Sequence[float]] = None,
) -> LoadFactorTable:
    """
    Synthetic load table: (ν/10)^1.5 · (1 + 0.004γ + 0.0008γ²), γ in degrees.

    Small negative yaw mildly unloads the blade, large |γ| loads it.
    """
    yaw = np.asarray(yaw_levels, dtype=float)
    bins = np.arange(1.0, 31.0) if wind_bins is None else np.asarray(wind_bins, dtype=float)
    ratios = (bins[None, :] / 10.0) ** 1.5 * (1 + 0.004 * yaw[:, None] + 0.0008 * yaw[:, None] ** 2)
    return LoadFactorTable(
        yaw_levels=yaw,
        wind_bins=bins,
        ratios=ratios,
        fatigue_exponent=fatigue_exponent,
    )


def read_signal_csv(path: str) -> Tuple[Tuple[float, float], ...]:
    """Read a turbine's ``time_hours, amplitude`` signal file."""
    frame = pd.read_csv(path, encoding="utf-8")
    missing = {"time_hours", "amplitude"} - set(frame.columns)
    if missing:
        raise InvalidInputError(f"Signal file {path} is missing columns {sorted(missing)}")
    history = tuple(
        (float(t), float(a)) for t, a in zip(frame["time_hours"], frame["amplitude"])
    )
    if any(later[0] <= earlier[0] for earlier, later in zip(history, history[1:])):
        raise InvalidInputError(f"Signal file {path} has non-increasing timestamps")
    return history
