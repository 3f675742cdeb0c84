"""
Scenario generation and parameter derivation.

Every scenario draws its innovations from its own substream spawned off one
``SeedSequence``, so a scenario depends only on (seed, scenario index).
"""

import logging
import os
from dataclasses import replace
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import pandas as pd

from degradation.entities import DegradationState, LoadFactorTable
from degradation.services import nominal_rul, relative_rul_factors, sample_rul
from om_planner.errors import InvalidInputError, TurbineFailedError
from power.entities import BasePowerCurve, YawGrid
from power.services import power_table
from scenario.entities import (
    HOURS_PER_DAY,
    AccessRule,
    DerivationContext,
    ScenarioSet,
    VariableProcess,
    WeatherModel,
)

logger = logging.getLogger("om_planner")

VARIABLES = ("wind", "wave", "price")


def _ar_paths(
    process: VariableProcess,
    innovations: npt.NDArray[np.float64],
    start_hour: int,
    anchor: Optional[float],
) -> npt.NDArray[np.float64]:
    """AR(1) deviations around the hourly mean profile, one row per scenario."""
    n_scenarios, n_hours = innovations.shape
    phi, std = process.autocorrelation, process.std
    profile = np.asarray(process.mean_profile, dtype=float)
    means = profile[(start_hour + np.arange(n_hours)) % HOURS_PER_DAY]

    if anchor is None:
        previous = std * innovations[:, 0]
        shocks = innovations[:, 1:]
        deviations = np.empty((n_scenarios, n_hours))
        deviations[:, 0] = previous
        first = 1
    else:
        previous = np.full(n_scenarios, anchor - profile[(start_hour - 1) % HOURS_PER_DAY])
        shocks = innovations
        deviations = np.empty((n_scenarios, n_hours))
        first = 0

    scale = std * np.sqrt(1.0 - phi**2)
    for offset, hour in enumerate(range(first, n_hours)):
        previous = phi * previous + scale * shocks[:, offset]
        deviations[:, hour] = previous
    return means + deviations


def generate(
    model: WeatherModel,
    horizon_days: int,
    n_scenarios: int,
    seed: Optional[int] = None,
    anchor: Optional[Mapping[str, float]] = None,
    start_hour: int = 0,
) -> ScenarioSet:
    """
    Sample joint wind / wave / price trajectories.

    Args:
        horizon_days: number of long-term days N_D; paths hold 24 * (1 + N_D) hours
        seed: defaults to ``model.seed``
        anchor: last revealed value per variable (the hour before ``start_hour``);
            the AR recursion starts from it instead of the stationary law
        start_hour: clock hour of the first path entry

    Raises:
        InvalidInputError: non-positive scenario count or horizon.
    """
    if n_scenarios < 1:
        raise InvalidInputError("Need at least one scenario")
    if horizon_days < 1:
        raise InvalidInputError("The long-term horizon needs at least one day")

    n_hours = HOURS_PER_DAY * (1 + horizon_days)
    sequence = np.random.SeedSequence(model.seed if seed is None else seed)
    draws = np.stack(
        [np.random.default_rng(child).standard_normal((3, n_hours)) for child in sequence.spawn(n_scenarios)],
        axis=1,
    )  # (variable, scenario, hour)

    rho = model.wind_wave_correlation
    wave_shocks = rho * draws[0] + np.sqrt(1.0 - rho**2) * draws[1]
    shocks = {"wind": draws[0], "wave": wave_shocks, "price": draws[2]}
    anchor = anchor or {}

    paths: Dict[str, npt.NDArray[np.float64]] = {}
    for name in VARIABLES:
        process: VariableProcess = getattr(model, name)
        paths[name] = _ar_paths(process, shocks[name], start_hour, anchor.get(name))

    paths["wind"] = np.maximum(paths["wind"], 0.0)
    paths["wave"] = np.maximum(paths["wave"], 0.0)
    if not model.allow_negative_prices:
        paths["price"] = np.maximum(paths["price"], 0.0)

    logger.debug(
        "Generated scenarios",
        extra={"n_scenarios": n_scenarios, "horizon_days": horizon_days, "anchored": bool(anchor)},
    )
    return ScenarioSet(wind=paths["wind"], wave=paths["wave"], price=paths["price"])


def accessible(rule: AccessRule, wind: float, wave: float, hour: int) -> bool:
    """Strict thresholds; ``hour`` is a clock hour."""
    return bool(
        wind < rule.wind_threshold
        and wave < rule.wave_threshold
        and rule.first_light <= hour % HOURS_PER_DAY < rule.last_light
    )


def access_mask(
    rule: AccessRule, wind: npt.ArrayLike, wave: npt.ArrayLike, start_hour: int = 0
) -> npt.NDArray[np.bool_]:
    """Vectorised ``accessible`` along the last axis of hourly paths."""
    wind = np.asarray(wind, dtype=float)
    wave = np.asarray(wave, dtype=float)
    clock = (start_hour + np.arange(wind.shape[-1])) % HOURS_PER_DAY
    daylight = (clock >= rule.first_light) & (clock < rule.last_light)
    return (wind < rule.wind_threshold) & (wave < rule.wave_threshold) & daylight


def scan_mission_times(
    mask: npt.ArrayLike, starts: npt.ArrayLike, repair_hours: float, cap: int
) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.bool_]]:
    """
    Hours from each start until ``repair_hours`` accessible hours have elapsed.

    Inaccessible hours in between count toward the result. Starts whose
    repair does not complete within the path or within ``cap`` hours get
    ``cap`` and a True flag.
    """
    accessible_hours = np.asarray(mask, dtype=float)
    starts = np.asarray(starts, dtype=int)
    if repair_hours <= 0:
        raise InvalidInputError("Repair duration must be positive")
    if np.any(starts < 0) or np.any(starts >= accessible_hours.size):
        raise InvalidInputError("Mission start lies outside the scenario horizon")

    cumulative = np.cumsum(accessible_hours)
    before = np.where(starts > 0, cumulative[np.maximum(starts - 1, 0)], 0.0)
    finish = np.searchsorted(cumulative, before + repair_hours - 1e-9, side="left")
    hours = (finish - starts + 1).astype(float)
    capped = (finish >= cumulative.size) | (hours > cap)
    return np.where(capped, float(cap), hours), capped


def mission_time(
    rule: AccessRule,
    scenarios: ScenarioSet,
    scenario: int,
    turbine: int,
    start: int,
    repair_hours: Optional[float] = None,
) -> Tuple[float, bool]:
    """
    Mission time B in hours for one task starting at hour ``start`` of the path.

    The bare duration is ``repair_hours`` when given, otherwise corrective for
    a turbine that is down in that scenario (ζ⁰ = 0) and preventive else.
    """
    if not 0 <= scenario < scenarios.n_scenarios:
        raise InvalidInputError(f"Scenario {scenario} is not in the set")
    if repair_hours is None:
        down = scenarios.zeta0 is not None and scenarios.zeta0[turbine, scenario] == 0
        repair_hours = rule.corrective_hours if down else rule.preventive_hours
    mask = access_mask(rule, scenarios.wind[scenario], scenarios.wave[scenario])
    hours, capped = scan_mission_times(mask, [start], repair_hours, rule.mission_cap_hours)
    if capped[0]:
        logger.warning(
            "Mission time capped",
            extra={"scenario": scenario, "turbine": turbine, "start": start, "cap": rule.mission_cap_hours},
        )
    return float(hours[0]), bool(capped[0])


def _draw_rul(states: Sequence[DegradationState], n_scenarios: int, seed: int) -> npt.NDArray[np.float64]:
    children = np.random.SeedSequence(seed).spawn(len(states))
    rul0 = np.zeros((len(states), n_scenarios))
    for turbine, (state, child) in enumerate(zip(states, children)):
        try:
            dist = nominal_rul(state)
        except TurbineFailedError:
            continue
        rul0[turbine] = sample_rul(dist, n_scenarios, seed=int(child.generate_state(1)[0]))
    return rul0


def derive_parameters(
    scenarios: ScenarioSet,
    curve: BasePowerCurve,
    grid: YawGrid,
    table: LoadFactorTable,
    rule: AccessRule,
    states: Optional[Sequence[DegradationState]] = None,
    seed: int = 0,
    repair_overrides: Sequence[Optional[float]] = (),
) -> ScenarioSet:
    """
    Fill the optimiser's tensors for a raw scenario set.

    λ⁰ is drawn per turbine and scenario from each state's nominal RUL (0 for
    a failed turbine). Without ``states`` the set's own ``rul0`` is reused.
    ``repair_overrides[i]``, when not None, replaces turbine i's bare duration
    in the short-term mission times (remaining hours of a carried-over task).

    Raises:
        InvalidInputError: missing RUL input, or a load table whose yaw levels
            differ from the grid.
    """
    if states is not None:
        rul0 = _draw_rul(states, scenarios.n_scenarios, seed)
    elif scenarios.rul0 is not None:
        rul0 = np.asarray(scenarios.rul0, dtype=float)
    else:
        raise InvalidInputError("Deriving parameters needs degradation states or rul0 draws")
    if np.any(rul0 < 0):
        raise InvalidInputError("Baseline RUL must be nonnegative")
    if len(table.yaw_levels) != grid.size or not np.allclose(table.yaw_levels, grid.levels):
        raise InvalidInputError("Load table yaw levels do not match the yaw grid")

    n_turbines, n_scenarios, n_days = rul0.shape[0], scenarios.n_scenarios, scenarios.lth_days
    overrides = tuple(repair_overrides) + (None,) * (n_turbines - len(repair_overrides))
    if len(overrides) != n_turbines:
        raise InvalidInputError("One repair override per turbine at most")

    powers = power_table(curve, grid, scenarios.wind, n_turbines)

    factors, clamped = relative_rul_factors(table, scenarios.wind)  # (S, H, J)
    if np.any(clamped):
        logger.warning(
            "Scenario wind above load table range, clamped to last bin",
            extra={"clamped_hours": int(clamped.sum())},
        )
    factor_sth = np.transpose(factors[:, :HOURS_PER_DAY, :], (1, 2, 0))
    daily = factors[:, HOURS_PER_DAY:, :].reshape(n_scenarios, n_days, HOURS_PER_DAY, grid.size).mean(axis=2)
    factor_lth = np.transpose(daily, (1, 2, 0))
    factor_sth = np.repeat(factor_sth[:, None], n_turbines, axis=1)
    factor_lth = np.repeat(factor_lth[:, None], n_turbines, axis=1)

    zeta0 = (rul0 >= 1.0).astype(float)
    days = np.arange(1, n_days + 1, dtype=float)
    zeta0_lth = (rul0[None, :, :] >= days[:, None, None]).astype(float)

    mission_sth = np.zeros((HOURS_PER_DAY, n_turbines, n_scenarios))
    mission_lth = np.zeros((n_days, n_turbines, n_scenarios))
    capped_any = np.zeros((n_turbines, n_scenarios), dtype=bool)
    sth_starts = np.arange(HOURS_PER_DAY)
    lth_starts = HOURS_PER_DAY * days.astype(int) + rule.first_light
    cap = rule.mission_cap_hours
    for s in range(n_scenarios):
        mask = access_mask(rule, scenarios.wind[s], scenarios.wave[s])
        for i in range(n_turbines):
            bare = overrides[i]
            if bare is None:
                bare = rule.preventive_hours if zeta0[i, s] else rule.corrective_hours
            hours, capped = scan_mission_times(mask, sth_starts, bare, cap)
            mission_sth[:, i, s] = hours
            capped_any[i, s] |= bool(capped.any())
            for d in range(n_days):
                bare_lth = rule.preventive_hours if zeta0_lth[d, i, s] else rule.corrective_hours
                hours, capped = scan_mission_times(mask, lth_starts[d : d + 1], bare_lth, cap)
                mission_lth[d, i, s] = hours[0]
                capped_any[i, s] |= bool(capped[0])

    if capped_any.any():
        logger.info("Some mission times hit the cap", extra={"capped_pairs": int(capped_any.sum())})

    return replace(
        scenarios,
        rul0=rul0,
        power_sth=powers.sth,
        power_lth=powers.lth,
        power_lth_max=powers.lth_max,
        factor_sth=factor_sth,
        factor_lth=factor_lth,
        mission_sth=mission_sth,
        mission_lth=mission_lth,
        mission_capped=capped_any,
        zeta0=zeta0,
        zeta0_lth=zeta0_lth,
        context=DerivationContext(
            curve=curve, grid=grid, table=table, rule=rule, repair_overrides=overrides
        ),
    )


def mean_scenario(scenarios: ScenarioSet) -> ScenarioSet:
    """
    Collapse a set to one scenario: per-hour mean paths and mean λ⁰.

    A derived set is re-derived with the context it was built with.
    """
    reduced = ScenarioSet(
        wind=scenarios.wind.mean(axis=0, keepdims=True),
        wave=scenarios.wave.mean(axis=0, keepdims=True),
        price=scenarios.price.mean(axis=0, keepdims=True),
        rul0=None if scenarios.rul0 is None else scenarios.rul0.mean(axis=1, keepdims=True),
    )
    context = scenarios.context
    if context is None or reduced.rul0 is None:
        return reduced
    return derive_parameters(
        reduced,
        context.curve,
        context.grid,
        context.table,
        context.rule,
        repair_overrides=context.repair_overrides,
    )


def _long_frame(values: npt.NDArray[np.float64]) -> pd.DataFrame:
    scenario_index, period_index = np.indices(values.shape)
    return pd.DataFrame(
        {"scenario": scenario_index.ravel(), "period": period_index.ravel(), "value": values.ravel()}
    )


def _wide(frame: pd.DataFrame, path: str) -> npt.NDArray[np.float64]:
    missing = {"scenario", "period", "value"} - set(frame.columns)
    if missing:
        raise InvalidInputError(f"Scenario file {path} is missing columns {sorted(missing)}")
    table = frame.pivot(index="scenario", columns="period", values="value").sort_index(axis=0).sort_index(axis=1)
    if table.isna().to_numpy().any():
        raise InvalidInputError(f"Scenario file {path} has gaps")
    return table.to_numpy(dtype=float)


def dump_scenarios(scenarios: ScenarioSet, folder: str) -> None:
    """Write ``wind.csv``, ``wave.csv``, ``price.csv`` and, if drawn, ``rul0.csv``."""
    os.makedirs(folder, exist_ok=True)
    for name in VARIABLES:
        _long_frame(getattr(scenarios, name)).to_csv(os.path.join(folder, f"{name}.csv"), index=False)
    if scenarios.rul0 is not None:
        # turbine index goes in the period column
        _long_frame(scenarios.rul0.T).to_csv(os.path.join(folder, "rul0.csv"), index=False)


def load_scenarios(folder: str) -> ScenarioSet:
    """Read a raw scenario set written by ``dump_scenarios``."""
    paths = {}
    for name in VARIABLES:
        path = os.path.join(folder, f"{name}.csv")
        paths[name] = _wide(pd.read_csv(path, encoding="utf-8"), path)
    rul_path = os.path.join(folder, "rul0.csv")
    rul0 = None
    if os.path.exists(rul_path):
        rul0 = _wide(pd.read_csv(rul_path, encoding="utf-8"), rul_path).T
    return ScenarioSet(wind=paths["wind"], wave=paths["wave"], price=paths["price"], rul0=rul0)
