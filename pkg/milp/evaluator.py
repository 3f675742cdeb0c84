"""
Solver-free evaluation of the planning objective.

``objective_terms`` recomputes the four objective parts from the instance
data instead of the coefficient maps. ``enumerate_optimum`` is an exhaustive
search over joint maintenance plans for fleets of one or two turbines whose
operational status, healthy, failed or failing within the long-term days,
is fixed by the data; with the status fixed every period's yaw choice
separates, so the best yaw per turbine and period is taken directly.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from milp.entities import MilpInstance, ObjectiveBreakdown
from om_planner.errors import InvalidInputError
from scenario.entities import HOURS_PER_DAY


def _values(values: Mapping[str, float], family: str, shape: Tuple[int, ...], day_first: bool = False) -> np.ndarray:
    array = np.zeros(shape)
    for index in np.ndindex(*shape):
        key = (index[0] + 1, *index[1:]) if day_first else index
        array[index] = values.get("_".join([family, *map(str, key)]) if key else family, 0.0)
    return array


def objective_terms(instance: MilpInstance, values: Mapping[str, float]) -> ObjectiveBreakdown:
    I, D, _, S = instance.sizes
    H = HOURS_PER_DAY
    config, data = instance.config, instance.data
    weight = (1.0 - data.carryover) * data.criticality  # (I,)

    p = _values(values, "p", (H, I, S))
    x = _values(values, "x", (H, I, S))
    q = _values(values, "q", (S,))
    alpha_m = _values(values, "alpha_m", (H, I))
    short_term = (
        float(np.einsum("hs,his->", data.price_sth, p)) / S
        - config.crew_cost * float(x.sum()) / S
        - config.overtime_cost * float(q.sum()) / S
        - float(weight @ alpha_m.sum(axis=0))
        - config.vessel_cost * values.get("r", 0.0)
    )

    p_l = _values(values, "p_l", (D, I, S), day_first=True)
    alpha_m_l = _values(values, "alpha_m_l", (D, I, S), day_first=True)
    m_l = _values(values, "m_l", (D, I, S), day_first=True)
    r_l = _values(values, "r_l", (D, S), day_first=True)
    q_l = _values(values, "q_l", (D, S), day_first=True)
    long_term = (
        float(np.einsum("ds,dis->", data.price_lth, p_l))
        - float(np.einsum("i,dis->", weight, alpha_m_l))
        - config.crew_cost * float((data.mission_lth * m_l).sum())
        - config.vessel_cost * float(r_l.sum())
        - config.overtime_cost * float(q_l.sum())
    ) / S

    w = _values(values, "w", (I, S))
    b = _values(values, "b", (I, S))
    interruptions = float((w * data.interruption_upfront + b * data.interruption_hourly).sum()) / S

    lam = _values(values, "lam", (I, S))
    m = _values(values, "m", (H, I))
    started_sth = m.sum(axis=0)[:, None]  # (I, 1)
    days = np.arange(1, D + 1)[:, None, None]
    lost = data.rul0 * started_sth + ((data.rul0[None] - days) * m_l).sum(axis=0)
    end_of_horizon = config.rul_value * float((lam - data.rul0 - lost).sum()) / S

    return ObjectiveBreakdown(
        short_term_profit=short_term,
        long_term_profit=long_term,
        prolonged_interruptions=interruptions,
        end_of_horizon=end_of_horizon,
    )


@dataclass(frozen=True)
class MaintenancePlan:
    """
    One maintenance choice for a single turbine.

    ``sth_hour`` is the short-term start; otherwise ``lth_days`` holds the
    long-term day per scenario. Both empty means no maintenance.
    """

    sth_hour: Optional[int] = None
    lth_days: Tuple[int, ...] = ()

    @property
    def maintains(self) -> bool:
        return self.sth_hour is not None or bool(self.lth_days)

    def lth_day(self, scenario: int) -> Optional[int]:
        return self.lth_days[scenario] if self.lth_days else None


FleetPlan = Tuple[MaintenancePlan, ...]


@dataclass(frozen=True)
class _Status:
    """Operational status implied by the data, per turbine and scenario."""

    sth: np.ndarray  # (I, S)
    lth: np.ndarray  # (D, I, S)
    forced: Tuple[bool, ...]  # (I,)


def _allowed_levels(instance: MilpInstance) -> Sequence[int]:
    if instance.yaw_fixed_level is not None:
        return (instance.yaw_fixed_level,)
    return range(instance.n_levels)


def _rul_range(instance: MilpInstance) -> Tuple[np.ndarray, np.ndarray]:
    """Smallest and largest end-of-horizon RUL over every allowed yaw assignment."""
    I, D, _, S = instance.sizes
    data = instance.data
    levels = list(_allowed_levels(instance))
    shutdown = instance.yaw_fixed_level is None
    low, high = data.rul0.copy(), data.rul0.copy()
    for i in range(I):
        for s in range(S):
            sth = 1.0 - data.factor_sth[:, i, levels, s]  # (H, levels)
            lth = 1.0 - data.factor_lth[:, i, levels, s]  # (D, levels)
            if shutdown:
                sth = np.column_stack([sth, np.ones(HOURS_PER_DAY)])
                lth = np.column_stack([lth, np.ones(D)])
            sth *= data.zeta0[i, s] / HOURS_PER_DAY
            lth *= data.zeta0_lth[:, i, s][:, None]
            low[i, s] += sth.min(axis=1).sum() + lth.min(axis=1).sum()
            high[i, s] += sth.max(axis=1).sum() + lth.max(axis=1).sum()
    return low, high


def _settle(low: float, high: float, level: float) -> bool:
    # operational at ``level`` days whenever the RUL can reach it
    if low >= level:
        return True
    if high < level:
        return False
    raise InvalidInputError(f"Operational status at {level:g} days depends on yaw decisions; instance is not separable")


def _check_separable(instance: MilpInstance) -> _Status:
    """Validate the oracle's preconditions and fix the status every yaw assignment implies."""
    I, D, _, S = instance.sizes
    if I > 2:
        raise InvalidInputError("Exhaustive evaluation supports one or two turbines")
    if instance.data.carryover.any():
        raise InvalidInputError("Exhaustive evaluation needs turbines without a carried-over task")
    low, high = _rul_range(instance)
    sth = np.array([[_settle(low[i, s], high[i, s], 1.0) for s in range(S)] for i in range(I)])
    lth = np.array(
        [[[_settle(low[i, s], high[i, s], float(d)) for s in range(S)] for i in range(I)] for d in range(1, D + 1)]
    )
    threshold = instance.config.maintenance_threshold_days
    forced = []
    for i in range(I):
        if (high[i] < threshold).any():
            forced.append(True)
        elif (low[i] >= threshold).all():
            forced.append(False)
        else:
            raise InvalidInputError("Maintenance trigger depends on yaw decisions; instance is not separable")
    return _Status(sth=sth, lth=lth, forced=tuple(forced))


def _turbine_plans(instance: MilpInstance, forced: bool) -> List[MaintenancePlan]:
    plans = [] if forced else [MaintenancePlan()]
    plans += [MaintenancePlan(sth_hour=hour) for hour in range(instance.data.first_light, instance.data.last_light)]
    days = range(1, instance.lth_days + 1)
    plans += [MaintenancePlan(lth_days=tuple(choice)) for choice in itertools.product(days, repeat=instance.n_scenarios)]
    return plans


def candidate_plans(instance: MilpInstance) -> Iterator[FleetPlan]:
    status = _check_separable(instance)
    per_turbine = [_turbine_plans(instance, forced) for forced in status.forced]
    yield from itertools.product(*per_turbine)


def _overtime(instance: MilpInstance, hours: float) -> Optional[float]:
    """Overtime for ``hours`` of crew work; None above the cap."""
    config = instance.config
    overtime = max(0.0, hours - config.crews * config.shift_hours)
    if config.integer_overtime:
        overtime = float(math.ceil(overtime - 1e-9))
    if overtime > config.max_overtime + 1e-9:
        return None
    return overtime


def evaluate_plan(instance: MilpInstance, plan: Sequence[MaintenancePlan]) -> Optional[float]:
    """Best objective with ``plan`` (one entry per turbine) fixed; None when the plan is infeasible."""
    from milp.services import dmc_direct

    status = _check_separable(instance)
    config, data = instance.config, instance.data
    I, D, _, S = instance.sizes
    if len(plan) != I:
        raise InvalidInputError(f"Need one maintenance plan per turbine, got {len(plan)} for {I}")
    H = HOURS_PER_DAY
    R = data.rated_capacity
    value_per_day = config.rul_value / S
    levels = _allowed_levels(instance)
    shutdown = instance.yaw_fixed_level is None
    sth_alive = status.sth.sum(axis=1)  # (I,)
    lth_alive = status.lth.sum(axis=2)  # (D, I)

    total = 0.0
    busy = np.zeros((H, I, S), dtype=bool)
    unfinished = np.zeros((I, S))
    if any(choice.sth_hour is not None for choice in plan):
        total -= config.vessel_cost
    for i, choice in enumerate(plan):
        start = choice.sth_hour
        if start is None:
            continue
        t_c = float(data.elapsed_days[i])
        total -= data.criticality[i] * dmc_direct(0, int(sth_alive[i]), [], S, config, t_c)
        for s in range(S):
            mission = data.mission_sth[start, i, s]
            busy[start : start + int(min(H - start, mission)), i, s] = True
            unfinished[i, s] = math.ceil(max(mission - (H - start), 0.0) - 1e-9)
            total -= (
                data.interruption_hourly[s] * unfinished[i, s] + data.interruption_upfront[s] * (unfinished[i, s] > 0)
            ) / S
            total -= value_per_day * data.rul0[i, s]

    # crews are billed and limited over the daylight part of the short-term day
    for s in range(S):
        if (busy[: data.last_light, :, s].sum(axis=1) > config.crews).any():
            return None
        crew_hours = int(busy[: data.last_light, :, s].sum())
        overtime = _overtime(instance, crew_hours)
        if overtime is None:
            return None
        total -= (config.crew_cost * crew_hours + config.overtime_cost * overtime) / S

    # first long-term day also absorbs the short-term spill-over
    for s in range(S):
        for d in range(1, D + 1):
            hours = float(unfinished[:, s].sum()) if d == 1 else 0.0
            tasks = [i for i, choice in enumerate(plan) if choice.lth_day(s) == d]
            hours += sum(data.mission_lth[d - 1, i, s] for i in tasks)
            overtime = _overtime(instance, hours)
            if overtime is None:
                return None
            total -= config.overtime_cost * overtime / S
            if tasks:
                total -= config.vessel_cost / S
            for i in tasks:
                lth_counts = [int(count) for count in lth_alive[:, i]]
                rate = dmc_direct(d, int(sth_alive[i]), lth_counts, S, config, float(data.elapsed_days[i]))
                total -= (data.criticality[i] * rate + config.crew_cost * data.mission_lth[d - 1, i, s]) / S
                total -= value_per_day * (data.rul0[i, s] - d)

    # per-hour yaw, shared across scenarios
    for i, choice in enumerate(plan):
        for h in range(H):
            restored = choice.sth_hour is not None and choice.sth_hour <= h
            available = [(status.sth[i, s] or restored) and not busy[h, i, s] for s in range(S)]
            options = [value_per_day * float(data.zeta0[i].sum()) / H] if shutdown else []
            for j in levels:
                revenue = sum(
                    max(data.price_sth[h, s], 0.0) * R * data.power_sth[h, i, j, s] * available[s] for s in range(S)
                )
                life = sum(data.zeta0[i, s] * (1.0 - data.factor_sth[h, i, j, s]) for s in range(S)) / H
                options.append(revenue / S + value_per_day * life)
            total += max(options)

    # per-day yaw, scenario dependent
    for i, choice in enumerate(plan):
        for s in range(S):
            task_day = choice.lth_day(s)
            for d in range(1, D + 1):
                available = status.lth[d - 1, i, s] or (task_day is not None and task_day <= d)
                gate = data.zeta0_lth[d - 1, i, s]
                best = data.power_lth_max[d - 1, i, s]
                lost = min(data.mission_lth[d - 1, i, s], H) if task_day == d else 0.0
                cap = min(R * best * (H - lost), H * R * available)
                options = [value_per_day * gate] if shutdown else []
                for j in levels:
                    power = min(H * R * data.power_lth[d - 1, i, j, s], cap)
                    revenue = max(data.price_lth[d - 1, s], 0.0) * power
                    options.append(revenue / S + value_per_day * gate * (1.0 - data.factor_lth[d - 1, i, j, s]))
                total += max(options)
    return total


def enumerate_optimum(instance: MilpInstance) -> Tuple[Optional[float], Optional[FleetPlan]]:
    """The best fleet plan and its objective; (None, None) when no plan is feasible."""
    best_value: Optional[float] = None
    best_plan: Optional[FleetPlan] = None
    for plan in candidate_plans(instance):
        value = evaluate_plan(instance, plan)
        if value is not None and (best_value is None or value > best_value):
            best_value, best_plan = value, plan
    return best_value, best_plan
