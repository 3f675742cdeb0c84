"""
Ledger construction for the yaw and maintenance MILP.

Index algebra: short-term hours h are 0..23 and a task started at h occupies
h .. h + min(24 - h, B) - 1; its spill into the long term is
[B - (24 - h)]^+. Long-term days d are 1..N_D.
"""

import logging
import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from milp.entities import (
    Constraint,
    InstanceData,
    MilpConfig,
    MilpInstance,
    Sense,
    TurbineBoundary,
    Variable,
    VariableKind,
)
from om_planner.errors import InvalidInputError
from scenario.entities import HOURS_PER_DAY, ScenarioSet

logger = logging.getLogger("om_planner")

BINARY, INTEGER, CONTINUOUS = VariableKind.BINARY, VariableKind.INTEGER, VariableKind.CONTINUOUS

# rows that exist for bookkeeping rather than as part of the formulation
PLUMBING_TAGS = frozenset({"carryover"})

TAGS = (
    "yaw_choice",
    "yaw_choice_lth",
    "rul_embedding",
    "status_floor",
    "status_ceiling",
    "status_floor_lth",
    "status_ceiling_lth",
    "repair_cost_link",
    "repair_cost_link_lth",
    "single_task",
    "task_trigger",
    "carryover",
    "task_occupancy",
    "unfinished_hours",
    "unfinished_flag",
    "crew_occupancy",
    "crew_limit",
    "availability",
    "availability_lth",
    "maintenance_downtime",
    "yaw_power",
    "yaw_power_lth",
    "availability_power",
    "availability_power_lth",
    "mission_power_lth",
    "vessel",
    "vessel_lth",
    "work_hours",
    "overtime_cap",
    "work_hours_lth_first",
    "work_hours_lth",
    "overtime_cap_lth",
    "dmc",
    "dmc_link",
    "dmc_lth",
    "dmc_link_lth_sth_status",
    "dmc_link_lth",
)

OBJECTIVE_TERMS = ("short_term_profit", "long_term_profit", "prolonged_interruptions", "end_of_horizon")


def var_name(family: str, *index: int) -> str:
    return family + "".join(f"_{k}" for k in index)


def expected_counts(
    n_turbines: int, lth_days: int, n_levels: int, n_scenarios: int, integer_overtime: bool = False
) -> Dict[str, int]:
    """Closed-form variable and row counts, keyed like ``MilpInstance.counts``."""
    I, D, J, S, H = n_turbines, lth_days, n_levels, n_scenarios, HOURS_PER_DAY
    pairs = D * (D + 1) // 2

    binary = (
        H * I  # m
        + H * I * J  # gamma
        + D * I * S  # m_l
        + D * I * J * S  # gamma_l
        + I * S  # zeta
        + D * I * S  # zeta_l
        + I  # theta
        + 3 * H * I * S  # u, x, y
        + 1  # r
        + D * S  # r_l
        + I * S  # w
        + D * I * S  # y_l
    )
    overtime = S + D * S
    integer = I * S + (overtime if integer_overtime else 0)
    continuous = (
        I * S  # lam
        + (0 if integer_overtime else overtime)
        + H * I * S  # p
        + D * I * S  # p_l
        + H * I  # alpha_m
        + D * I * S  # alpha_m_l
        + I  # c
        + D * I  # c_l
        + I * S  # alpha_c
        + D * I * S  # alpha_c0_l
        + pairs * I * S  # alpha_c_l
    )

    rows = {
        "yaw_choice": H * I,
        "yaw_choice_lth": D * I * S,
        "rul_embedding": I * S,
        "status_floor": I * S,
        "status_ceiling": I * S,
        "status_floor_lth": D * I * S,
        "status_ceiling_lth": D * I * S,
        "repair_cost_link": 3 * H * I,
        "repair_cost_link_lth": 3 * D * I * S,
        "single_task": I * S,
        "task_trigger": I * S,
        "carryover": I,
        "task_occupancy": H * I * S,
        "unfinished_hours": I * S,
        "unfinished_flag": I * S,
        "crew_occupancy": H * I * S,
        "crew_limit": H * S,
        "availability": H * I * S,
        "availability_lth": D * I * S,
        "maintenance_downtime": H * I * S,
        "yaw_power": H * I * S,
        "yaw_power_lth": D * I * S,
        "availability_power": H * I * S,
        "availability_power_lth": D * I * S,
        "mission_power_lth": D * I * S,
        "vessel": 1,
        "vessel_lth": D * S,
        "work_hours": S,
        "overtime_cap": S,
        "work_hours_lth_first": S,
        "work_hours_lth": (D - 1) * S,
        "overtime_cap_lth": D * S,
        "dmc": I,
        "dmc_link": 3 * I * S,
        "dmc_lth": D * I,
        "dmc_link_lth_sth_status": 3 * D * I * S,
        "dmc_link_lth": 3 * pairs * I * S,
    }
    counts = {
        "variables": binary + integer + continuous,
        "constraints": sum(rows.values()),
        "variables.binary": binary,
        "variables.integer": integer,
        "variables.continuous": continuous,
    }
    counts.update({f"constraints.{tag}": n for tag, n in rows.items() if n})
    return counts


class _Ledger:
    def __init__(self) -> None:
        self.variables: Dict[str, Variable] = {}
        self.constraints: List[Constraint] = []
        self._row_counter: Dict[str, int] = {}

    def var(
        self,
        family: str,
        index: Tuple[int, ...],
        kind: VariableKind,
        lower: float = 0.0,
        upper: float = math.inf,
    ) -> str:
        name = var_name(family, *index)
        if name in self.variables:
            raise InvalidInputError(f"Duplicate variable {name}")
        if kind is BINARY:
            upper = min(upper, 1.0)
        self.variables[name] = Variable(name, family, index, kind, lower, upper)
        return name

    def row(self, tag: str, terms: Sequence[Tuple[str, float]], sense: Sense, rhs: float) -> None:
        coefficients: Dict[str, float] = {}
        for name, coef in terms:
            if name not in self.variables:
                raise InvalidInputError(f"Row {tag} references unknown variable {name}")
            if coef:
                coefficients[name] = coefficients.get(name, 0.0) + float(coef)
        counter = self._row_counter.get(tag, 0)
        self._row_counter[tag] = counter + 1
        self.constraints.append(
            Constraint(f"{tag}_{counter}", tag, coefficients, sense, float(rhs))
        )


class _Objective:
    def __init__(self) -> None:
        self.terms: Dict[str, Dict[str, float]] = {term: {} for term in OBJECTIVE_TERMS}
        self.constants: Dict[str, float] = {term: 0.0 for term in OBJECTIVE_TERMS}

    def add(self, term: str, name: str, coef: float) -> None:
        if coef:
            bucket = self.terms[term]
            bucket[name] = bucket.get(name, 0.0) + float(coef)

    def merged(self) -> Dict[str, float]:
        total: Dict[str, float] = {}
        for bucket in self.terms.values():
            for name, coef in bucket.items():
                total[name] = total.get(name, 0.0) + coef
        return total


def _instance_data(
    config: MilpConfig, boundary: Sequence[TurbineBoundary], scenarios: ScenarioSet, yaw_fixed_level: Optional[int]
) -> InstanceData:
    context = scenarios.context
    assert context is not None and scenarios.rul0 is not None
    factor_sth = np.asarray(scenarios.factor_sth, dtype=float)
    factor_lth = np.asarray(scenarios.factor_lth, dtype=float)
    if yaw_fixed_level is not None:
        # pinned yaw: every column carries the pinned level's factors
        factor_sth = np.repeat(factor_sth[:, :, yaw_fixed_level : yaw_fixed_level + 1, :], factor_sth.shape[2], axis=2)
        factor_lth = np.repeat(factor_lth[:, :, yaw_fixed_level : yaw_fixed_level + 1, :], factor_lth.shape[2], axis=2)

    rated = context.curve.rated_capacity
    n_scenarios = scenarios.n_scenarios
    upfront = config.interruption_upfront
    hourly = config.interruption_hourly
    return InstanceData(
        price_sth=scenarios.price_sth,
        price_lth=scenarios.price_daily,
        power_sth=np.asarray(scenarios.power_sth, dtype=float),
        power_lth=np.asarray(scenarios.power_lth, dtype=float),
        power_lth_max=np.asarray(scenarios.power_lth_max, dtype=float),
        factor_sth=factor_sth,
        factor_lth=factor_lth,
        mission_sth=np.ceil(np.asarray(scenarios.mission_sth, dtype=float)),
        mission_lth=np.asarray(scenarios.mission_lth, dtype=float),
        rul0=np.asarray(scenarios.rul0, dtype=float),
        zeta0=np.asarray(scenarios.zeta0, dtype=float),
        zeta0_lth=np.asarray(scenarios.zeta0_lth, dtype=float),
        carryover=np.array([1.0 if b.carryover else 0.0 for b in boundary]),
        criticality=np.array([b.criticality for b in boundary], dtype=float),
        elapsed_days=np.array([b.elapsed_days for b in boundary], dtype=float),
        interruption_upfront=np.full(n_scenarios, config.vessel_cost if upfront is None else upfront),
        interruption_hourly=(
            scenarios.price.mean(axis=1) * rated if hourly is None else np.full(n_scenarios, hourly)
        ),
        rated_capacity=rated,
        first_light=context.rule.first_light,
        last_light=context.rule.last_light,
    )


def build(
    config: MilpConfig,
    boundary: Sequence[TurbineBoundary],
    scenarios: ScenarioSet,
    yaw_fixed_level: Optional[int] = None,
) -> MilpInstance:
    """
    Build the stochastic MILP for one roll.

    Args:
        boundary: one entry per turbine
        yaw_fixed_level: when set, this level is selected in every period
            and every other level is bounded to 0, so there is no shut-down
            option; power is still capped by availability

    Raises:
        InvalidInputError: underived scenarios, boundary/turbine mismatch,
            non-positive elapsed life or an out-of-range pinned level.
    """
    if not scenarios.derived or scenarios.context is None:
        raise InvalidInputError("Scenario tensors must be derived before building the MILP")
    n_turbines = scenarios.n_turbines
    if len(boundary) != n_turbines:
        raise InvalidInputError(f"Expected {n_turbines} turbine boundaries, got {len(boundary)}")
    if any(b.elapsed_days <= 0 for b in boundary):
        raise InvalidInputError("Elapsed life t_c must be positive for the maintenance cost rate")
    n_levels = scenarios.context.grid.size
    if yaw_fixed_level is not None and not 0 <= yaw_fixed_level < n_levels:
        raise InvalidInputError(f"Pinned yaw level {yaw_fixed_level} is not on the grid")

    data = _instance_data(config, boundary, scenarios, yaw_fixed_level)
    I, D, J, S, H = n_turbines, scenarios.lth_days, n_levels, scenarios.n_scenarios, HOURS_PER_DAY
    R = data.rated_capacity
    turbines, hours, days, levels, scen = range(I), range(H), range(1, D + 1), range(J), range(S)
    global_m = config.big_m

    def big(tight: float) -> float:
        return global_m if global_m is not None else tight

    def pin(level: int) -> Tuple[float, float]:
        # (lower, upper) of a yaw indicator; a pinned grid runs its level every period
        if yaw_fixed_level is None:
            return 0.0, 1.0
        return (1.0, 1.0) if level == yaw_fixed_level else (0.0, 0.0)

    ledger, objective = _Ledger(), _Objective()
    v = ledger.var
    overtime_kind = INTEGER if config.integer_overtime else CONTINUOUS

    # decision variables
    for h in hours:
        daylight = data.first_light <= h < data.last_light
        for i in turbines:
            v("m", (h, i), BINARY, upper=1.0 if daylight else 0.0)
            for j in levels:
                v("gamma", (h, i, j), BINARY, *pin(j))
    for d in days:
        for i in turbines:
            for s in scen:
                v("m_l", (d, i, s), BINARY)
                for j in levels:
                    v("gamma_l", (d, i, j, s), BINARY, *pin(j))

    # state and resource variables
    lam_low = np.zeros((I, S))
    lam_high = np.zeros((I, S))
    cost_cap = np.zeros(I)
    for i in turbines:
        cost_cap[i] = config.corrective_cost / data.elapsed_days[i]
        v("theta", (i,), BINARY)
        v("c", (i,), CONTINUOUS, upper=cost_cap[i])
        for d in days:
            v("c_l", (d, i), CONTINUOUS, upper=cost_cap[i])
        for s in scen:
            peak = max(float(data.factor_sth[:, i, :, s].max()), float(data.factor_lth[:, i, :, s].max()))
            lam_low[i, s] = data.rul0[i, s] - (1 + D) * max(peak - 1.0, 0.0)
            lam_high[i, s] = data.rul0[i, s] + 1 + D
            v("lam", (i, s), CONTINUOUS, lower=lam_low[i, s], upper=lam_high[i, s])
            v("zeta", (i, s), BINARY)
            v("b", (i, s), INTEGER)
            v("w", (i, s), BINARY)
            v("alpha_c", (i, s), CONTINUOUS, upper=cost_cap[i])
            for h in hours:
                v("u", (h, i, s), BINARY)
                v("x", (h, i, s), BINARY)
                v("y", (h, i, s), BINARY)
                v("p", (h, i, s), CONTINUOUS)
            for d in days:
                v("zeta_l", (d, i, s), BINARY)
                v("y_l", (d, i, s), BINARY)
                v("p_l", (d, i, s), CONTINUOUS)
                v("alpha_m_l", (d, i, s), CONTINUOUS, upper=cost_cap[i])
                v("alpha_c0_l", (d, i, s), CONTINUOUS, upper=cost_cap[i])
                for d_low in range(1, d + 1):
                    v("alpha_c_l", (d_low, d, i, s), CONTINUOUS, upper=cost_cap[i])
        for h in hours:
            v("alpha_m", (h, i), CONTINUOUS, upper=cost_cap[i])
    v("r", (), BINARY)
    for s in scen:
        v("q", (s,), overtime_kind)
        for d in days:
            v("q_l", (d, s), overtime_kind)
            v("r_l", (d, s), BINARY)

    n = var_name
    row = ledger.row
    LE, GE, EQ = Sense.LE, Sense.GE, Sense.EQ

    # at most one yaw level per period
    for h in hours:
        for i in turbines:
            row("yaw_choice", [(n("gamma", h, i, j), 1.0) for j in levels], LE, 1.0)
    for d in days:
        for i in turbines:
            for s in scen:
                row("yaw_choice_lth", [(n("gamma_l", d, i, j, s), 1.0) for j in levels], LE, 1.0)

    # RUL embedding and operational status
    for i in turbines:
        for s in scen:
            lam = n("lam", i, s)
            zeta0 = data.zeta0[i, s]
            terms = [(lam, 1.0)]
            for h in hours:
                terms += [(n("gamma", h, i, j), zeta0 * data.factor_sth[h, i, j, s] / H) for j in levels]
            for d in days:
                gate = data.zeta0_lth[d - 1, i, s]
                terms += [(n("gamma_l", d, i, j, s), gate * data.factor_lth[d - 1, i, j, s]) for j in levels]
            rhs = data.rul0[i, s] + zeta0 + float(data.zeta0_lth[:, i, s].sum())
            row("rul_embedding", terms, EQ, rhs)

            row("status_floor", [(n("zeta", i, s), 1.0), (lam, -1.0)], LE, 0.0)
            row("status_ceiling", [(lam, 1.0), (n("zeta", i, s), -big(max(lam_high[i, s] - 1.0, 0.0)))], LE, 1.0)
            for d in days:
                row("status_floor_lth", [(n("zeta_l", d, i, s), float(d)), (lam, -1.0)], LE, 0.0)
                row(
                    "status_ceiling_lth",
                    [(lam, 1.0), (n("zeta_l", d, i, s), -big(max(lam_high[i, s] - d, 0.0)))],
                    LE,
                    float(d),
                )

    # repair cost products alpha^m = c m
    for i in turbines:
        cap = big(cost_cap[i])
        for h in hours:
            am, m, c = n("alpha_m", h, i), n("m", h, i), n("c", i)
            row("repair_cost_link", [(am, 1.0), (m, -cap)], LE, 0.0)
            row("repair_cost_link", [(am, 1.0), (c, -1.0)], LE, 0.0)
            row("repair_cost_link", [(am, 1.0), (c, -1.0), (m, -cap)], GE, -cap)
        for d in days:
            for s in scen:
                am, m, c = n("alpha_m_l", d, i, s), n("m_l", d, i, s), n("c_l", d, i)
                row("repair_cost_link_lth", [(am, 1.0), (m, -cap)], LE, 0.0)
                row("repair_cost_link_lth", [(am, 1.0), (c, -1.0)], LE, 0.0)
                row("repair_cost_link_lth", [(am, 1.0), (c, -1.0), (m, -cap)], GE, -cap)

    # maintenance requirement
    threshold = config.maintenance_threshold_days
    for i in turbines:
        theta = n("theta", i)
        for s in scen:
            terms = [(n("m", h, i), 1.0) for h in hours] + [(n("m_l", d, i, s), 1.0) for d in days]
            row("single_task", terms + [(theta, -1.0)], EQ, 0.0)
            row(
                "task_trigger",
                [(n("lam", i, s), -1.0), (theta, -big(max(threshold - lam_low[i, s], 0.0)))],
                LE,
                -threshold,
            )
        row("carryover", [(theta, 1.0)], GE, data.carryover[i])

    # occupancy, spill-over and crews
    for i in turbines:
        for s in scen:
            residuals = []
            for h in hours:
                mission = data.mission_sth[h, i, s]
                span = int(min(H - h, mission))
                terms = [(n("u", t, i, s), 1.0) for t in range(h, h + span)]
                row("task_occupancy", terms + [(n("m", h, i), -float(span))], GE, 0.0)
                residuals.append(max(mission - (H - h), 0.0))
            row(
                "unfinished_hours",
                [(n("b", i, s), 1.0)] + [(n("m", h, i), -residuals[h]) for h in hours],
                GE,
                0.0,
            )
            row(
                "unfinished_flag",
                [(n("b", i, s), 1.0), (n("w", i, s), -big(max(math.ceil(max(residuals)), 1.0)))],
                LE,
                0.0,
            )
            for h in hours:
                row(
                    "crew_occupancy",
                    [(n("x", h, i, s), 1.0), (n("u", h, i, s), -1.0)],
                    GE,
                    -h / data.last_light,
                )
    for s in scen:
        for h in hours:
            row("crew_limit", [(n("x", h, i, s), 1.0) for i in turbines], LE, float(config.crews))

    # availability
    for i in turbines:
        operational = 1.0 - data.carryover[i]
        for s in scen:
            for h in hours:
                terms = [(n("y", h, i, s), 1.0), (n("zeta", i, s), -operational)]
                terms += [(n("m", t, i), -(H - t) / (H - h)) for t in hours]
                row("availability", terms, LE, 0.0)
            for d in days:
                terms = [(n("y_l", d, i, s), 1.0), (n("zeta_l", d, i, s), -operational)]
                if d < D:
                    terms += [(n("m_l", e, i, s), -(D - e) / (D - d)) for e in days]
                else:
                    terms += [(n("m_l", e, i, s), -1.0) for e in days]
                row("availability_lth", terms, LE, 0.0)
            for h in hours:
                row("maintenance_downtime", [(n("y", h, i, s), 1.0), (n("u", h, i, s), 1.0)], LE, 1.0)

    # power
    for i in turbines:
        for s in scen:
            for h in hours:
                p = n("p", h, i, s)
                row(
                    "yaw_power",
                    [(p, 1.0)] + [(n("gamma", h, i, j), -R * data.power_sth[h, i, j, s]) for j in levels],
                    LE,
                    0.0,
                )
                row("availability_power", [(p, 1.0), (n("y", h, i, s), -R)], LE, 0.0)
            for d in days:
                p = n("p_l", d, i, s)
                row(
                    "yaw_power_lth",
                    [(p, 1.0)]
                    + [(n("gamma_l", d, i, j, s), -H * R * data.power_lth[d - 1, i, j, s]) for j in levels],
                    LE,
                    0.0,
                )
                row("availability_power_lth", [(p, 1.0), (n("y_l", d, i, s), -H * R)], LE, 0.0)
                best = data.power_lth_max[d - 1, i, s]
                # the power loss of a long-term task is bounded by its own day
                lost = min(data.mission_lth[d - 1, i, s], H)
                row(
                    "mission_power_lth",
                    [(p, 1.0), (n("m_l", d, i, s), R * best * lost)],
                    LE,
                    H * R * best,
                )

    # vessels, work hours and overtime
    vessel_m = big(float(I))
    row("vessel", [(n("r"), vessel_m)] + [(n("m", h, i), -1.0) for h in hours for i in turbines], GE, 0.0)
    regular = config.crews * config.shift_hours
    for s in scen:
        for d in days:
            row("vessel_lth", [(n("r_l", d, s), vessel_m)] + [(n("m_l", d, i, s), -1.0) for i in turbines], GE, 0.0)
        row(
            "work_hours",
            [(n("x", h, i, s), 1.0) for h in hours for i in turbines] + [(n("q", s), -1.0)],
            LE,
            regular,
        )
        row("overtime_cap", [(n("q", s), 1.0)], LE, config.max_overtime)
        for d in days:
            terms = [(n("m_l", d, i, s), data.mission_lth[d - 1, i, s]) for i in turbines]
            if d == 1:
                terms += [(n("b", i, s), 1.0) for i in turbines]
                row("work_hours_lth_first", terms + [(n("q_l", d, s), -1.0)], LE, regular)
            else:
                row("work_hours_lth", terms + [(n("q_l", d, s), -1.0)], LE, regular)
        for d in days:
            row("overtime_cap_lth", [(n("q_l", d, s), 1.0)], LE, config.max_overtime)

    # dynamic maintenance cost rate
    spread = config.corrective_cost - config.preventive_cost
    full = config.corrective_cost * S
    for i in turbines:
        cap = big(cost_cap[i])
        t_c = data.elapsed_days[i]
        c = n("c", i)
        terms = [(n("alpha_c", i, s), 1.0) for s in scen] + [(c, S * t_c)]
        terms += [(n("zeta", i, s), spread) for s in scen]
        row("dmc", terms, EQ, full)
        for s in scen:
            ac, z = n("alpha_c", i, s), n("zeta", i, s)
            row("dmc_link", [(ac, 1.0), (z, -cap)], LE, 0.0)
            row("dmc_link", [(ac, 1.0), (c, -1.0)], LE, 0.0)
            row("dmc_link", [(ac, 1.0), (c, -1.0), (z, -cap)], GE, -cap)
        for d in days:
            c_l = n("c_l", d, i)
            terms = [(n("alpha_c0_l", d, i, s), 1.0) for s in scen]
            terms += [(n("alpha_c_l", e, d, i, s), 1.0) for e in range(1, d + 1) for s in scen]
            terms += [(c_l, S * t_c)] + [(n("zeta_l", d, i, s), spread) for s in scen]
            row("dmc_lth", terms, EQ, full)
        for d in days:
            c_l = n("c_l", d, i)
            for s in scen:
                ac, z = n("alpha_c0_l", d, i, s), n("zeta", i, s)
                row("dmc_link_lth_sth_status", [(ac, 1.0), (z, -cap)], LE, 0.0)
                row("dmc_link_lth_sth_status", [(ac, 1.0), (c_l, -1.0)], LE, 0.0)
                row("dmc_link_lth_sth_status", [(ac, 1.0), (c_l, -1.0), (z, -cap)], GE, -cap)
        for d in days:
            c_l = n("c_l", d, i)
            for e in range(1, d + 1):
                for s in scen:
                    ac, z = n("alpha_c_l", e, d, i, s), n("zeta_l", e, i, s)
                    row("dmc_link_lth", [(ac, 1.0), (z, -cap)], LE, 0.0)
                    row("dmc_link_lth", [(ac, 1.0), (c_l, -1.0)], LE, 0.0)
                    row("dmc_link_lth", [(ac, 1.0), (c_l, -1.0), (z, -cap)], GE, -cap)

    # objective
    add = objective.add
    for s in scen:
        for i in turbines:
            for h in hours:
                add("short_term_profit", n("p", h, i, s), data.price_sth[h, s] / S)
                add("short_term_profit", n("x", h, i, s), -config.crew_cost / S)
        add("short_term_profit", n("q", s), -config.overtime_cost / S)
    for i in turbines:
        weight = (1.0 - data.carryover[i]) * data.criticality[i]
        for h in hours:
            add("short_term_profit", n("alpha_m", h, i), -weight)
    add("short_term_profit", n("r"), -config.vessel_cost)

    for d in days:
        for s in scen:
            for i in turbines:
                weight = (1.0 - data.carryover[i]) * data.criticality[i]
                add("long_term_profit", n("p_l", d, i, s), data.price_lth[d - 1, s] / S)
                add("long_term_profit", n("alpha_m_l", d, i, s), -weight / S)
                add("long_term_profit", n("m_l", d, i, s), -config.crew_cost * data.mission_lth[d - 1, i, s] / S)
            add("long_term_profit", n("r_l", d, s), -config.vessel_cost / S)
            add("long_term_profit", n("q_l", d, s), -config.overtime_cost / S)

    for s in scen:
        for i in turbines:
            add("prolonged_interruptions", n("w", i, s), -data.interruption_upfront[s] / S)
            add("prolonged_interruptions", n("b", i, s), -data.interruption_hourly[s] / S)

    value = config.rul_value / S
    for i in turbines:
        for s in scen:
            add("end_of_horizon", n("lam", i, s), value)
            for h in hours:
                add("end_of_horizon", n("m", h, i), -value * data.rul0[i, s])
            for d in days:
                add("end_of_horizon", n("m_l", d, i, s), -value * (data.rul0[i, s] - d))
    objective.constants["end_of_horizon"] = -value * float(data.rul0.sum())

    instance = MilpInstance(
        variables=ledger.variables,
        constraints=tuple(ledger.constraints),
        objective=objective.merged(),
        objective_constant=sum(objective.constants.values()),
        objective_terms={
            term: (objective.terms[term], objective.constants[term]) for term in OBJECTIVE_TERMS
        },
        config=config,
        data=data,
        n_turbines=I,
        lth_days=D,
        n_levels=J,
        n_scenarios=S,
        yaw_fixed_level=yaw_fixed_level,
    )
    logger.debug(
        "Built MILP instance",
        extra={"variables": len(instance.variables), "constraints": len(instance.constraints)},
    )
    return instance


def index_of(instance: MilpInstance, family: str) -> Mapping[Tuple[int, ...], str]:
    """Variable names of one family keyed by index tuple."""
    return {
        variable.index: name for name, variable in instance.variables.items() if variable.family == family
    }
