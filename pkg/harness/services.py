"""
Closed-loop rolling-horizon campaigns.

Each roll generates scenarios anchored on the revealed weather, asks the
policy for decisions, executes the short-term day against the hidden
``FarmTruth`` and feeds the day's signal back into the beliefs. Only the
short-term block of a solution is ever executed.
"""

import itertools
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
import numpy.typing as npt
import pandas as pd

from degradation.entities import DegradationState
from degradation.services import fresh_state, nominal_rul, relative_rul_factors, update_posterior
from harness.entities import (
    METRICS_COLUMNS,
    MaintenanceEvent,
    OmMetrics,
    PlannerSetup,
    RollRecord,
)
from harness.truth import FarmTruth
from milp.backends import get_backend
from milp.entities import Criticality, MilpConfig, MilpSolution, TurbineBoundary
from om_planner.errors import InvalidInputError, PlannerError, SolverUnavailableError, TurbineFailedError
from policies.entities import Policy, PolicyKind
from policies.services import decide
from power.services import hourly_power
from scenario.entities import HOURS_PER_DAY, ScenarioSet
from scenario.services import accessible, derive_parameters, generate

logger = logging.getLogger("om_planner")

# work left below this counts as done
_WORK_TOLERANCE = 1e-9


@dataclass
class _Task:
    remaining: float
    corrective: bool
    order: int


def _solve_roll(
    policy: Policy,
    config: MilpConfig,
    boundary: Sequence[TurbineBoundary],
    scenarios: ScenarioSet,
) -> Tuple[Optional[MilpSolution], Optional[str]]:
    """
    Decisions for one roll, or ``(None, reason)`` when the policy produced none.

    A missing solver is not a per-roll failure and is raised.
    """
    try:
        solution = decide(policy, config, boundary, scenarios)
    except SolverUnavailableError:
        raise
    except PlannerError as exc:
        logger.exception("Policy failed on roll", extra={"policy": policy.kind.value, "error": str(exc)})
        return None, str(exc)
    if not solution.feasible:
        reason = solution.diagnostics or f"solver returned {solution.status.value}"
        return None, reason
    return solution, None


class CampaignRunner:
    """One policy against one hidden farm, roll by roll."""

    def __init__(self, policy: Policy, setup: PlannerSetup, truth_seed: int, n_rolls: int) -> None:
        if n_rolls < 1:
            raise InvalidInputError("A campaign needs at least one roll")
        self.policy = policy
        self.setup = setup
        self.truth_seed = truth_seed
        self.n_rolls = n_rolls
        self.truth = FarmTruth.create(setup, truth_seed, n_rolls)
        self.beliefs: List[DegradationState] = [self._initial_belief(i) for i in range(self.truth.n_turbines)]
        self.tasks: Dict[int, _Task] = {}
        self._task_order = itertools.count()
        self.logger = logging.getLogger("om_planner.harness")

    @property
    def n_turbines(self) -> int:
        return self.truth.n_turbines

    def _initial_belief(self, turbine: int) -> DegradationState:
        state = fresh_state(self.setup.prior, self.setup.campaign.failure_threshold)
        hours = float(self.truth.equivalent_hours[turbine])
        if hours > 0:
            state = update_posterior(state, (hours, float(self.truth.amplitude[turbine])))
        return state

    def boundary(self) -> List[TurbineBoundary]:
        milp, campaign = self.setup.milp, self.setup.campaign
        result = []
        for i in range(self.n_turbines):
            task = self.tasks.get(i)
            elapsed = max(float(self.truth.elapsed_days[i]), campaign.min_elapsed_days)
            criticality = 1.0
            if milp.criticality is Criticality.CYCLE:
                criticality = max(elapsed + milp.lth_days - 10.0, 1.0)
            result.append(
                TurbineBoundary(
                    carryover=task is not None,
                    criticality=criticality,
                    elapsed_days=elapsed,
                    remaining_hours=task.remaining if task else 0.0,
                    observed_failure=bool(self.truth.failed[i]),
                )
            )
        return result

    def scenarios(self, roll: int, boundary: Sequence[TurbineBoundary]) -> ScenarioSet:
        """Scenarios for ``roll``, anchored on the last revealed truth hour."""
        weather_seq, rul_seq = np.random.SeedSequence([self.truth_seed, roll]).spawn(2)
        anchor = None
        if roll > 0:
            last = self.truth.hour_index(roll, 0) - 1
            anchor = {
                "wind": float(self.truth.wind[last]),
                "wave": float(self.truth.wave[last]),
                "price": float(self.truth.price[last]),
            }
        milp = self.setup.milp
        raw = generate(
            self.setup.weather,
            horizon_days=milp.lth_days,
            n_scenarios=milp.n_scenarios,
            seed=int(weather_seq.generate_state(1)[0]),
            anchor=anchor,
        )
        return derive_parameters(
            raw,
            self.setup.power_curve,
            self.setup.yaw_grid,
            self.setup.load_table,
            self.setup.access,
            states=self.beliefs,
            seed=int(rul_seq.generate_state(1)[0]),
            repair_overrides=[b.remaining_hours if b.carryover else None for b in boundary],
        )

    def prepare(self, roll: int) -> Tuple[List[TurbineBoundary], ScenarioSet]:
        """Start-of-roll inputs: failures injected, boundary and scenarios built."""
        self.truth.inject_failures(roll)
        boundary = self.boundary()
        return boundary, self.scenarios(roll, boundary)

    def run_roll(self, roll: int) -> RollRecord:
        start = time.time_ns()
        boundary, scenarios = self.prepare(roll)
        solution, error = _solve_roll(self.policy, self.setup.milp, boundary, scenarios)

        zero = self.setup.yaw_grid.zero_index
        if solution is None or solution.sth_maintenance is None:
            maintenance = np.zeros((HOURS_PER_DAY, self.n_turbines), dtype=int)
            yaw = np.full((HOURS_PER_DAY, self.n_turbines), zero, dtype=int)
        else:
            maintenance = np.asarray(solution.sth_maintenance, dtype=int)
            yaw = solution.sth_yaw_levels()

        record = self._execute(roll, maintenance, yaw)
        record.status = solution.status.value if solution is not None else "degraded"
        record.objective = solution.objective if solution is not None else None
        record.gap = solution.gap if solution is not None else None
        record.degraded = solution is None
        record.diagnostics = error or (solution.diagnostics if solution is not None else "")
        record.duration_ns = time.time_ns() - start

        self.logger.info(
            "Roll complete",
            extra={
                "roll": {"index": roll, "policy": self.policy.kind.value},
                "status": record.status,
                "gap": record.gap,
                "objective": record.objective,
                "maintenance": len(record.events),
                "duration_ns": record.duration_ns,
            },
        )
        if record.degraded:
            self.logger.warning(
                "Roll fell back to a no-maintenance day",
                extra={"roll": {"index": roll, "policy": self.policy.kind.value}, "diagnostics": record.diagnostics},
            )
        return record

    def _start_task(self, roll: int, hour: int, turbine: int) -> Tuple[MaintenanceEvent, float]:
        corrective = bool(self.truth.failed[turbine])
        rule, milp = self.setup.access, self.setup.milp
        hours = rule.corrective_hours if corrective else rule.preventive_hours
        self.tasks[turbine] = _Task(remaining=hours, corrective=corrective, order=next(self._task_order))
        event = MaintenanceEvent(
            roll=roll,
            hour=hour,
            turbine=turbine,
            corrective=corrective,
            repair_hours=float(hours),
            lost_cycle_days=None if corrective else self.truth.remaining_life_days(turbine),
        )
        return event, milp.corrective_cost if corrective else milp.preventive_cost

    def _renew(self, turbine: int) -> None:
        del self.tasks[turbine]
        self.truth.renew(turbine)
        self.beliefs[turbine] = fresh_state(self.setup.prior, self.setup.campaign.failure_threshold)

    def _execute(
        self, roll: int, maintenance: npt.NDArray[np.int_], yaw: npt.NDArray[np.int_]
    ) -> RollRecord:
        setup, truth = self.setup, self.truth
        rule, milp = setup.access, setup.milp
        rated = setup.power_curve.rated_capacity
        zero = setup.yaw_grid.zero_index

        hours = slice(truth.hour_index(roll, 0), truth.hour_index(roll, HOURS_PER_DAY))
        wind, wave, price = truth.wind[hours], truth.wave[hours], truth.price[hours]
        power = hourly_power(setup.power_curve, setup.yaw_grid, wind)  # (24, J)
        factors, _ = relative_rul_factors(setup.load_table, wind)  # (24, J)

        executed = np.zeros_like(maintenance)
        events: List[MaintenanceEvent] = []
        renewed: Set[int] = set()
        production = baseline = revenue = baseline_revenue = 0.0
        repair_cost = crew_hours = downtime = access_downtime = 0.0
        vessel_rented = False

        for hour in range(HOURS_PER_DAY):
            for index in np.flatnonzero(maintenance[hour]):
                turbine = int(index)
                if turbine in self.tasks or turbine in renewed:
                    continue
                event, cost = self._start_task(roll, hour, turbine)
                events.append(event)
                repair_cost += cost
                executed[hour, turbine] = 1

            open_sea = accessible(rule, float(wind[hour]), float(wave[hour]), hour)
            crewed = sorted(self.tasks, key=lambda i: self.tasks[i].order)[: milp.crews]
            busy = set(self.tasks)
            if busy:
                vessel_rented = True
            if rule.first_light <= hour < rule.last_light:
                crew_hours += len(crewed)
            if open_sea:
                for turbine in crewed:
                    self.tasks[turbine].remaining -= 1.0

            for turbine in range(self.n_turbines):
                reference = rated * float(power[hour, zero])
                baseline += reference
                baseline_revenue += float(price[hour]) * reference
                if turbine in busy or truth.failed[turbine]:
                    downtime += 1.0
                    if not open_sea:
                        access_downtime += 1.0
                    continue
                level = int(yaw[hour, turbine])
                if level < 0:
                    continue
                energy = rated * float(power[hour, level])
                production += energy
                revenue += float(price[hour]) * energy
                truth.advance(turbine, roll, hour, float(factors[hour, level]))

            for turbine in crewed:
                if self.tasks[turbine].remaining <= _WORK_TOLERANCE:
                    self._renew(turbine)
                    renewed.add(turbine)

        self._observe(renewed)
        truth.elapsed_days += 1.0

        crew_cost = crew_hours * milp.crew_cost
        overtime_cost = max(crew_hours - milp.crews * milp.shift_hours, 0.0) * milp.overtime_cost
        return RollRecord(
            roll=roll,
            policy=self.policy.kind.value,
            status="",
            objective=None,
            gap=None,
            maintenance=executed.tolist(),
            yaw_levels=np.asarray(yaw, dtype=int).tolist(),
            prices=[float(p) for p in price],
            production_mwh=production,
            baseline_mwh=baseline,
            revenue=revenue,
            baseline_revenue=baseline_revenue,
            repair_cost=repair_cost,
            crew_cost=crew_cost,
            overtime_cost=overtime_cost,
            vessel_cost=milp.vessel_cost if vessel_rented else 0.0,
            downtime_hours=downtime,
            access_downtime_hours=access_downtime,
            vessel_rented=vessel_rented,
            events=events,
            expected_rul_days=self._expected_rul(),
        )

    def _observe(self, renewed: Set[int]) -> None:
        """End-of-day signal reading for every turbine that was not renewed."""
        for turbine in range(self.n_turbines):
            if turbine in renewed:
                continue
            state = self.beliefs[turbine]
            hours = float(self.truth.equivalent_hours[turbine])
            amplitude = float(self.truth.amplitude[turbine])
            if hours > state.observation_time:
                self.beliefs[turbine] = update_posterior(state, (hours, amplitude))
            elif self.truth.failed[turbine] and not state.failed:
                # an injected failure moves no clock; the stop itself is the reading
                self.beliefs[turbine] = replace(state, observed_amplitude=amplitude)

    def _expected_rul(self) -> List[Optional[float]]:
        result: List[Optional[float]] = []
        for state in self.beliefs:
            try:
                result.append(nominal_rul(state).mean)
            except (TurbineFailedError, InvalidInputError):
                result.append(None)
        return result

    def run(self) -> Tuple[OmMetrics, List[RollRecord]]:
        records = [self.run_roll(roll) for roll in range(self.n_rolls)]
        return summarize(self.policy.kind.value, records), records


def lost_cycle_days(records: Sequence[RollRecord]) -> Optional[float]:
    """
    Mean true remaining life at the start of preventive tasks, in days.

    Corrective tasks have no remaining life and are left out; None when no
    preventive task was started.
    """
    values = [
        event.lost_cycle_days
        for record in records
        for event in record.events
        if not event.corrective and event.lost_cycle_days is not None
    ]
    if not values:
        return None
    return float(sum(values) / len(values))


def summarize(policy: str, records: Sequence[RollRecord]) -> OmMetrics:
    repair = sum(r.repair_cost for r in records)
    crew = sum(r.crew_cost for r in records)
    overtime = sum(r.overtime_cost for r in records)
    vessel = sum(r.vessel_cost for r in records)
    revenue_loss = sum(r.baseline_revenue - r.revenue for r in records)
    production = sum(r.production_mwh for r in records)
    baseline = sum(r.baseline_mwh for r in records)
    events = [event for r in records for event in r.events]
    return OmMetrics(
        policy=policy,
        total_cost=repair + crew + overtime + vessel + revenue_loss,
        revenue_loss=revenue_loss,
        production_loss_mwh=baseline - production,
        downtime_days=sum(r.downtime_hours for r in records) / HOURS_PER_DAY,
        access_downtime_days=sum(r.access_downtime_hours for r in records) / HOURS_PER_DAY,
        lost_cycle_days_per_task=lost_cycle_days(records),
        maintenance_count=len(events),
        corrective_count=sum(1 for event in events if event.corrective),
        vessel_rentals=sum(1 for r in records if r.vessel_rented),
        repair_cost=repair,
        crew_cost=crew,
        overtime_cost=overtime,
        vessel_cost=vessel,
        production_mwh=production,
        baseline_mwh=baseline,
        degraded_rolls=sum(1 for r in records if r.degraded),
    )


def check_accounting(
    metrics: OmMetrics, records: Sequence[RollRecord], rel_tol: float = 1e-6
) -> Tuple[bool, Optional[str]]:
    """
    Recompute the cost identity and energy conservation from the records.

    Returns:
        ``(True, None)`` when both hold, else ``(False, message)``.
    """
    recomputed = summarize(metrics.policy, records)
    scale = max(1.0, abs(recomputed.total_cost))
    parts = (
        metrics.repair_cost + metrics.crew_cost + metrics.overtime_cost + metrics.vessel_cost + metrics.revenue_loss
    )
    if not math.isclose(parts, metrics.total_cost, rel_tol=rel_tol, abs_tol=rel_tol * scale):
        return False, f"cost parts sum to {parts}, total is {metrics.total_cost}"
    if not math.isclose(recomputed.total_cost, metrics.total_cost, rel_tol=rel_tol, abs_tol=rel_tol * scale):
        return False, f"records give total cost {recomputed.total_cost}, metrics say {metrics.total_cost}"
    energy = metrics.production_mwh + metrics.production_loss_mwh
    if not math.isclose(energy, recomputed.baseline_mwh, rel_tol=rel_tol, abs_tol=rel_tol):
        return False, f"production plus loss is {energy} MWh, baseline is {recomputed.baseline_mwh} MWh"
    if metrics.corrective_count > metrics.maintenance_count:
        return False, "more corrective tasks than tasks"
    return True, None


def run_campaign(
    policy: Policy,
    setup: PlannerSetup,
    truth_seed: Optional[int] = None,
    n_rolls: Optional[int] = None,
) -> Tuple[OmMetrics, List[RollRecord]]:
    """
    Run ``policy`` over a hidden farm drawn from ``truth_seed``.

    Raises:
        InvalidInputError: fewer than one roll.
        SolverUnavailableError: an optimising policy and no solver.
    """
    seed = setup.campaign.truth_seed if truth_seed is None else truth_seed
    rolls = setup.campaign.n_rolls if n_rolls is None else n_rolls
    if policy.kind is not PolicyKind.TBS:
        # fail before any roll runs
        get_backend()
    return CampaignRunner(policy, setup, seed, rolls).run()


def run_policies(
    policies: Sequence[Policy],
    setup: PlannerSetup,
    truth_seed: Optional[int] = None,
    n_rolls: Optional[int] = None,
) -> Dict[str, Tuple[OmMetrics, List[RollRecord]]]:
    """Every policy against the same truth realisation, one thread each."""
    if not policies:
        raise InvalidInputError("Need at least one policy")
    kinds = [policy.kind.value for policy in policies]
    if len(set(kinds)) != len(kinds):
        raise InvalidInputError(f"Each policy kind may appear once, got {kinds}")

    with ThreadPoolExecutor(max_workers=len(policies)) as pool:
        futures = {
            policy.kind.value: pool.submit(run_campaign, policy, setup, truth_seed, n_rolls)
            for policy in policies
        }
        return {kind: future.result() for kind, future in futures.items()}


def compare_policies(
    policies: Sequence[Policy],
    setup: PlannerSetup,
    truth_seed: Optional[int] = None,
    n_rolls: Optional[int] = None,
) -> Dict[str, Tuple[OmMetrics, List[RollRecord]]]:
    """Paired comparison; raises InvalidInputError for fewer than two policies."""
    if len(policies) < 2:
        raise InvalidInputError("Comparing needs at least two policies")
    return run_policies(policies, setup, truth_seed, n_rolls)


def metrics_frame(metrics: Sequence[OmMetrics]) -> pd.DataFrame:
    return pd.DataFrame([asdict(m) for m in metrics], columns=list(METRICS_COLUMNS))


def write_metrics_csv(metrics: Sequence[OmMetrics], path: str) -> None:
    metrics_frame(metrics).to_csv(path, index=False)


def write_rolls_jsonl(results: Mapping[str, Tuple[OmMetrics, List[RollRecord]]], path: str) -> None:
    with open(path, "w") as stream:
        for _, records in results.values():
            for record in records:
                stream.write(json.dumps(record.as_dict(), sort_keys=True))
                stream.write("\n")
