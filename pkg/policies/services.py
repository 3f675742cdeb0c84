import logging
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from milp.backends import SolverBackend
from milp.builder import build
from milp.entities import MilpConfig, MilpInstance, MilpSolution, SolveStatus, TurbineBoundary
from milp.services import solve
from om_planner.errors import InvalidInputError
from policies.entities import Policy, PolicyKind
from policies.registry import POLICIES, register
from scenario.entities import HOURS_PER_DAY, ScenarioSet
from scenario.services import accessible, mean_scenario

logger = logging.getLogger("om_planner")


class BasePolicy:
    def __init__(self, policy: Policy) -> None:
        self.policy = policy
        self.logger = logging.getLogger("om_planner")

    def instance(
        self, config: MilpConfig, boundary: Sequence[TurbineBoundary], scenarios: ScenarioSet
    ) -> Optional[MilpInstance]:
        """The MILP this policy solves, or None for rule-based policies."""
        return None

    def decide(
        self,
        config: MilpConfig,
        boundary: Sequence[TurbineBoundary],
        scenarios: ScenarioSet,
        backend: Optional[SolverBackend] = None,
    ) -> MilpSolution:
        instance = self.instance(config, boundary, scenarios)
        if instance is None:
            raise NotImplementedError(f"{type(self).__name__} must override decide")
        return solve(instance, backend, policy=self.policy.kind.value)


@register(PolicyKind.POSYDON.value)
class PosydonPolicy(BasePolicy):
    def instance(self, config, boundary, scenarios):
        return build(config, boundary, scenarios)


@register(PolicyKind.STOCHOS.value)
class StochosPolicy(BasePolicy):
    """Maintenance-only optimisation: every period runs at 0° or shuts down."""

    def instance(self, config, boundary, scenarios):
        if scenarios.context is None:
            raise InvalidInputError("Scenario tensors must be derived before building the MILP")
        return build(config, boundary, scenarios, yaw_fixed_level=scenarios.context.grid.zero_index)


@register(PolicyKind.DET.value)
class DeterministicPolicy(BasePolicy):
    """The same MILP on the per-period mean scenario."""

    def instance(self, config, boundary, scenarios):
        reduced = mean_scenario(scenarios)
        return build(replace(config, n_scenarios=1), boundary, reduced)


@register(PolicyKind.TBS.value)
class TimeBasedPolicy(BasePolicy):
    """
    Periodic maintenance at the first accessible daylight hour.

    A turbine is due when its elapsed life reaches the interval, when it is
    seen stopped, or when a task is carried over. Starts are limited to the
    number of crews, most overdue first. Degradation beliefs are never read.
    """

    def decide(self, config, boundary, scenarios, backend=None):
        if scenarios.context is None:
            raise InvalidInputError("Scenario tensors must be derived before deciding")
        rule, grid = scenarios.context.rule, scenarios.context.grid
        n_turbines = len(boundary)

        wind = scenarios.wind[:, :HOURS_PER_DAY].mean(axis=0)
        wave = scenarios.wave[:, :HOURS_PER_DAY].mean(axis=0)
        slot = next(
            (
                hour
                for hour in range(rule.first_light, rule.last_light)
                if accessible(rule, float(wind[hour]), float(wave[hour]), hour)
            ),
            None,
        )

        due = [
            i
            for i, turbine in enumerate(boundary)
            if turbine.carryover
            or turbine.observed_failure
            or turbine.elapsed_days >= self.policy.tbs_interval_days
        ]
        due.sort(
            key=lambda i: (
                not boundary[i].carryover,
                not boundary[i].observed_failure,
                -boundary[i].elapsed_days,
            )
        )

        maintenance = np.zeros((HOURS_PER_DAY, n_turbines), dtype=int)
        if slot is not None:
            for i in due[: config.crews]:
                maintenance[slot, i] = 1
        yaw = np.zeros((HOURS_PER_DAY, n_turbines, grid.size), dtype=int)
        yaw[:, :, grid.zero_index] = 1

        lth_days, n_scenarios = scenarios.lth_days, scenarios.n_scenarios
        self.logger.debug(
            "Time-based decision",
            extra={"due": due, "slot": slot, "starts": int(maintenance.sum())},
        )
        return MilpSolution(
            status=SolveStatus.HEURISTIC,
            sth_maintenance=maintenance,
            sth_yaw=yaw,
            lth_maintenance=np.zeros((lth_days, n_turbines, n_scenarios), dtype=int),
            lth_yaw=np.zeros((lth_days, n_turbines, grid.size, n_scenarios), dtype=int),
            policy=self.policy.kind.value,
            diagnostics="no accessible slot" if due and slot is None else "",
        )


def policy_for(policy: Policy) -> BasePolicy:
    policy_cls = POLICIES.get(policy.kind.value)
    if policy_cls is None:
        raise InvalidInputError(f"No policy registered for '{policy.kind.value}'")
    return policy_cls(policy)


def decide(
    policy: Policy,
    config: MilpConfig,
    boundary: Sequence[TurbineBoundary],
    scenarios: ScenarioSet,
    backend: Optional[SolverBackend] = None,
) -> MilpSolution:
    """
    Decisions for one roll under ``policy``.

    Raises:
        InvalidInputError: underived scenarios or an unregistered kind.
        SolverUnavailableError: an optimising policy found no backend.
    """
    return policy_for(policy).decide(config, boundary, scenarios, backend)
