import numpy as np
from django.test import SimpleTestCase

from degradation.services import default_load_factor_table
from milp.entities import MilpConfig, SolveStatus, TurbineBoundary
from om_planner.errors import ConfigurationError
from policies.entities import Policy, PolicyKind
from policies.registry import POLICIES
from policies.services import decide, policy_for
from power.entities import PowerCurve, YawGrid
from scenario.entities import AccessRule, ScenarioSet
from scenario.services import derive_parameters


def _scenarios(seed: int, n_scenarios: int = 2, lth_days: int = 2, n_turbines: int = 1, calm: bool = False):
    rng = np.random.default_rng(seed)
    shape = (n_scenarios, 24 * (1 + lth_days))
    wave = np.full(shape, 0.5) if calm else rng.uniform(0.2, 2.2, shape)
    grid = YawGrid.symmetric(3, 5.0)
    return derive_parameters(
        ScenarioSet(
            wind=rng.uniform(4.0, 11.0, shape),
            wave=wave,
            price=rng.uniform(20.0, 60.0, shape),
            rul0=rng.uniform(40.0, 60.0, (n_turbines, n_scenarios)),
        ),
        PowerCurve(),
        grid,
        default_load_factor_table(list(grid.levels)),
        AccessRule(),
    )


def _config(scenarios, **kwargs):
    return MilpConfig(
        lth_days=scenarios.lth_days, n_scenarios=scenarios.n_scenarios, gap=1e-6, time_limit=120.0, **kwargs
    )


class RegistryTests(SimpleTestCase):
    def test_every_kind_is_registered(self):
        for kind in PolicyKind:
            self.assertIn(kind.value, POLICIES)
            self.assertEqual(type(policy_for(Policy(kind=kind))), POLICIES[kind.value])

    def test_interval_must_be_positive(self):
        with self.assertRaises(ConfigurationError):
            Policy(kind=PolicyKind.TBS, tbs_interval_days=0)


class OptimisingPolicyTests(SimpleTestCase):
    def test_stochos_pins_zero_yaw(self):
        scenarios = _scenarios(1)
        solution = decide(Policy(kind=PolicyKind.STOCHOS), _config(scenarios), [TurbineBoundary()], scenarios)
        self.assertTrue(solution.feasible)
        self.assertEqual(solution.policy, "stochos")
        zero = scenarios.context.grid.zero_index
        others = [j for j in range(3) if j != zero]
        self.assertEqual(int(solution.sth_yaw[:, :, others].sum()), 0)
        self.assertEqual(int(solution.lth_yaw[:, :, others, :].sum()), 0)
        np.testing.assert_array_equal(solution.sth_yaw_levels(), zero)
        np.testing.assert_array_equal(solution.lth_yaw[:, :, zero, :], 1)

    def test_stochos_never_shuts_down_for_life(self):
        # remaining life worth far more than any revenue makes idling attractive
        scenarios = _scenarios(4)
        config = _config(scenarios, rul_value=1e7, maintenance_threshold_days=1.0)
        boundary = [TurbineBoundary(elapsed_days=10.0)]
        joint = decide(Policy(kind=PolicyKind.POSYDON), config, boundary, scenarios)
        pinned = decide(Policy(kind=PolicyKind.STOCHOS), config, boundary, scenarios)
        self.assertTrue(joint.feasible and pinned.feasible)
        self.assertTrue((joint.sth_yaw_levels() == -1).any())
        np.testing.assert_array_equal(pinned.sth_yaw_levels(), scenarios.context.grid.zero_index)
        np.testing.assert_array_equal(pinned.lth_yaw[:, :, scenarios.context.grid.zero_index, :], 1)

    def test_det_equals_posydon_on_one_scenario(self):
        scenarios = _scenarios(2, n_scenarios=1)
        config = _config(scenarios)
        boundary = [TurbineBoundary(elapsed_days=12.0)]
        full = policy_for(Policy(kind=PolicyKind.POSYDON)).instance(config, boundary, scenarios)
        reduced = policy_for(Policy(kind=PolicyKind.DET)).instance(config, boundary, scenarios)
        self.assertEqual(full.counts(), reduced.counts())
        self.assertEqual(dict(full.objective), dict(reduced.objective))
        self.assertEqual(full.objective_constant, reduced.objective_constant)
        for mine, theirs in zip(full.constraints, reduced.constraints):
            self.assertEqual(mine.name, theirs.name)
            self.assertEqual(dict(mine.coefficients), dict(theirs.coefficients))
            self.assertEqual(mine.rhs, theirs.rhs)

    def test_det_collapses_scenarios(self):
        scenarios = _scenarios(3, n_scenarios=3)
        instance = policy_for(Policy(kind=PolicyKind.DET)).instance(
            _config(scenarios), [TurbineBoundary()], scenarios
        )
        self.assertEqual(instance.n_scenarios, 1)
        self.assertAlmostEqual(instance.data.rul0[0, 0], scenarios.rul0[0].mean())

    def test_stochos_never_beats_posydon(self):
        for seed in range(3):
            with self.subTest(seed=seed):
                scenarios = _scenarios(10 + seed)
                config = _config(scenarios, maintenance_threshold_days=100.0)
                boundary = [TurbineBoundary(elapsed_days=20.0)]
                joint = decide(Policy(kind=PolicyKind.POSYDON), config, boundary, scenarios)
                pinned = decide(Policy(kind=PolicyKind.STOCHOS), config, boundary, scenarios)
                slack = 2 * config.gap * max(1.0, abs(joint.objective))
                self.assertLessEqual(pinned.objective, joint.objective + slack)


class TimeBasedPolicyTests(SimpleTestCase):
    def setUp(self):
        self.scenarios = _scenarios(4, n_turbines=4, calm=True)
        self.config = _config(self.scenarios, crews=2)
        self.policy = Policy(kind=PolicyKind.TBS, tbs_interval_days=60)

    def test_due_turbines_start_at_first_accessible_hour(self):
        boundary = [
            TurbineBoundary(elapsed_days=60.0),
            TurbineBoundary(elapsed_days=59.0),
            TurbineBoundary(elapsed_days=3.0, observed_failure=True),
            TurbineBoundary(elapsed_days=10.0),
        ]
        solution = decide(self.policy, self.config, boundary, self.scenarios)
        self.assertEqual(solution.status, SolveStatus.HEURISTIC)
        self.assertEqual(solution.maintenance_starts(), ((6, 0), (6, 2)))
        np.testing.assert_array_equal(solution.sth_yaw_levels(), self.scenarios.context.grid.zero_index)
        self.assertIsNone(solution.objective)

    def test_starts_limited_by_crews(self):
        boundary = [
            TurbineBoundary(elapsed_days=61.0),
            TurbineBoundary(elapsed_days=90.0),
            TurbineBoundary(elapsed_days=75.0),
            TurbineBoundary(carryover=True, remaining_hours=2.0, elapsed_days=1.0),
        ]
        solution = decide(self.policy, self.config, boundary, self.scenarios)
        self.assertEqual(solution.maintenance_starts(), ((6, 1), (6, 3)))

    def test_ignores_degradation_belief(self):
        boundary = [TurbineBoundary(elapsed_days=5.0)] * 4
        healthy = decide(self.policy, self.config, boundary, self.scenarios)
        worn = ScenarioSet(
            wind=self.scenarios.wind,
            wave=self.scenarios.wave,
            price=self.scenarios.price,
            rul0=np.full((4, 2), 0.2),
        )
        worn = derive_parameters(
            worn,
            self.scenarios.context.curve,
            self.scenarios.context.grid,
            self.scenarios.context.table,
            self.scenarios.context.rule,
        )
        failing = decide(self.policy, self.config, boundary, worn)
        np.testing.assert_array_equal(healthy.sth_maintenance, failing.sth_maintenance)
        self.assertEqual(int(failing.sth_maintenance.sum()), 0)

    def test_no_slot_when_inaccessible(self):
        stormy = ScenarioSet(
            wind=np.full((1, 72), 20.0),
            wave=np.full((1, 72), 0.5),
            price=np.full((1, 72), 40.0),
            rul0=np.full((1, 1), 30.0),
        )
        context = self.scenarios.context
        stormy = derive_parameters(stormy, context.curve, context.grid, context.table, context.rule)
        solution = decide(
            self.policy, _config(stormy), [TurbineBoundary(elapsed_days=70.0)], stormy
        )
        self.assertEqual(int(solution.sth_maintenance.sum()), 0)
        self.assertEqual(solution.diagnostics, "no accessible slot")
