import json
import os
import tempfile
from dataclasses import replace
from unittest import mock, skipUnless

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from degradation.services import default_load_factor_table
from harness.entities import METRICS_COLUMNS, CampaignConfig, MaintenanceEvent, OmMetrics, PlannerSetup, RollRecord
from harness.services import (
    CampaignRunner,
    check_accounting,
    compare_policies,
    lost_cycle_days,
    run_campaign,
    run_policies,
    write_metrics_csv,
    write_rolls_jsonl,
)
from harness.truth import FarmTruth
from milp.entities import MilpConfig
from om_planner.errors import ConfigurationError, InvalidInputError, SolverUnavailableError
from om_planner.log_formatter import StandardJSONLogFormatter
from policies.entities import Policy, PolicyKind
from power.entities import YawGrid
from power.services import scaled_power
from scenario.entities import AccessRule, WeatherModel, default_price, default_wave, default_wind

# thresholds no synthetic sea state reaches
LENIENT_ACCESS = AccessRule(wind_threshold=50.0, wave_threshold=10.0)
TBS = Policy(kind=PolicyKind.TBS, tbs_interval_days=60)


def _setup(n_turbines=2, n_rolls=2, injections=None, access=None, **milp) -> PlannerSetup:
    grid = YawGrid.symmetric(3, 5.0)
    options = dict(lth_days=1, n_scenarios=2, gap=1e-4, time_limit=60.0, maintenance_threshold_days=2.0)
    options.update(milp)
    return PlannerSetup(
        milp=MilpConfig(**options),
        campaign=CampaignConfig(
            n_turbines=n_turbines,
            n_rolls=n_rolls,
            truth_seed=3,
            initial_age_days=(0.5, 1.0),
            failure_injections=injections or {},
        ),
        load_table=default_load_factor_table(list(grid.levels)),
        access=access or AccessRule(),
        yaw_grid=grid,
    )


def _record(roll, events):
    return RollRecord(
        roll=roll,
        policy="tbs",
        status="heuristic",
        objective=None,
        gap=None,
        maintenance=[],
        yaw_levels=[],
        prices=[],
        production_mwh=0.0,
        baseline_mwh=0.0,
        revenue=0.0,
        baseline_revenue=0.0,
        repair_cost=0.0,
        crew_cost=0.0,
        overtime_cost=0.0,
        vessel_cost=0.0,
        downtime_hours=0.0,
        access_downtime_hours=0.0,
        vessel_rented=False,
        events=events,
    )


class CampaignConfigTests(SimpleTestCase):
    def test_rejects_injection_outside_fleet(self):
        with self.assertRaises(ConfigurationError):
            CampaignConfig(n_turbines=2, failure_injections={2: 1})

    def test_rejects_zero_rolls(self):
        with self.assertRaises(ConfigurationError):
            CampaignConfig(n_rolls=0)

    def test_corrective_cannot_exceed_total(self):
        with self.assertRaises(InvalidInputError):
            OmMetrics(
                policy="tbs",
                total_cost=0.0,
                revenue_loss=0.0,
                production_loss_mwh=0.0,
                downtime_days=0.0,
                access_downtime_days=0.0,
                lost_cycle_days_per_task=None,
                maintenance_count=1,
                corrective_count=2,
                vessel_rentals=0,
            )


class FarmTruthTests(SimpleTestCase):
    def test_same_seed_same_streams(self):
        setup = _setup(n_rolls=3)
        first = FarmTruth.create(setup, 11, 3)
        second = FarmTruth.create(setup, 11, 3)
        for name in ("wind", "wave", "price", "amplitude", "beta", "noise", "renewal_alpha", "renewal_beta"):
            np.testing.assert_array_equal(getattr(first, name), getattr(second, name))

    def test_starts_running_below_threshold(self):
        truth = FarmTruth.create(_setup(n_turbines=4), 5, 2)
        self.assertFalse(truth.failed.any())
        self.assertTrue(np.all(truth.amplitude < truth.threshold))
        self.assertEqual(truth.wind.shape, (24 * 3,))

    def test_injection_fails_turbine(self):
        truth = FarmTruth.create(_setup(injections={1: 1}), 5, 2)
        self.assertEqual(truth.inject_failures(0), ())
        self.assertEqual(truth.inject_failures(1), (1,))
        self.assertTrue(truth.failed[1])
        self.assertEqual(truth.remaining_life_days(1), 0.0)

    def test_renewal_resets_clocks(self):
        truth = FarmTruth.create(_setup(), 5, 2)
        truth.renew(0)
        self.assertEqual(truth.equivalent_hours[0], 0.0)
        self.assertEqual(truth.elapsed_days[0], 0.0)
        self.assertEqual(truth.amplitude[0], truth.renewal_alpha[0, 0])


class LostCycleDaysTests(SimpleTestCase):
    def test_mean_over_preventive_tasks(self):
        records = [
            _record(0, [MaintenanceEvent(0, 6, 0, False, 6.0, 5.0), MaintenanceEvent(0, 6, 1, False, 6.0, 5.0)]),
            _record(1, [MaintenanceEvent(1, 7, 2, False, 6.0, 3.0), MaintenanceEvent(1, 7, 3, True, 12.0)]),
        ]
        self.assertAlmostEqual(lost_cycle_days(records), 13.0 / 3.0)

    def test_maintenance_at_failure_time_loses_nothing(self):
        self.assertEqual(lost_cycle_days([_record(0, [MaintenanceEvent(0, 6, 0, False, 6.0, 0.0)])]), 0.0)

    def test_absent_without_preventive_tasks(self):
        self.assertIsNone(lost_cycle_days([_record(0, [MaintenanceEvent(0, 6, 0, True, 12.0)])]))
        self.assertIsNone(lost_cycle_days([]))


class TimeBasedCampaignTests(SimpleTestCase):
    def setUp(self):
        self.setup = _setup(n_turbines=1, n_rolls=4, injections={0: 2}, access=LENIENT_ACCESS)

    def test_forced_failure_is_repaired_correctively(self):
        metrics, records = run_campaign(TBS, self.setup)
        self.assertEqual(metrics.maintenance_count, 1)
        self.assertEqual(metrics.corrective_count, 1)
        (event,) = records[2].events
        self.assertEqual((event.roll, event.hour, event.turbine), (2, 6, 0))
        self.assertIsNone(event.lost_cycle_days)
        # failed from midnight, repaired over hours 6..17
        self.assertEqual(records[2].downtime_hours, 18.0)
        self.assertEqual(records[2].access_downtime_hours, 6.0)
        self.assertAlmostEqual(metrics.downtime_days, 0.75)
        self.assertEqual(metrics.repair_cost, 10000.0)
        self.assertEqual(metrics.crew_cost, 12 * 250.0)
        self.assertEqual(metrics.overtime_cost, 0.0)
        self.assertEqual(metrics.vessel_rentals, 1)
        self.assertEqual(metrics.vessel_cost, 2500.0)
        self.assertGreater(metrics.revenue_loss, 0.0)

    def test_accounting_holds(self):
        metrics, records = run_campaign(TBS, self.setup)
        self.assertEqual(check_accounting(metrics, records), (True, None))
        ok, message = check_accounting(replace(metrics, total_cost=metrics.total_cost + 1.0), records)
        self.assertFalse(ok)
        self.assertIn("total", message)

    def test_renewal_resets_belief(self):
        runner = CampaignRunner(TBS, self.setup, truth_seed=3, n_rolls=4)
        for roll in range(3):
            runner.run_roll(roll)
        belief = runner.beliefs[0]
        self.assertEqual(belief.signal_history, ())
        self.assertEqual(belief.posterior, self.setup.prior)
        self.assertEqual(runner.truth.renewals[0], 1)
        self.assertEqual(runner.truth.elapsed_days[0], 1.0)
        self.assertFalse(runner.truth.failed[0])
        self.assertEqual(runner.boundary()[0].carryover, False)

    def test_replay_is_identical(self):
        first, first_records = run_campaign(TBS, self.setup)
        second, second_records = run_campaign(TBS, self.setup)
        self.assertEqual(first, second)
        for mine, theirs in zip(first_records, second_records):
            self.assertEqual(replace(mine, duration_ns=0), replace(theirs, duration_ns=0))

    def test_policy_choice_leaves_truth_weather_alone(self):
        setup = _setup(n_turbines=2, n_rolls=3, access=LENIENT_ACCESS)
        busy = Policy(kind=PolicyKind.TBS, tbs_interval_days=0.5)
        lazy_metrics, lazy = run_campaign(TBS, setup)
        busy_metrics, eager = run_campaign(busy, setup)
        self.assertEqual([r.baseline_mwh for r in lazy], [r.baseline_mwh for r in eager])
        self.assertEqual([r.prices for r in lazy], [r.prices for r in eager])
        self.assertEqual(lazy_metrics.maintenance_count, 0)
        self.assertGreater(busy_metrics.maintenance_count, 0)
        self.assertGreater(busy_metrics.production_loss_mwh, lazy_metrics.production_loss_mwh)

    def test_unfinished_task_carries_over(self):
        setup = _setup(n_turbines=1, n_rolls=2, injections={0: 0}, access=replace(LENIENT_ACCESS, first_light=16))
        runner = CampaignRunner(TBS, setup, truth_seed=3, n_rolls=2)
        record = runner.run_roll(0)
        self.assertEqual(len(record.events), 1)
        (boundary,) = runner.boundary()
        # hours 16..20 are daylight, 12 - 5 hours of work remain
        self.assertTrue(boundary.carryover)
        self.assertEqual(boundary.remaining_hours, 7.0)
        self.assertEqual(record.crew_cost, 5 * 250.0)
        second = runner.run_roll(1)
        self.assertEqual(second.events, [])
        self.assertEqual(second.repair_cost, 0.0)
        # the carried task is open from midnight but crews only bill hours 16..20
        self.assertEqual(second.crew_cost, 5 * 250.0)
        self.assertEqual(second.overtime_cost, 0.0)
        self.assertTrue(runner.truth.failed[0])
        self.assertEqual(runner.boundary()[0].remaining_hours, 2.0)


class FallbackTests(SimpleTestCase):
    def test_policy_failure_degrades_the_roll(self):
        setup = _setup(n_turbines=2, n_rolls=1)
        with mock.patch("harness.services.decide", side_effect=InvalidInputError("no decisions")):
            metrics, (record,) = run_campaign(TBS, setup)
        self.assertTrue(record.degraded)
        self.assertEqual(record.status, "degraded")
        self.assertEqual(record.diagnostics, "no decisions")
        self.assertEqual(np.asarray(record.maintenance).sum(), 0)
        np.testing.assert_array_equal(record.yaw_levels, setup.yaw_grid.zero_index)
        self.assertEqual(metrics.degraded_rolls, 1)

    def test_missing_solver_stops_the_campaign(self):
        setup = _setup(n_turbines=1, n_rolls=1)
        with mock.patch("harness.services.decide", side_effect=SolverUnavailableError("cbc", "gone")):
            with self.assertRaises(SolverUnavailableError):
                run_campaign(TBS, setup)

    def test_fallback_line_carries_roll_and_policy(self):
        setup = _setup(n_turbines=1, n_rolls=1)
        with mock.patch("harness.services.decide", side_effect=InvalidInputError("no decisions")):
            with self.assertLogs("om_planner.harness", level="WARNING") as captured:
                run_campaign(TBS, setup)
        record = next(r for r in captured.records if r.getMessage() == "Roll fell back to a no-maintenance day")
        line = json.loads(StandardJSONLogFormatter().format(record))
        self.assertEqual(line["roll_index"], 0)
        self.assertEqual(line["policy"], "tbs")
        self.assertEqual(line["diagnostics"], "no decisions")
        self.assertNotIn("roll", line)


class OptimisingCampaignTests(SimpleTestCase):
    def test_healthy_fleet_loses_only_yaw_curtailment(self):
        setup = _setup(n_turbines=2, n_rolls=1)
        metrics, (record,) = run_campaign(Policy(kind=PolicyKind.POSYDON), setup)
        self.assertEqual(metrics.maintenance_count, 0)
        self.assertEqual(metrics.vessel_rentals, 0)
        self.assertEqual(metrics.downtime_days, 0.0)

        wind = FarmTruth.create(setup, setup.campaign.truth_seed, 1).wind[:24]
        levels = np.asarray(setup.yaw_grid.levels)
        chosen = np.asarray(record.yaw_levels)
        zero_yaw = scaled_power(setup.power_curve, wind, 0.0)
        curtailed = np.where(
            chosen >= 0, scaled_power(setup.power_curve, wind[:, None], levels[np.maximum(chosen, 0)]), 0.0
        )
        expected = setup.power_curve.rated_capacity * float((zero_yaw[:, None] - curtailed).sum())
        self.assertAlmostEqual(metrics.production_loss_mwh, expected, places=6)
        self.assertEqual(check_accounting(metrics, [record]), (True, None))


class ComparisonTests(SimpleTestCase):
    def test_needs_two_policies(self):
        with self.assertRaises(InvalidInputError):
            compare_policies([TBS], _setup())

    def test_kinds_must_be_distinct(self):
        with self.assertRaises(InvalidInputError):
            run_policies([TBS, Policy(kind=PolicyKind.TBS, tbs_interval_days=5)], _setup())

    def test_writers(self):
        setup = _setup(n_turbines=1, n_rolls=2)
        results = run_policies([TBS], setup)
        metrics = [m for m, _ in results.values()]
        with tempfile.TemporaryDirectory() as folder:
            first, second = os.path.join(folder, "a.csv"), os.path.join(folder, "b.csv")
            write_metrics_csv(metrics, first)
            write_metrics_csv(metrics, second)
            with open(first, "rb") as a, open(second, "rb") as b:
                self.assertEqual(a.read(), b.read())
            self.assertEqual(tuple(pd.read_csv(first).columns), METRICS_COLUMNS)

            rolls = os.path.join(folder, "rolls.jsonl")
            write_rolls_jsonl(results, rolls)
            with open(rolls) as stream:
                self.assertEqual(len(stream.readlines()), 2)


class PairedComparisonTests(SimpleTestCase):
    def test_calm_healthy_fleet_produces_alike(self):
        steady = WeatherModel(
            wind=replace(default_wind(), std=0.0),
            wave=replace(default_wave(), std=0.0),
            price=replace(default_price(), std=0.0),
        )
        setup = replace(_setup(n_turbines=2, n_rolls=2, gap=1e-7), weather=steady)
        results = compare_policies(
            [Policy(kind=PolicyKind.POSYDON), Policy(kind=PolicyKind.STOCHOS)], setup
        )
        (_, joint), (_, pinned) = results["posydon"], results["stochos"]
        for mine, theirs in zip(joint, pinned):
            self.assertAlmostEqual(mine.production_mwh, theirs.production_mwh, places=6)
        self.assertEqual(results["posydon"][0].maintenance_count, 0)


@skipUnless(os.getenv("OM_PLANNER_SLOW_TESTS") == "1", "set OM_PLANNER_SLOW_TESTS=1 for the campaign ranking")
class CampaignRankingTests(SimpleTestCase):
    def test_joint_policy_ranks_first(self):
        grid = YawGrid()
        setup = PlannerSetup(
            milp=MilpConfig(n_scenarios=10, time_limit=120.0, gap=0.001),
            campaign=CampaignConfig(n_turbines=5, n_rolls=60),
            load_table=default_load_factor_table(list(grid.levels)),
            yaw_grid=grid,
        )
        policies = [Policy(kind=kind) for kind in (PolicyKind.POSYDON, PolicyKind.STOCHOS, PolicyKind.TBS)]
        totals = {kind: [] for kind in ("posydon", "stochos", "tbs")}
        tbs_most_corrective = 0
        for seed in range(10):
            results = compare_policies(policies, setup, truth_seed=seed)
            for kind in totals:
                totals[kind].append(results[kind][0].total_cost)
            corrective = {kind: results[kind][0].corrective_count for kind in totals}
            if corrective["tbs"] >= max(corrective.values()):
                tbs_most_corrective += 1
        self.assertLessEqual(np.mean(totals["posydon"]), np.mean(totals["stochos"]))
        self.assertLessEqual(np.mean(totals["posydon"]), np.mean(totals["tbs"]))
        self.assertGreaterEqual(tbs_most_corrective, 8)
