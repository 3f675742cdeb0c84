import io
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from degradation.services import default_load_factor_table, rul_after_loading
from milp.backends import get_backend
from milp.builder import TAGS, build, expected_counts
from milp.entities import MilpConfig, SolveStatus, TurbineBoundary
from milp.evaluator import MaintenancePlan, enumerate_optimum, evaluate_plan
from milp.services import (
    dmc_direct,
    export_lp,
    extract_rul_factors,
    implied_dmc,
    operational_counts,
    solve,
    verify_solution,
)
from om_planner.errors import DivisionByZeroError, InvalidInputError, SolverUnavailableError
from power.entities import PowerCurve, YawGrid
from power.services import scaled_power
from scenario.entities import AccessRule, ScenarioSet
from scenario.services import derive_parameters


def _derived(
    seed: int,
    n_scenarios: int = 2,
    lth_days: int = 2,
    n_levels: int = 3,
    rul=(40.0, 60.0),
    n_turbines: int = 1,
    calm: bool = False,
) -> ScenarioSet:
    rng = np.random.default_rng(seed)
    shape = (n_scenarios, 24 * (1 + lth_days))
    if calm:
        wind, wave = rng.uniform(5.0, 9.0, shape), np.full(shape, 0.5)
    else:
        wind, wave = rng.uniform(4.0, 11.0, shape), rng.uniform(0.2, 2.2, shape)
    price = rng.uniform(20.0, 60.0, shape)
    if isinstance(rul[0], tuple):
        # one range per turbine
        rul0 = np.vstack([rng.uniform(*bounds, n_scenarios) for bounds in rul])
    else:
        rul0 = rng.uniform(*rul, (n_turbines, n_scenarios))
    scenarios = ScenarioSet(
        wind=wind,
        wave=wave,
        price=price,
        rul0=rul0,
    )
    grid = YawGrid.symmetric(n_levels, 5.0)
    return derive_parameters(
        scenarios, PowerCurve(), grid, default_load_factor_table(list(grid.levels)), AccessRule()
    )


def _config(scenarios: ScenarioSet, **kwargs) -> MilpConfig:
    options = dict(
        lth_days=scenarios.lth_days, n_scenarios=scenarios.n_scenarios, gap=1e-7, time_limit=120.0
    )
    options.update(kwargs)
    return MilpConfig(**options)


def _close(expected: float, actual: float, rel: float = 1e-6) -> bool:
    return abs(expected - actual) <= rel * max(1.0, abs(expected))


class BuildTests(SimpleTestCase):
    def setUp(self):
        self.scenarios = _derived(1, n_scenarios=1, lth_days=2, n_levels=3)
        self.config = _config(self.scenarios)
        self.instance = build(self.config, [TurbineBoundary(elapsed_days=10.0)], self.scenarios)

    def test_counts_match_closed_form(self):
        counts = self.instance.counts()
        self.assertEqual(counts, expected_counts(1, 2, 3, 1))
        self.assertEqual(counts["variables"], 252)
        self.assertEqual(counts["variables.binary"], 186)
        self.assertEqual(counts["variables.integer"], 1)
        self.assertEqual(counts["constraints"], 322)

    def test_closed_form_scales_with_sizes(self):
        scenarios = _derived(2, n_scenarios=2, lth_days=3, n_levels=3, n_turbines=2)
        instance = build(_config(scenarios, integer_overtime=True), [TurbineBoundary()] * 2, scenarios)
        self.assertEqual(instance.counts(), expected_counts(2, 3, 3, 2, integer_overtime=True))

    def test_rows_are_tagged_and_closed(self):
        for constraint in self.instance.constraints:
            self.assertIn(constraint.tag, TAGS)
            for name in constraint.coefficients:
                self.assertIn(name, self.instance.variables)
        self.assertEqual(set(self.instance.tags), set(TAGS))

    def test_short_term_yaw_is_here_and_now(self):
        families = {v.family: len(v.index) for v in self.instance.variables.values()}
        self.assertEqual(families["gamma"], 3)
        self.assertEqual(families["m"], 2)
        self.assertEqual(families["gamma_l"], 4)
        self.assertEqual(families["m_l"], 3)

    def test_starts_only_in_daylight(self):
        variables = self.instance.variables
        self.assertEqual(variables["m_5_0"].upper, 0.0)
        self.assertEqual(variables["m_6_0"].upper, 1.0)
        self.assertEqual(variables["m_20_0"].upper, 1.0)
        self.assertEqual(variables["m_21_0"].upper, 0.0)

    def test_carryover_drops_repair_cost(self):
        instance = build(
            self.config, [TurbineBoundary(carryover=True, remaining_hours=3.0)], self.scenarios
        )
        self.assertFalse(any(name.startswith("alpha_m") for name in instance.objective))
        self.assertTrue(any(name.startswith("alpha_m") for name in self.instance.objective))
        carry = [c for c in instance.constraints if c.tag == "carryover"]
        self.assertEqual(carry[0].rhs, 1.0)

    def test_pinned_level_is_fixed_on(self):
        instance = build(self.config, [TurbineBoundary()], self.scenarios, yaw_fixed_level=1)
        for variable in instance.variables.values():
            if variable.family in ("gamma", "gamma_l"):
                on = 1.0 if variable.index[2] == 1 else 0.0
                self.assertEqual((variable.lower, variable.upper), (on, on))
        self.assertEqual(instance.counts(), self.instance.counts())

    def test_global_big_m_replaces_tight_values(self):
        instance = build(_config(self.scenarios, big_m=5e4), [TurbineBoundary()], self.scenarios)
        flag = next(c for c in instance.constraints if c.tag == "unfinished_flag")
        self.assertEqual(flag.coefficients["w_0_0"], -5e4)

    def test_rejects_bad_inputs(self):
        raw = ScenarioSet(
            wind=self.scenarios.wind, wave=self.scenarios.wave, price=self.scenarios.price
        )
        with self.assertRaises(InvalidInputError):
            build(self.config, [TurbineBoundary()], raw)
        with self.assertRaises(InvalidInputError):
            build(self.config, [TurbineBoundary(), TurbineBoundary()], self.scenarios)
        with self.assertRaises(InvalidInputError):
            build(self.config, [TurbineBoundary(elapsed_days=0.0)], self.scenarios)
        with self.assertRaises(InvalidInputError):
            build(self.config, [TurbineBoundary()], self.scenarios, yaw_fixed_level=3)


class DmcDirectTests(SimpleTestCase):
    def setUp(self):
        self.config = MilpConfig(preventive_cost=4000.0, corrective_cost=10000.0)

    def test_all_operational(self):
        self.assertAlmostEqual(dmc_direct(1, 2, [2], 2, self.config, 10.0), 8000.0 / 24.0)
        self.assertAlmostEqual(dmc_direct(0, 2, [], 2, self.config, 10.0), 8000.0 / 22.0)

    def test_corrective_regime(self):
        self.assertAlmostEqual(dmc_direct(1, 0, [0], 2, self.config, 10.0), 20000.0 / 20.0)

    def test_decreasing_in_day_when_alive(self):
        rates = [dmc_direct(d, 3, [3] * 9, 3, self.config, 5.0) for d in range(10)]
        self.assertTrue(all(later < earlier for earlier, later in zip(rates, rates[1:])))

    def test_errors(self):
        with self.assertRaises(DivisionByZeroError):
            dmc_direct(0, 0, [], 2, self.config, 0.0)
        with self.assertRaises(InvalidInputError):
            dmc_direct(1, 3, [1], 2, self.config, 1.0)
        with self.assertRaises(InvalidInputError):
            dmc_direct(2, 1, [1], 2, self.config, 1.0)


class ExportLpTests(SimpleTestCase):
    def test_dump_is_tagged(self):
        scenarios = _derived(3, n_scenarios=1, lth_days=1, n_levels=1)
        instance = build(_config(scenarios), [TurbineBoundary()], scenarios)
        stream = io.StringIO()
        text = export_lp(instance, stream)
        self.assertEqual(stream.getvalue(), text)
        self.assertTrue(text.startswith("\\"))
        self.assertIn("Maximize", text)
        self.assertTrue(text.rstrip().endswith("End"))
        for tag in instance.tags:
            self.assertEqual(text.count(f"\\ tag: {tag}\n"), 1)
        self.assertIn(" yaw_choice_0:", text)
        self.assertTrue(all(len(line) <= 260 for line in text.splitlines()))


class BackendTests(SimpleTestCase):
    def test_unknown_backend(self):
        with self.assertRaises(SolverUnavailableError) as raised:
            get_backend("gurobi")
        self.assertIn("gurobi", str(raised.exception))

    def test_missing_executable(self):
        with self.assertRaises(SolverUnavailableError):
            get_backend("cbc", path="/nonexistent/cbc")


class SolveTests(SimpleTestCase):
    def test_tiny_healthy_instance_produces_fully(self):
        shape = (1, 48)
        scenarios = derive_parameters(
            ScenarioSet(
                wind=np.full(shape, 10.0),
                wave=np.full(shape, 0.5),
                price=np.full(shape, 40.0),
                rul0=np.array([[50.0]]),
            ),
            PowerCurve(),
            YawGrid.symmetric(1),
            default_load_factor_table([0.0]),
            AccessRule(),
        )
        instance = build(_config(scenarios), [TurbineBoundary()], scenarios)
        solution = solve(instance)
        self.assertEqual(solution.status, SolveStatus.OPTIMAL)
        f = float(scaled_power(PowerCurve(), 10.0, 0.0))
        expected = 24 * 40.0 * 12.0 * f + 40.0 * 24 * 12.0 * f
        self.assertTrue(_close(expected, solution.objective), (expected, solution.objective))
        self.assertEqual(int(solution.sth_maintenance.sum()), 0)
        self.assertEqual(int(solution.lth_maintenance.sum()), 0)

    def test_no_maintenance_when_nothing_triggers(self):
        scenarios = _derived(4, n_scenarios=2, lth_days=2)
        instance = build(_config(scenarios, maintenance_threshold_days=5.0), [TurbineBoundary()], scenarios)
        solution = solve(instance)
        self.assertTrue(solution.feasible)
        self.assertEqual(int(solution.sth_maintenance.sum()), 0)
        self.assertEqual(int(solution.lth_maintenance.sum()), 0)

    def _assert_reconciles(self, instance, solution):
        report = verify_solution(instance, solution)
        self.assertEqual(report.violated_rows, ())
        self.assertTrue(report.ok)
        self.assertTrue(_close(solution.objective, solution.breakdown.total))

        I, D, _, S = instance.sizes
        c, c_l = implied_dmc(instance, solution)
        sth_alive, lth_alive = operational_counts(instance, solution)
        embedding = [row for row in instance.constraints if row.tag == "rul_embedding"]
        for i in range(I):
            t_c = float(instance.data.elapsed_days[i])
            self.assertTrue(_close(dmc_direct(0, int(sth_alive[i]), [], S, instance.config, t_c), c[i]))
            for d in range(1, D + 1):
                direct = dmc_direct(d, int(sth_alive[i]), list(lth_alive[:, i]), S, instance.config, t_c)
                self.assertTrue(_close(direct, c_l[d - 1, i]))
            for s in range(S):
                factors, lengths = extract_rul_factors(instance, solution, i, s)
                recomputed = rul_after_loading(instance.data.rul0[i, s], factors, lengths)
                # solver λ carries the backend's feasibility tolerance
                self.assertAlmostEqual(recomputed, solution.rul[i, s], delta=1e-6)
                row = embedding[i * S + s]
                lam = f"lam_{i}_{s}"
                implied = row.rhs - sum(
                    coefficient * round(solution.values.get(name, 0.0))
                    for name, coefficient in row.coefficients.items()
                    if name != lam
                )
                self.assertAlmostEqual(recomputed, implied, delta=1e-9)

    def test_matches_exhaustive_enumeration(self):
        for seed in range(25):
            with self.subTest(seed=seed):
                scenarios = _derived(100 + seed, n_scenarios=1 + seed % 2, lth_days=1 + (seed // 2) % 2)
                threshold = 100.0 if seed % 3 else 10.0
                rng = np.random.default_rng(seed)
                instance = build(
                    _config(scenarios, maintenance_threshold_days=threshold),
                    [TurbineBoundary(elapsed_days=float(rng.uniform(5.0, 40.0)))],
                    scenarios,
                )
                expected, _ = enumerate_optimum(instance)
                solution = solve(instance)
                if expected is None:
                    self.assertEqual(solution.status, SolveStatus.INFEASIBLE)
                    continue
                self.assertEqual(solution.status, SolveStatus.OPTIMAL)
                self.assertTrue(_close(expected, solution.objective), (expected, solution.objective))
                self._assert_reconciles(instance, solution)

    def test_fleet_matches_exhaustive_enumeration(self):
        fleets = (
            ((40.0, 60.0), (40.0, 60.0)),
            ((40.0, 60.0), (0.1, 0.9)),
            ((0.1, 0.9), (0.1, 0.9)),
        )
        for seed in range(12):
            with self.subTest(seed=seed):
                ruls = fleets[seed % 3]
                scenarios = _derived(
                    300 + seed, n_scenarios=1 + seed % 2, lth_days=1 + (seed // 3) % 2, rul=ruls
                )
                rng = np.random.default_rng(seed)
                config = _config(
                    scenarios,
                    crews=1 + (seed // 2) % 2,
                    maintenance_threshold_days=10.0 if seed % 4 == 0 else 100.0,
                )
                pinned = scenarios.context.grid.zero_index if seed % 5 == 0 else None
                boundary = [TurbineBoundary(elapsed_days=float(t)) for t in rng.uniform(5.0, 40.0, 2)]
                instance = build(config, boundary, scenarios, yaw_fixed_level=pinned)
                expected, plan = enumerate_optimum(instance)
                solution = solve(instance)
                if expected is None:
                    self.assertEqual(solution.status, SolveStatus.INFEASIBLE)
                    continue
                self.assertEqual(solution.status, SolveStatus.OPTIMAL)
                self.assertEqual(len(plan), 2)
                self.assertTrue(_close(expected, solution.objective), (expected, solution.objective))
                self._assert_reconciles(instance, solution)

                sth_alive, _ = operational_counts(instance, solution)
                for i, (low, _) in enumerate(ruls):
                    if low < 1.0:
                        self.assertEqual(int(sth_alive[i]), 0)

    def test_single_crew_cannot_overlap_tasks(self):
        scenarios = _derived(8, n_scenarios=1, lth_days=1, rul=((0.1, 0.9), (0.1, 0.9)), calm=True)
        boundary = [TurbineBoundary(elapsed_days=20.0)] * 2
        crew = MaintenancePlan(sth_hour=scenarios.context.rule.first_light)
        single = build(_config(scenarios, crews=1), boundary, scenarios)
        double = build(_config(scenarios, crews=2, max_overtime=24.0), boundary, scenarios)
        self.assertIsNone(evaluate_plan(single, (crew, crew)))
        self.assertIsNotNone(evaluate_plan(double, (crew, crew)))

    def test_flipped_start_is_flagged(self):
        scenarios = _derived(5, n_scenarios=2, lth_days=2)
        instance = build(_config(scenarios, maintenance_threshold_days=100.0), [TurbineBoundary()], scenarios)
        solution = solve(instance)
        self.assertTrue(verify_solution(instance, solution).ok)

        values = dict(solution.values)
        starts = solution.maintenance_starts()
        name = f"m_{starts[0][0]}_0" if starts else "m_6_0"
        values[name] = 1.0 - round(values[name])
        report = verify_solution(instance, replace(solution, values=values))
        self.assertFalse(report.ok)
        self.assertTrue(any(row.startswith("single_task") for row in report.violated_rows))
        self.assertGreater(report.max_violation["single_task"], 0.5)

    def test_failed_turbine_is_maintained(self):
        scenarios = _derived(6, n_scenarios=2, lth_days=2, rul=(0.1, 0.9), calm=True)
        instance = build(_config(scenarios), [TurbineBoundary(elapsed_days=30.0)], scenarios)
        solution = solve(instance)
        self.assertTrue(solution.feasible)
        self.assertEqual(round(solution.values["theta_0"]), 1)
        for s in range(2):
            tasks = solution.sth_maintenance[:, 0].sum() + solution.lth_maintenance[:, 0, s].sum()
            self.assertEqual(int(tasks), 1)
        c, _ = implied_dmc(instance, solution)
        self.assertAlmostEqual(c[0], 10000.0 / 30.0, places=4)

    def test_tight_and_global_big_m_agree(self):
        for seed in range(3):
            with self.subTest(seed=seed):
                scenarios = _derived(200 + seed)
                boundary = [TurbineBoundary(elapsed_days=10.0)]
                tight = solve(build(_config(scenarios, maintenance_threshold_days=100.0), boundary, scenarios))
                loose = solve(
                    build(_config(scenarios, maintenance_threshold_days=100.0, big_m=1e4), boundary, scenarios)
                )
                self.assertTrue(_close(tight.objective, loose.objective, rel=1e-5))

    def test_breakdown_sums_to_objective(self):
        scenarios = _derived(7, n_scenarios=2, lth_days=2, n_turbines=2)
        instance = build(_config(scenarios), [TurbineBoundary(), TurbineBoundary(elapsed_days=4.0)], scenarios)
        solution = solve(instance)
        report = verify_solution(instance, solution)
        self.assertTrue(report.ok)
        self.assertTrue(_close(solution.objective, report.breakdown.total))
        levels = solution.sth_yaw_levels()
        self.assertEqual(levels.shape, (24, 2))
