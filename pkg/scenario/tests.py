import tempfile

import numpy as np
from django.test import SimpleTestCase

from degradation.entities import BaselinePrior, DegradationState
from degradation.services import default_load_factor_table, fresh_state
from om_planner.errors import ConfigurationError, InvalidInputError
from power.entities import PowerCurve, YawGrid
from scenario.entities import AccessRule, ScenarioSet, VariableProcess, WeatherModel
from scenario.services import (
    access_mask,
    accessible,
    derive_parameters,
    dump_scenarios,
    generate,
    load_scenarios,
    mean_scenario,
    mission_time,
    scan_mission_times,
)


def _flat(value: float, std: float = 0.0, phi: float = 0.5) -> VariableProcess:
    return VariableProcess(mean_profile=(value,) * 24, std=std, autocorrelation=phi)


def _calm_set(n_scenarios: int = 2, n_days: int = 2, wind: float = 10.0, rul0=None) -> ScenarioSet:
    shape = (n_scenarios, 24 * (1 + n_days))
    return ScenarioSet(
        wind=np.full(shape, wind),
        wave=np.full(shape, 0.5),
        price=np.full(shape, 40.0),
        rul0=rul0,
    )


class GenerateTests(SimpleTestCase):
    def test_zero_variance_equals_mean_profile(self):
        model = WeatherModel(wind=_flat(9.0), wave=_flat(1.0), price=_flat(35.0))
        scenarios = generate(model, horizon_days=3, n_scenarios=4, seed=1)
        np.testing.assert_array_equal(scenarios.wind, 9.0)
        np.testing.assert_array_equal(scenarios.wave, 1.0)
        np.testing.assert_array_equal(scenarios.price, 35.0)
        self.assertEqual(scenarios.wind.shape, (4, 96))
        self.assertEqual(scenarios.lth_days, 3)

    def test_same_seed_is_deterministic(self):
        first = generate(WeatherModel(), horizon_days=2, n_scenarios=3, seed=42)
        second = generate(WeatherModel(), horizon_days=2, n_scenarios=3, seed=42)
        for name in ("wind", "wave", "price"):
            np.testing.assert_array_equal(getattr(first, name), getattr(second, name))
        other = generate(WeatherModel(), horizon_days=2, n_scenarios=3, seed=43)
        self.assertFalse(np.array_equal(first.wind, other.wind))

    def test_scenario_depends_only_on_its_index(self):
        few = generate(WeatherModel(), horizon_days=2, n_scenarios=2, seed=7)
        many = generate(WeatherModel(), horizon_days=2, n_scenarios=5, seed=7)
        np.testing.assert_array_equal(few.wind, many.wind[:2])

    def test_lag_one_autocorrelation(self):
        model = WeatherModel(wind=_flat(50.0, std=2.0, phi=0.8))
        scenarios = generate(model, horizon_days=416, n_scenarios=1, seed=3)
        path = scenarios.wind[0]
        self.assertGreaterEqual(path.size, 10_000)
        centred = path - path.mean()
        estimate = float(np.dot(centred[:-1], centred[1:]) / np.dot(centred, centred))
        self.assertGreaterEqual(estimate, 0.75)
        self.assertLessEqual(estimate, 0.85)

    def test_trajectories_are_nonnegative(self):
        scenarios = generate(WeatherModel(), horizon_days=9, n_scenarios=20, seed=5)
        self.assertTrue(np.all(scenarios.wind >= 0))
        self.assertTrue(np.all(scenarios.wave >= 0))
        self.assertTrue(np.all(scenarios.price >= 0))

    def test_daily_values_are_means(self):
        scenarios = generate(WeatherModel(), horizon_days=2, n_scenarios=2, seed=5)
        self.assertAlmostEqual(scenarios.wind_daily[1, 0], scenarios.wind[1, 24:48].mean())
        self.assertEqual(scenarios.price_daily.shape, (2, 2))

    def test_anchor_pulls_first_hour(self):
        model = WeatherModel(wind=_flat(8.0, std=1e-9, phi=0.9))
        scenarios = generate(model, horizon_days=1, n_scenarios=1, seed=1, anchor={"wind": 18.0})
        self.assertAlmostEqual(scenarios.wind[0, 0], 8.0 + 0.9 * 10.0, places=6)

    def test_rejects_bad_inputs(self):
        with self.assertRaises(InvalidInputError):
            generate(WeatherModel(), horizon_days=2, n_scenarios=0, seed=1)
        with self.assertRaises(ConfigurationError):
            VariableProcess(mean_profile=(1.0,) * 24, std=1.0, autocorrelation=1.0)


class AccessibleTests(SimpleTestCase):
    def setUp(self):
        self.rule = AccessRule()

    def test_table_defaults(self):
        self.assertTrue(accessible(self.rule, 14.0, 1.0, 10))
        self.assertFalse(accessible(self.rule, 15.0, 1.0, 10))
        self.assertFalse(accessible(self.rule, 5.0, 1.8, 10))
        self.assertFalse(accessible(self.rule, 5.0, 0.5, 23))
        self.assertTrue(accessible(self.rule, 5.0, 0.5, 6))
        self.assertFalse(accessible(self.rule, 5.0, 0.5, 21))

    def test_mask_matches_scalar_rule(self):
        rng = np.random.default_rng(0)
        wind = rng.uniform(0, 25, 72)
        wave = rng.uniform(0, 3, 72)
        mask = access_mask(self.rule, wind, wave)
        for hour in range(72):
            self.assertEqual(mask[hour], accessible(self.rule, wind[hour], wave[hour], hour))


class MissionTimeTests(SimpleTestCase):
    def test_no_weather_delay(self):
        hours, capped = scan_mission_times(np.ones(48, dtype=bool), [0, 10], 6.0, 72)
        np.testing.assert_array_equal(hours, [6.0, 6.0])
        self.assertFalse(capped.any())

    def test_blocked_hours_count_toward_mission(self):
        mask = np.array([1, 1, 0, 0, 1, 1] + [0] * 42, dtype=bool)
        hours, capped = scan_mission_times(mask, [0], 4.0, 72)
        self.assertEqual(hours[0], 6.0)
        self.assertFalse(capped[0])

    def test_fully_blocked_is_capped(self):
        rule = AccessRule()
        blocked = ScenarioSet(
            wind=np.full((1, 48), 20.0), wave=np.full((1, 48), 0.5), price=np.full((1, 48), 40.0)
        )
        hours, capped = mission_time(rule, blocked, scenario=0, turbine=0, start=0)
        self.assertEqual(hours, 72.0)
        self.assertTrue(capped)

    def test_daylight_stretches_mission(self):
        rule = AccessRule()
        scenarios = _calm_set()
        # 3 daylight hours left on day one, 3 more from first light next day
        hours, capped = mission_time(rule, scenarios, 0, 0, start=18)
        self.assertEqual(hours, 24 - 18 + 6 + 3)
        self.assertFalse(capped)

    def test_rejects_start_outside_horizon(self):
        with self.assertRaises(InvalidInputError):
            scan_mission_times(np.ones(48, dtype=bool), [48], 6.0, 72)


class DeriveParametersTests(SimpleTestCase):
    def setUp(self):
        self.curve = PowerCurve()
        self.grid = YawGrid.symmetric(3, 5.0)
        self.table = default_load_factor_table(list(self.grid.levels))
        self.rule = AccessRule()

    def _derive(self, scenarios, **kwargs):
        return derive_parameters(scenarios, self.curve, self.grid, self.table, self.rule, **kwargs)

    def test_nominal_wind_gives_unit_factors(self):
        derived = self._derive(_calm_set(rul0=np.full((2, 2), 5.0)))
        zero = self.grid.zero_index
        np.testing.assert_allclose(derived.factor_sth[:, :, zero, :], 1.0)
        np.testing.assert_allclose(derived.factor_lth[:, :, zero, :], 1.0)
        self.assertEqual(derived.factor_sth.shape, (24, 2, 3, 2))
        self.assertEqual(derived.mission_lth.shape, (2, 2, 2))
        self.assertTrue(derived.derived)

    def test_sub_day_rul_is_down_everywhere(self):
        rul0 = np.array([[0.5, 5.0]])
        derived = self._derive(_calm_set(rul0=rul0))
        self.assertEqual(derived.zeta0[0, 0], 0.0)
        np.testing.assert_array_equal(derived.zeta0_lth[:, 0, 0], 0.0)
        self.assertEqual(derived.zeta0[0, 1], 1.0)
        # corrective duration for the down scenario
        self.assertEqual(derived.mission_sth[6, 0, 0], 12.0)
        self.assertEqual(derived.mission_sth[6, 0, 1], 6.0)

    def test_flags_recompute_from_rul(self):
        scenarios = generate(WeatherModel(), horizon_days=9, n_scenarios=6, seed=2)
        states = [fresh_state(BaselinePrior(), 100.0) for _ in range(3)]
        derived = self._derive(scenarios, states=states, seed=9)
        for d in range(9):
            np.testing.assert_array_equal(
                derived.zeta0_lth[d], (derived.rul0 >= d + 1).astype(float)
            )
        self.assertTrue(np.all(np.diff(derived.zeta0_lth, axis=0) <= 0))
        self.assertTrue(np.all(derived.mission_lth >= self.rule.preventive_hours))
        self.assertTrue(np.all(derived.mission_sth >= self.rule.preventive_hours))

    def test_failed_state_draws_zero_rul(self):
        prior = BaselinePrior()
        failed = DegradationState(
            prior=prior, posterior=prior, observed_amplitude=101.0, observation_time=0.0
        )
        derived = self._derive(_calm_set(), states=[failed, fresh_state(prior, 100.0)], seed=1)
        np.testing.assert_array_equal(derived.rul0[0], 0.0)
        self.assertTrue(np.all(derived.rul0[1] > 0))

    def test_repair_override_sets_short_term_duration(self):
        derived = self._derive(_calm_set(rul0=np.full((1, 2), 5.0)), repair_overrides=[2.0])
        self.assertEqual(derived.mission_sth[6, 0, 0], 2.0)
        self.assertEqual(derived.mission_lth[0, 0, 0], 6.0)

    def test_rejects_missing_rul(self):
        with self.assertRaises(InvalidInputError):
            self._derive(_calm_set())

    def test_rejects_mismatched_table(self):
        table = default_load_factor_table([-10.0, 0.0, 10.0])
        with self.assertRaises(InvalidInputError):
            derive_parameters(
                _calm_set(rul0=np.ones((1, 2))), self.curve, self.grid, table, self.rule
            )

    def test_mean_scenario_is_rederived(self):
        scenarios = generate(WeatherModel(), horizon_days=2, n_scenarios=4, seed=2)
        derived = self._derive(scenarios, states=[fresh_state(BaselinePrior(), 100.0)], seed=3)
        reduced = mean_scenario(derived)
        self.assertEqual(reduced.n_scenarios, 1)
        self.assertAlmostEqual(reduced.rul0[0, 0], derived.rul0[0].mean())
        np.testing.assert_allclose(reduced.wind[0], scenarios.wind.mean(axis=0))
        self.assertTrue(reduced.derived)


class DumpLoadTests(SimpleTestCase):
    def test_files_replay_the_set(self):
        scenarios = generate(WeatherModel(), horizon_days=1, n_scenarios=2, seed=4)
        scenarios = ScenarioSet(
            wind=scenarios.wind, wave=scenarios.wave, price=scenarios.price,
            rul0=np.array([[3.0, 4.0], [0.0, 7.5], [1.0, 2.0]]),
        )
        with tempfile.TemporaryDirectory() as folder:
            dump_scenarios(scenarios, folder)
            loaded = load_scenarios(folder)
        np.testing.assert_allclose(loaded.wind, scenarios.wind)
        np.testing.assert_allclose(loaded.rul0, scenarios.rul0)
