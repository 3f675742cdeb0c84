import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from om_planner.errors import ConfigurationError, InvalidInputError
from power.entities import PowerCurve, YawGrid
from power.services import load_power_curve_csv, power_table, scaled_power


class ScaledPowerTests(SimpleTestCase):
    def setUp(self):
        self.curve = PowerCurve()

    def test_rated_and_aligned_is_one(self):
        self.assertAlmostEqual(float(scaled_power(self.curve, self.curve.rated_speed, 0.0)), 1.0)

    def test_below_cut_in_and_above_cut_out_is_zero(self):
        self.assertEqual(float(scaled_power(self.curve, 2.0, 10.0)), 0.0)
        self.assertEqual(float(scaled_power(self.curve, 26.0, 0.0)), 0.0)

    def test_cosine_yaw_loss(self):
        midpoint = 0.5 * (self.curve.cut_in + self.curve.rated_speed)
        self.assertAlmostEqual(float(self.curve.base(midpoint)), 0.5)
        value = float(scaled_power(self.curve, midpoint, 15.0))
        self.assertAlmostEqual(value, 0.5 * np.cos(np.deg2rad(15.0)) ** 1.88, places=12)
        self.assertAlmostEqual(value, 0.4683, delta=5e-4)

    def test_yaw_never_adds_power(self):
        winds = np.linspace(0.0, 30.0, 121)
        aligned = scaled_power(self.curve, winds, 0.0)
        for yaw in (-90.0, -30.0, -5.0, 5.0, 45.0, 90.0):
            self.assertTrue(np.all(scaled_power(self.curve, winds, yaw) <= aligned + 1e-15))

    def test_monotone_on_ramp(self):
        winds = np.linspace(self.curve.cut_in, self.curve.rated_speed, 200)
        self.assertTrue(np.all(np.diff(self.curve.base(winds)) >= -1e-15))

    def test_rejects_bad_curve(self):
        with self.assertRaises(ConfigurationError):
            PowerCurve(cut_in=13.0, rated_speed=12.0)


class YawGridTests(SimpleTestCase):
    def test_default_grid(self):
        grid = YawGrid.symmetric(7, 5.0)
        self.assertEqual(grid.levels, (-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0))
        self.assertEqual(grid.zero_index, 3)

    def test_rejects_asymmetric_grid(self):
        with self.assertRaises(ConfigurationError):
            YawGrid(levels=(0.0, 5.0))


class PowerTableTests(SimpleTestCase):
    def setUp(self):
        self.curve = PowerCurve()
        self.grid = YawGrid.symmetric(3, 5.0)

    def test_rated_wind_zero_yaw_is_all_ones(self):
        table = power_table(self.curve, self.grid, np.full((2, 72), 12.0), n_turbines=2)
        np.testing.assert_allclose(table.sth[:, :, self.grid.zero_index, :], 1.0)
        np.testing.assert_allclose(table.lth[:, :, self.grid.zero_index, :], 1.0)
        self.assertEqual(table.sth.shape, (24, 2, 3, 2))
        self.assertEqual(table.lth.shape, (2, 2, 3, 2))

    def test_daily_values_are_hourly_means(self):
        rng = np.random.default_rng(5)
        wind = rng.uniform(0.0, 20.0, size=(3, 96))
        table = power_table(self.curve, self.grid, wind, n_turbines=1)
        for s in range(3):
            for d in range(3):
                for j, yaw in enumerate(self.grid.levels):
                    total = 0.0
                    for h in range(24):
                        total += float(scaled_power(self.curve, wind[s, 24 * (d + 1) + h], yaw))
                    self.assertAlmostEqual(table.lth[d, 0, j, s], total / 24, places=12)
                self.assertEqual(table.lth_max[d, 0, s], table.lth[d, 0, :, s].max())
        self.assertTrue(np.all(table.sth <= 1.0))

    def test_rejects_ragged_horizon(self):
        with self.assertRaises(InvalidInputError):
            power_table(self.curve, self.grid, np.ones((2, 50)), n_turbines=1)


class TabulatedCurveTests(SimpleTestCase):
    def test_csv_curve(self):
        with tempfile.TemporaryDirectory() as folder:
            path = os.path.join(folder, "curve.csv")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write("wind_speed_ms,scaled_power_at_zero_yaw\n3,0\n8,0.5\n12,1\n25,1\n")
            curve = load_power_curve_csv(path)
            self.assertAlmostEqual(float(scaled_power(curve, 8.0, 0.0)), 0.5)
            self.assertEqual(float(scaled_power(curve, 30.0, 0.0)), 0.0)
