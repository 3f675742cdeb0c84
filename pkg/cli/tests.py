import os
import tempfile
from dataclasses import fields
from io import StringIO

import pandas as pd
import yaml
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from cli.entities import RunConfig
from cli.serializers import AccessSerializer, CampaignSerializer, MilpSerializer
from cli.services import SNAPSHOT_NAME, apply_override, resolve, snapshot
from harness.entities import METRICS_COLUMNS, CampaignConfig
from milp.builder import TAGS, expected_counts
from milp.entities import Criticality, MilpConfig
from om_planner.errors import ConfigurationError
from policies.entities import PolicyKind
from scenario.entities import AccessRule

# keeps every solve in these tests to a few seconds
SMALL = ["--set", "milp.N_D=1", "--set", "milp.N_S=2", "--set", "milp.N_theta=2", "--set", "yaw_grid.n_levels=3"]


class RunConfigTests(SimpleTestCase):
    def test_empty_document_gives_defaults(self):
        config = resolve({})
        self.assertEqual(config, RunConfig())
        self.assertEqual(config.milp.preventive_cost, 4000.0)
        self.assertEqual(config.access.last_light, 21)
        self.assertEqual(config.yaw_grid.size, 7)
        self.assertEqual(config.policies.kinds, tuple(PolicyKind))

    def test_field_error_names_the_key(self):
        with self.assertRaises(ConfigurationError) as caught:
            resolve({"milp": {"C_PM": -1}})
        self.assertIn("milp.C_PM", str(caught.exception))

    def test_unknown_keys_rejected_at_every_level(self):
        with self.assertRaises(ConfigurationError) as caught:
            resolve({"solver": {}})
        self.assertIn("solver: Unknown key.", str(caught.exception))
        with self.assertRaises(ConfigurationError) as caught:
            resolve({"weather": {"wind": {"sd": 2.0}}})
        self.assertIn("weather.wind.sd: Unknown key.", str(caught.exception))

    def test_inconsistent_section_rejected(self):
        with self.assertRaises(ConfigurationError):
            resolve({"milp": {"C_PM": 20000}})
        with self.assertRaises(ConfigurationError):
            resolve({"yaw_grid": {"levels": [-5, 0, 5], "n_levels": 3}})
        with self.assertRaises(ConfigurationError):
            resolve({"policies": {"tbs_interval_days": 0}})

    def test_values_reach_the_dataclasses(self):
        config = resolve(
            {
                "milp": {"C_r": 3000, "N_D": 2, "criticality": "cycle", "U": None},
                "access": {"eta_max": 2.5},
                "weather": {"wind": {"std": 3.0}},
                "campaign": {"Lambda": 80, "failure_injections": {"1": 3}},
                "degradation": {"sigma": 0.5},
                "power_curve": {"R": 8},
            }
        )
        self.assertEqual(config.milp.vessel_cost, 3000.0)
        self.assertEqual(config.milp.criticality, Criticality.CYCLE)
        self.assertEqual(config.access.wave_threshold, 2.5)
        self.assertEqual(config.weather.wind.std, 3.0)
        self.assertEqual(config.weather.wind.mean_profile, RunConfig().weather.wind.mean_profile)
        self.assertEqual(config.campaign.failure_threshold, 80.0)
        self.assertEqual(dict(config.campaign.failure_injections), {1: 3})
        self.assertEqual(config.degradation.prior.sigma, 0.5)
        self.assertEqual(config.power_curve.curve.rated_capacity, 8.0)

    def test_snapshot_round_trips(self):
        config = resolve(
            {
                "milp": {"N_D": 2, "U": 100.0, "criticality": "cycle"},
                "campaign": {"failure_injections": {1: 3}, "n_turbines": 3},
                "yaw_grid": {"n_levels": 3},
                "policies": {"kinds": ["tbs", "posydon"]},
            }
        )
        reloaded = resolve(yaml.safe_load(yaml.safe_dump(snapshot(config), sort_keys=False)))
        self.assertEqual(reloaded, config)

    def test_snapshot_has_no_hidden_defaults(self):
        for serializer, target in (
            (MilpSerializer(), MilpConfig),
            (AccessSerializer(), AccessRule),
            (CampaignSerializer(), CampaignConfig),
        ):
            with self.subTest(target=target.__name__):
                sources = {field.source for field in serializer.fields.values()}
                self.assertEqual(sources, {field.name for field in fields(target)})
        document = snapshot(RunConfig())
        self.assertEqual(
            list(document),
            ["milp", "access", "weather", "power_curve", "yaw_grid", "degradation", "campaign", "policies"],
        )
        self.assertEqual(document["milp"]["C_PM"], 4000.0)

    def test_overrides_nest_and_parse_yaml(self):
        document = {}
        apply_override(document, "weather.wind.std=3")
        apply_override(document, "campaign.initial_age_days=[1, 2]")
        self.assertEqual(document, {"weather": {"wind": {"std": 3}}, "campaign": {"initial_age_days": [1, 2]}})
        with self.assertRaises(ConfigurationError):
            apply_override(document, "milp=3")


class RunCommandTests(SimpleTestCase):
    def _run(self, folder, *extra, command="run"):
        call_command(command, "--out", folder, "--rolls", "2", "--turbines", "2", *SMALL, *extra, stdout=StringIO())

    def test_posydon_smoke(self):
        with tempfile.TemporaryDirectory() as folder:
            self._run(folder, "--policy", "posydon")
            for name in ("metrics.csv", "rolls.jsonl", SNAPSHOT_NAME):
                self.assertTrue(os.path.exists(os.path.join(folder, name)))
            frame = pd.read_csv(os.path.join(folder, "metrics.csv"))
            self.assertEqual(tuple(frame.columns), METRICS_COLUMNS)
            self.assertEqual(list(frame["policy"]), ["posydon"])

    def test_same_seed_same_metrics(self):
        with tempfile.TemporaryDirectory() as folder:
            first, second = os.path.join(folder, "a"), os.path.join(folder, "b")
            self._run(first, "--policy", "tbs", "--seed", "7")
            self._run(second, "--policy", "tbs", "--seed", "7")
            with open(os.path.join(first, "metrics.csv"), "rb") as a, open(os.path.join(second, "metrics.csv"), "rb") as b:
                self.assertEqual(a.read(), b.read())

    def test_snapshot_reproduces_the_run(self):
        with tempfile.TemporaryDirectory() as folder:
            first, second = os.path.join(folder, "a"), os.path.join(folder, "b")
            self._run(first, "--policy", "tbs", "--seed", "4")
            call_command(
                "run", "--config", os.path.join(first, SNAPSHOT_NAME), "--out", second, stdout=StringIO()
            )
            with open(os.path.join(first, "metrics.csv"), "rb") as a, open(os.path.join(second, "metrics.csv"), "rb") as b:
                self.assertEqual(a.read(), b.read())

    def test_invalid_config_exits_one(self):
        with tempfile.TemporaryDirectory() as folder:
            with self.assertRaises(CommandError) as caught:
                self._run(folder, "--policy", "tbs", "--set", "milp.C_PM=-1")
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn("C_PM", str(caught.exception))

    def test_missing_solver_exits_two(self):
        with tempfile.TemporaryDirectory() as folder, self.settings(OM_PLANNER_SOLVER="gurobi"):
            with self.assertRaises(CommandError) as caught:
                self._run(folder, "--policy", "posydon")
        self.assertEqual(caught.exception.returncode, 2)
        self.assertIn("gurobi", str(caught.exception))

    def test_compare_needs_two_policies(self):
        with tempfile.TemporaryDirectory() as folder:
            with self.assertRaises(CommandError) as caught:
                self._run(folder, "--policy", "tbs", command="compare")
        self.assertEqual(caught.exception.returncode, 1)

    def test_compare_writes_one_row_per_policy(self):
        with tempfile.TemporaryDirectory() as folder:
            self._run(folder, "--policy", "tbs", "--policy", "stochos", command="compare")
            frame = pd.read_csv(os.path.join(folder, "metrics.csv"))
            self.assertEqual(list(frame["policy"]), ["tbs", "stochos"])
            with open(os.path.join(folder, "rolls.jsonl")) as stream:
                self.assertEqual(len(stream.readlines()), 4)


class InspectCommandTests(SimpleTestCase):
    def test_tiny_instance_counts(self):
        out = StringIO()
        call_command(
            "inspect",
            "--policy", "posydon",
            "--turbines", "1",
            "--set", "milp.N_D=2",
            "--set", "milp.N_S=1",
            "--set", "yaw_grid.n_levels=3",
            stdout=out,
        )
        text = out.getvalue()
        self.assertIn("variables: 252", text)
        self.assertIn("constraints: 322", text)
        self.assertIn("counts match the closed form", text)
        counts = expected_counts(1, 2, 3, 1)
        for tag in TAGS:
            if counts.get(f"constraints.{tag}"):
                self.assertIn(f"\\ tag: {tag}\n", text)

    def test_later_roll_replays_earlier_ones(self):
        with tempfile.TemporaryDirectory() as folder:
            path = os.path.join(folder, "roll1.lp")
            out = StringIO()
            call_command("inspect", "--policy", "stochos", "--roll", "1", "--turbines", "1", *SMALL, "--out", path, stdout=out)
            with open(path) as stream:
                self.assertTrue(stream.read().startswith("\\ om_planner"))
        self.assertIn("variables:", out.getvalue())

    def test_roll_beyond_campaign_exits_one(self):
        with self.assertRaises(CommandError) as caught:
            call_command("inspect", "--rolls", "3", "--roll", "5", stdout=StringIO())
        self.assertEqual(caught.exception.returncode, 1)

    def test_time_based_policy_has_no_milp(self):
        with self.assertRaises(CommandError) as caught:
            call_command("inspect", "--policy", "tbs", stdout=StringIO())
        self.assertEqual(caught.exception.returncode, 1)
