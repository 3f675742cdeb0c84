import os

from django.core.management.base import BaseCommand, CommandError

from cli.services import (
    EXIT_CONFIG,
    EXIT_RUNTIME,
    add_config_arguments,
    build_setup,
    load_run,
    policy_names,
    runtime_error,
    write_snapshot,
)
from harness.services import check_accounting, metrics_frame, run_policies, write_metrics_csv, write_rolls_jsonl
from om_planner.errors import PlannerError


class Command(BaseCommand):
    help = "Run a rolling-horizon campaign for every configured policy against one hidden farm"

    minimum_policies = 1

    def add_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument("--out", default="results", help="Directory for metrics.csv, rolls.jsonl and the snapshot")

    def handle(self, *args, **options):
        config = load_run(options)
        kinds = config.policies.kinds
        if len(kinds) < self.minimum_policies:
            raise CommandError(
                f"Need at least {self.minimum_policies} policies, got {policy_names(kinds)}",
                returncode=EXIT_CONFIG,
            )
        setup = build_setup(config)

        self.stdout.write(
            f"Running {policy_names(kinds)} over {config.campaign.n_rolls} rolls "
            f"with {config.campaign.n_turbines} turbines (truth seed {config.campaign.truth_seed})"
        )
        try:
            results = run_policies(config.policies.policies(), setup)
        except PlannerError as exc:
            raise runtime_error(exc)

        for metrics, records in results.values():
            ok, message = check_accounting(metrics, records)
            if not ok:
                self.stderr.write(self.style.WARNING(f"{metrics.policy}: accounting mismatch, {message}"))

        folder = options["out"]
        metrics = [m for m, _ in results.values()]
        try:
            os.makedirs(folder, exist_ok=True)
            write_metrics_csv(metrics, os.path.join(folder, "metrics.csv"))
            write_rolls_jsonl(results, os.path.join(folder, "rolls.jsonl"))
            write_snapshot(config, folder)
        except OSError as exc:
            raise CommandError(f"Cannot write results to {folder}: {exc}", returncode=EXIT_RUNTIME)

        self.stdout.write(metrics_frame(metrics).to_string(index=False))
        self.stdout.write(self.style.SUCCESS(f"Results written to {folder}"))
