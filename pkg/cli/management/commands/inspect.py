from django.core.management.base import BaseCommand, CommandError

from cli.services import EXIT_CONFIG, EXIT_RUNTIME, add_config_arguments, build_setup, load_run, runtime_error
from harness.services import CampaignRunner
from milp.builder import expected_counts
from milp.services import export_lp
from om_planner.errors import PlannerError
from policies.entities import PolicyKind
from policies.services import policy_for


class Command(BaseCommand):
    help = (
        "Build the MILP of one roll without solving it and print the tagged LP text and its counts. "
        "Earlier rolls are replayed under the first configured policy."
    )

    def add_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument("--roll", type=int, default=0, help="Roll index, 0-based")
        parser.add_argument("--out", default=None, help="Write the LP text to this file instead of stdout")

    def handle(self, *args, **options):
        config = load_run(options)
        roll = options["roll"]
        n_rolls = config.campaign.n_rolls
        if not 0 <= roll < n_rolls:
            raise CommandError(f"Roll {roll} is outside the campaign (0..{n_rolls - 1})", returncode=EXIT_CONFIG)
        policy = config.policies.policies()[0]
        if policy.kind is PolicyKind.TBS:
            raise CommandError("The tbs policy builds no MILP; pick an optimising policy", returncode=EXIT_CONFIG)
        setup = build_setup(config)

        try:
            runner = CampaignRunner(policy, setup, config.campaign.truth_seed, n_rolls)
            for earlier in range(roll):
                runner.run_roll(earlier)
            boundary, scenarios = runner.prepare(roll)
            instance = policy_for(policy).instance(setup.milp, boundary, scenarios)
        except PlannerError as exc:
            raise runtime_error(exc)

        if options["out"]:
            try:
                with open(options["out"], "w", encoding="utf-8") as stream:
                    export_lp(instance, stream)
            except OSError as exc:
                raise CommandError(f"Cannot write {options['out']}: {exc}", returncode=EXIT_RUNTIME)
        else:
            self.stdout.write(export_lp(instance))

        counts = instance.counts()
        for key, value in counts.items():
            self.stdout.write(f"{key}: {value}")
        closed_form = expected_counts(*instance.sizes, integer_overtime=setup.milp.integer_overtime)
        verdict = "match" if closed_form == counts else "differ from"
        self.stdout.write(f"counts {verdict} the closed form for {instance.sizes}")
