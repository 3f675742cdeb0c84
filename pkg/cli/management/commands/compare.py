from cli.management.commands.run import Command as RunCommand


class Command(RunCommand):
    help = "Paired comparison of two or more policies against the same hidden farm"

    minimum_policies = 2
