"""
Run-file loading, command-line overrides and the resolved snapshot.
"""

import copy
import logging
import os
from argparse import ArgumentParser
from typing import Any, Dict, List, Mapping, Optional, Sequence

import yaml
from django.core.management.base import CommandError

from cli.entities import RunConfig
from cli.serializers import RunConfigSerializer
from harness.entities import PlannerSetup
from om_planner.errors import ConfigurationError, InvalidInputError, PlannerError, SolverUnavailableError
from policies.entities import PolicyKind

logger = logging.getLogger("om_planner")

SNAPSHOT_NAME = "resolved_config.yaml"

EXIT_CONFIG = 1
EXIT_RUNTIME = 2

# named flag -> (section, key)
_FLAG_TARGETS = {
    "tbs_interval_days": ("policies", "tbs_interval_days"),
    "rolls": ("campaign", "n_rolls"),
    "turbines": ("campaign", "n_turbines"),
    "seed": ("campaign", "truth_seed"),
}


def format_errors(errors: Any, prefix: str = "") -> List[str]:
    """Flatten nested serializer errors into ``section.key: message`` lines."""
    if isinstance(errors, Mapping):
        lines: List[str] = []
        for key, value in errors.items():
            label = prefix if key == "non_field_errors" else f"{prefix}.{key}" if prefix else str(key)
            lines += format_errors(value, label)
        return lines
    if isinstance(errors, (list, tuple)):
        lines = []
        for item in errors:
            lines += format_errors(item, prefix)
        return lines
    return [f"{prefix}: {errors}" if prefix else str(errors)]


def load_document(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as stream:
            document = yaml.safe_load(stream)
    except OSError as exc:
        raise ConfigurationError(f"Cannot read run file {path}: {exc}")
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Run file {path} is not valid YAML: {exc}")
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigurationError(f"Run file {path} must hold a mapping of sections")
    return document


def apply_override(document: Dict[str, Any], override: str) -> None:
    """
    Apply one ``section.key=value`` override in place; the value is read as YAML
    and keys may nest (``weather.wind.std=3``).
    """
    path, sep, raw = override.partition("=")
    keys = [key for key in path.strip().split(".") if key]
    if not sep or len(keys) < 2:
        raise ConfigurationError(f"Override '{override}' is not of the form section.key=value")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Override '{override}' has an unreadable value: {exc}")
    node = document
    for key in keys[:-1]:
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigurationError(f"Override '{override}' descends into a non-mapping at '{key}'")
        node = child
    node[keys[-1]] = value


def resolve(document: Mapping[str, Any]) -> RunConfig:
    """
    Validate a run document into a ``RunConfig``.

    Raises:
        ConfigurationError: unknown keys, field errors (named ``section.key``)
            or a section whose values are inconsistent.
    """
    serializer = RunConfigSerializer(data=document)
    if not serializer.is_valid():
        raise ConfigurationError("\n".join(format_errors(serializer.errors)))
    try:
        return serializer.save()
    except (ConfigurationError, InvalidInputError):
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc))


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def snapshot(config: RunConfig) -> Dict[str, Any]:
    """Every parameter of ``config`` in run-file form."""
    return _plain(RunConfigSerializer(config).data)


def write_snapshot(config: RunConfig, folder: str) -> str:
    path = os.path.join(folder, SNAPSHOT_NAME)
    with open(path, "w", encoding="utf-8") as stream:
        yaml.safe_dump(snapshot(config), stream, sort_keys=False)
    return path


def add_config_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="YAML run file; defaults apply without one")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one run-file value (repeatable)",
    )
    parser.add_argument(
        "--policy",
        dest="policies",
        action="append",
        choices=[kind.value for kind in PolicyKind],
        help="Policy to evaluate (repeatable); replaces policies.kinds",
    )
    parser.add_argument("--tbs-interval-days", type=float, default=None)
    parser.add_argument("--rolls", type=int, default=None)
    parser.add_argument("--turbines", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None, help="Truth seed")


def config_from_options(options: Mapping[str, Any]) -> RunConfig:
    """
    Run file, then ``--set`` overrides, then the named flags.

    Raises:
        ConfigurationError: any of them is invalid.
    """
    document = copy.deepcopy(load_document(options.get("config")))
    for override in options.get("overrides") or ():
        apply_override(document, override)
    if options.get("policies"):
        document.setdefault("policies", {})["kinds"] = list(dict.fromkeys(options["policies"]))
    for flag, (section, key) in _FLAG_TARGETS.items():
        if options.get(flag) is not None:
            if not isinstance(document.setdefault(section, {}), dict):
                raise ConfigurationError(f"Section '{section}' must be a mapping")
            document[section][key] = options[flag]
    return resolve(document)


def load_run(options: Mapping[str, Any]) -> RunConfig:
    """``config_from_options`` with failures turned into exit status 1."""
    try:
        return config_from_options(options)
    except ConfigurationError as exc:
        raise CommandError(f"Invalid configuration:\n{exc}", returncode=EXIT_CONFIG)


def build_setup(config: RunConfig) -> PlannerSetup:
    try:
        return config.setup()
    except (PlannerError, OSError) as exc:
        raise CommandError(f"Invalid configuration: {exc}", returncode=EXIT_CONFIG)


def runtime_error(exc: PlannerError) -> CommandError:
    if isinstance(exc, SolverUnavailableError):
        return CommandError(f"{exc} (backend: {exc.backend})", returncode=EXIT_RUNTIME)
    if isinstance(exc, ConfigurationError):
        return CommandError(f"Invalid configuration: {exc}", returncode=EXIT_CONFIG)
    return CommandError(str(exc), returncode=EXIT_RUNTIME)


def policy_names(kinds: Sequence[PolicyKind]) -> str:
    return ", ".join(kind.value for kind in kinds)
