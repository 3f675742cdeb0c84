"""
Django settings for the om_planner project.

The project has no web surface: Django provides configuration, logging,
management commands and the test runner for the planning apps.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from dotenv import load_dotenv
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Load environment variables from .env file
env_path = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(dotenv_path=env_path)

# Only used by Django internals; nothing is signed.
SECRET_KEY = os.getenv("OM_PLANNER_SECRET_KEY", "om-planner-offline-key")

DEBUG = False

ALLOWED_HOSTS: list[str] = []


# Application definition

INSTALLED_APPS = [
    # Planning apps
    "degradation.apps.DegradationConfig",
    "power.apps.PowerConfig",
    "scenario.apps.ScenarioConfig",
    "milp.apps.MilpAppConfig",
    "policies.apps.PoliciesConfig",
    "harness.apps.HarnessConfig",
    "cli.apps.CliConfig",
]

LOGGING = {
    "version": 1,
    "disable_existing_loggers": True,
    "formatters": {
        "standard": {"format": "%(asctime)s [%(levelname)s]- %(message)s"},
        "json": {
            "()": "om_planner.log_formatter.StandardJSONLogFormatter",
        },
    },
    "handlers": {
        "console": {
            "level": "INFO",
            "class": "logging.StreamHandler",
            "formatter": "json",
        },
    },
    "loggers": {
        "django": {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": True,
        },
        "om_planner": {
            "handlers": ["console"],
            "level": os.getenv("OM_PLANNER_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}

# Solver discovery. These are the only environment-driven planning knobs;
# everything else comes from the run file.
OM_PLANNER_SOLVER = os.getenv("OM_PLANNER_SOLVER", "cbc")
OM_PLANNER_SOLVER_PATH = os.getenv("OM_PLANNER_SOLVER_PATH", None)

REST_FRAMEWORK = {
    "DEFAULT_PERMISSION_CLASSES": [],
    "DEFAULT_AUTHENTICATION_CLASSES": [],
    "UNAUTHENTICATED_USER": None,
}

MIDDLEWARE: list[str] = []

# No persistence is needed; the in-memory database keeps Django checks quiet.
DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": ":memory:",
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"
