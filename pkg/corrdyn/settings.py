"""
Django settings for corrdyn project.

The project has no web surface: Django provides configuration, logging and the
management-command entry point for the correlation dynamics engine.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import environ
import os
from pathlib import Path

env = environ.Env(DEBUG=(bool, False))

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

environ.Env.read_env(os.path.join(BASE_DIR, ".env"))


# No request handling happens here, the key only satisfies Django's checks
SECRET_KEY = env("SECRET_KEY", default="corrdyn-local-engine")

DEBUG = env("DEBUG")

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    # Apps de terceros
    "rest_framework",
    # Mis apps
    "algebra.apps.AlgebraConfig",
    "evolution.apps.EvolutionConfig",
    "observables.apps.ObservablesConfig",
    "scenarios.apps.ScenariosConfig",
]

# The engine keeps no state between runs
DATABASES = {}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Engine configuration
CORRDYN = {
    # Largest admissible row count d**n of a dense n-particle operator
    "DIMENSION_BUDGET": env.int("CORRDYN_BUDGET", default=1024),
    "TOLERANCES": {
        "oracle": env.float("CORRDYN_TOL_ORACLE", default=1e-8),
        "finite_difference": env.float("CORRDYN_TOL_FINITE_DIFFERENCE", default=1e-5),
        "generator": 1e-6,
        "algebraic": env.float("CORRDYN_TOL_ALGEBRAIC", default=1e-10),
        "projector": 1e-12,
    },
    "FINITE_DIFFERENCE_STEPS": (1e-2, 1e-3, 1e-4),
    "QUADRATURE_NODES": 64,
    "DEFAULT_HBAR": 1.0,
}


# Logging configuration
LOG_LEVEL = env("CORRDYN_LOG_LEVEL", default="INFO")

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '[{levelname}] {asctime} {module} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'algebra': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'evolution': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'observables': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'scenarios': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
