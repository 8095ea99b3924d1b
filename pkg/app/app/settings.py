from __future__ import annotations

import os
from pathlib import Path

from app.logging import build_logging

BASE_DIR = Path(__file__).resolve().parents[1]

SECRET_KEY = os.environ.get("SECRET_KEY", "dev-secret-key")
DEBUG = os.environ.get("DEBUG", "0") == "1"
ALLOWED_HOSTS: list[str] = []

# Management commands only: no HTTP surface, no models
INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "app",
    "isac.apps.IsacConfig",
]

MIDDLEWARE: list[str] = []

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": ":memory:",
    }
}

LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Solver and experiment knobs
ISAC_SOLVER = os.environ.get("ISAC_SOLVER", "CLARABEL")
ISAC_FEASIBILITY_TOL = float(os.environ.get("ISAC_FEASIBILITY_TOL", "1e-7"))
ISAC_PSD_TOL = float(os.environ.get("ISAC_PSD_TOL", "1e-7"))
ISAC_WORKERS = int(os.environ.get("ISAC_WORKERS", "0"))  # 0 = one per core
ISAC_OUTPUT_DIR = Path(os.environ.get("ISAC_OUTPUT_DIR", "runs"))
ISAC_PROFILE = os.environ.get("ISAC_PROFILE", "desk")
ISAC_LOG_LEVEL = os.environ.get("ISAC_LOG_LEVEL", "INFO")

LOGGING = build_logging(ISAC_LOG_LEVEL)
