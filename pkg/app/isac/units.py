"""Unit conversions shared by the config parser, the channel model and reporting.

All dB/dBm arithmetic in the package goes through these helpers.
"""
from __future__ import annotations

import math
import re

import numpy as np

from .errors import InvalidParameterError

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z°]*)\s*$")

_FREQUENCY_SCALE = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: float) -> float:
    if value <= 0:
        raise InvalidParameterError(f"cannot express non-positive ratio {value!r} in dB")
    return float(10.0 * math.log10(value))


def dbm_to_watts(power_dbm: float) -> float:
    return float(10.0 ** ((power_dbm - 30.0) / 10.0))


def watts_to_dbm(power_w: float) -> float:
    if power_w <= 0:
        return float("-inf")
    return float(10.0 * math.log10(power_w) + 30.0)


def deg(value_deg: float) -> float:
    return float(np.deg2rad(value_deg))


def parse_quantity(raw: object, kind: str = "ratio") -> float:
    """Convert a config value to SI / linear units.

    Numbers are taken as already linear, except for ``kind="angle"`` where
    they are degrees. Strings may carry a unit suffix: ``dB`` (ratio),
    ``dBm`` (watts), ``Hz``/``kHz``/``MHz``/``GHz``, ``deg`` and ``rad``.
    """
    if isinstance(raw, bool):
        raise InvalidParameterError(f"expected a number, got {raw!r}")
    if isinstance(raw, (int, float)):
        return deg(raw) if kind == "angle" else float(raw)
    if not isinstance(raw, str):
        raise InvalidParameterError(f"expected a number or quantity string, got {raw!r}")

    match = _QUANTITY.match(raw)
    if match is None:
        raise InvalidParameterError(f"unparseable quantity {raw!r}")
    number = float(match.group(1))
    unit = match.group(2).lower()

    if unit == "":
        return deg(number) if kind == "angle" else number
    if unit == "db":
        return db_to_linear(number)
    if unit == "dbm":
        return dbm_to_watts(number)
    if unit in ("deg", "°"):
        return deg(number)
    if unit == "rad":
        return number
    if unit in _FREQUENCY_SCALE:
        return number * _FREQUENCY_SCALE[unit]
    if unit == "m":
        return number
    raise InvalidParameterError(f"unknown unit {match.group(2)!r} in {raw!r}")
