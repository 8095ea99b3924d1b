import math

import pytest

from isac.errors import InvalidParameterError
from isac.units import db_to_linear, dbm_to_watts, linear_to_db, parse_quantity, watts_to_dbm


def test_db_conversions():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert linear_to_db(100.0) == pytest.approx(20.0)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert watts_to_dbm(1e-3) == pytest.approx(0.0)
    assert watts_to_dbm(0.0) == -math.inf


def test_linear_to_db_rejects_non_positive():
    with pytest.raises(InvalidParameterError):
        linear_to_db(0.0)


@pytest.mark.parametrize(
    "raw, kind, expected",
    [
        ("10 dB", "ratio", 10.0),
        ("-80 dBm", "power", 1e-11),
        ("5 GHz", "frequency", 5e9),
        ("30 deg", "angle", math.pi / 6),
        (30, "angle", math.pi / 6),
        ("0.5 rad", "angle", 0.5),
        ("0.06 m", "length", 0.06),
        ("1e-3", "ratio", 1e-3),
        (2, "ratio", 2.0),
    ],
)
def test_parse_quantity(raw, kind, expected):
    assert parse_quantity(raw, kind) == pytest.approx(expected)


@pytest.mark.parametrize("raw", ["3 parsecs", "ten dB", True, None, [1]])
def test_parse_quantity_rejects(raw):
    with pytest.raises(InvalidParameterError):
        parse_quantity(raw)
