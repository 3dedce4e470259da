import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from psrclock.calibration import CONFIG_ENV, default_calibration, load_calibration
from psrclock.errors import ValidationError
from psrclock.units import format_eng, parse_quantity


@pytest.mark.parametrize("text,value", [
    ("1n", 1e-9), ("2pF", 2e-12), ("5GHz", 5e9), ("500meg", 5e8), ("3M", 3e6),
    ("3m", 3e-3), ("1.013nH", 1.013e-9), ("10", 10.0), ("1e-9", 1e-9), ("-4.5k", -4500.0),
    ("7u", 7e-6), ("7µ", 7e-6), ("2fF", 2e-15), (".5p", 0.5e-12), ("10Ohm", 10.0),
])
def test_parse_quantity(text, value):
    assert parse_quantity(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "n", "1x", "1 n", "1nn", "GHz", "1e", "--1"])
def test_parse_quantity_rejects(text):
    with pytest.raises(ValueError):
        parse_quantity(text)


@given(st.floats(-1e15, 1e15, allow_nan=False))
def test_parse_quantity_accepts_repr(x):
    assert parse_quantity(repr(x)) == x


def test_format_eng():
    assert format_eng(1e-10, "s") == "100 ps"
    assert format_eng(5e9, "Hz") == "5 GHz"
    assert format_eng(0.0, "V") == "0.0 V"


def test_default_calibration_values():
    cal = default_calibration()
    assert cal.power.activity_scale == 0.03
    assert cal.unit_caps.ff_cap("PRFF") > 0
    assert set(cal.delays) == {"gater", "buffer"}


def test_calibration_override_via_env(tmp_path, monkeypatch):
    d = default_calibration().to_dict()
    d["pull_up_resistance_ohm"] = 7.5
    p = tmp_path / "cal.json"
    p.write_text(json.dumps(d))
    monkeypatch.setenv(CONFIG_ENV, str(p))
    assert load_calibration().pull_up_resistance == 7.5
    assert default_calibration().pull_up_resistance == 1.0


def test_calibration_round_trips_through_dict(tmp_path):
    cal = default_calibration()
    p = tmp_path / "cal.json"
    p.write_text(json.dumps(cal.to_dict()))
    assert load_calibration(str(p)) == cal


def test_calibration_rejects_non_positive(tmp_path):
    d = default_calibration().to_dict()
    d["unit_caps_f"]["gater"] = 0
    p = tmp_path / "cal.json"
    p.write_text(json.dumps(d))
    with pytest.raises(ValidationError, match="gater"):
        load_calibration(str(p))
