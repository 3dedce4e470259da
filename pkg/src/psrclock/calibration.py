"""Calibration inputs: per-stage capacitances, delay slopes, power scaling.

These are model parameters, not measured data. The defaults ship in
``data/calibration.json``; ``PSRCLOCK_CONFIG`` or an explicit path
overrides them.
"""

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Optional

from .errors import ValidationError

CONFIG_ENV = "PSRCLOCK_CONFIG"


@dataclass(frozen=True)
class UnitCaps:
    """Clock-pin load per gater, buffer, and flip-flop kind, in farads."""

    gater: float
    buffer: float
    ff: Dict[str, float]

    def ff_cap(self, kind) -> float:
        key = getattr(kind, "value", kind)
        try:
            return self.ff[key]
        except KeyError:
            raise ValidationError(f"no unit capacitance for flip-flop kind {key}",
                                  field="unit_caps.ff") from None


@dataclass(frozen=True)
class DelayParams:
    intrinsic: float
    slope: float  # seconds per farad


@dataclass(frozen=True)
class PowerCalibration:
    # Per-FF published dynamic power times the full FF count overshoots
    # tree-level totals by roughly 10x, so FF power is scaled down.
    activity_scale: float = 0.03
    gater_energy: float = 0.2e-15
    buffer_energy: float = 0.15e-15


@dataclass(frozen=True)
class Calibration:
    unit_caps: UnitCaps
    delays: Dict[str, DelayParams]
    power: PowerCalibration = field(default_factory=PowerCalibration)
    pull_up_resistance: float = 1.0
    mc_sensitivity: Dict[str, float] = field(default_factory=dict)

    def to_dict(self):
        return {
            "format_version": 1,
            "unit_caps_f": {"gater": self.unit_caps.gater,
                            "buffer": self.unit_caps.buffer,
                            "ff": dict(self.unit_caps.ff)},
            "stage_delay": {k: {"intrinsic_s": d.intrinsic, "slope_s_per_f": d.slope}
                            for k, d in self.delays.items()},
            "power": {"activity_scale": self.power.activity_scale,
                      "gater_energy_j": self.power.gater_energy,
                      "buffer_energy_j": self.power.buffer_energy},
            "pull_up_resistance_ohm": self.pull_up_resistance,
            "mc_sensitivity": dict(self.mc_sensitivity),
        }


def _from_dict(d) -> Calibration:
    try:
        uc = d["unit_caps_f"]
        caps = UnitCaps(gater=float(uc["gater"]), buffer=float(uc["buffer"]),
                        ff={k: float(v) for k, v in uc["ff"].items()})
        delays = {k: DelayParams(float(v["intrinsic_s"]), float(v["slope_s_per_f"]))
                  for k, v in d["stage_delay"].items()}
        p = d.get("power", {})
        power = PowerCalibration(
            activity_scale=float(p.get("activity_scale", 0.03)),
            gater_energy=float(p.get("gater_energy_j", 0.2e-15)),
            buffer_energy=float(p.get("buffer_energy_j", 0.15e-15)))
        cal = Calibration(unit_caps=caps, delays=delays, power=power,
                          pull_up_resistance=float(d.get("pull_up_resistance_ohm", 1.0)),
                          mc_sensitivity={k: float(v) for k, v in
                                          d.get("mc_sensitivity", {}).items()})
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed calibration file: missing {exc}") from None
    for name, v in [("unit_caps.gater", caps.gater), ("unit_caps.buffer", caps.buffer),
                    ("pull_up_resistance", cal.pull_up_resistance),
                    ("power.activity_scale", power.activity_scale)] + \
            [(f"unit_caps.ff.{k}", v) for k, v in caps.ff.items()]:
        if not v > 0:
            raise ValidationError(f"non-positive {name}", field=name)
    return cal


def load_calibration(path: Optional[str] = None) -> Calibration:
    """Load calibration from ``path``, ``$PSRCLOCK_CONFIG``, or the
    packaged defaults, in that order."""
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        with open(path, encoding="utf-8") as fh:
            return _from_dict(json.load(fh))
    text = resources.files("psrclock.data").joinpath("calibration.json").read_text("utf-8")
    return _from_dict(json.loads(text))


def default_calibration() -> Calibration:
    """Packaged defaults, ignoring the environment."""
    text = resources.files("psrclock.data").joinpath("calibration.json").read_text("utf-8")
    return _from_dict(json.loads(text))
