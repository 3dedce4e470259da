"""Behavioral models of the resonant clock path and its sequential sinks.

The clock path (pulse generator into the PSR driver tank) is electrical and
runs through the transient engine. Everything downstream of the driver is
event-level: gaters and buffers are affine delay stages, and flip-flops are
bit-level state machines parameterized by a timing model.
"""

import enum
import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .engine import (Direction, Phase, SimConfig, SwitchEvent, SwitchSchedule, Waveform,
                     crossing_times, simulate_branch)
from .errors import PreconditionError, RangeError, ValidationError
from .rlc import RlcTank, TankState, pulse_width

# slack tolerance for setup/hold comparisons, seconds
TIMING_EPS = 1e-18


class FlipFlopKind(enum.Enum):
    PSFF = "PSFF"
    PRFF = "PRFF"
    TSPCFF = "TSPCFF"
    FF13T = "FF13T"

    @property
    def pulsed(self) -> bool:
        return self is not FlipFlopKind.PSFF


@dataclass(frozen=True)
class BoosterSpec:
    l2: float
    c2: float
    boost_gain: float = 1.0

    def __post_init__(self):
        if not self.l2 > 0:
            raise ValidationError("non-positive l2", field="l2")
        if not self.c2 > 0:
            raise ValidationError("non-positive c2", field="c2")
        if not self.boost_gain >= 1.0:
            raise ValidationError("boost_gain must be >= 1", field="boost_gain")


@dataclass(frozen=True)
class PulseGenSpec:
    """Delay tank (l1, c1) setting the pulse width, plus the voltage doubler."""

    l1: float
    c1: float
    booster: BoosterSpec

    def __post_init__(self):
        if not self.l1 > 0:
            raise ValidationError("non-positive l1", field="l1")
        if not self.c1 > 0:
            raise ValidationError("non-positive c1", field="c1")

    @property
    def t_d(self) -> float:
        return pulse_width(self.l1, self.c1)


@dataclass(frozen=True)
class DigitalEvent:
    time: float
    signal: str
    level: int


@dataclass(frozen=True)
class FlipFlopTimingModel:
    kind: FlipFlopKind
    t_cq: float
    t_setup: float
    t_hold: float
    static_power_d0: float
    static_power_d1: float
    dynamic_power_points: Tuple[Tuple[float, float], ...]
    normalized_area: Optional[float] = None

    def __post_init__(self):
        if not self.t_cq > 0:
            raise ValidationError("t_cq must be positive", field="t_cq")
        pts = self.dynamic_power_points
        if not pts:
            raise ValidationError("no dynamic power points", field="dynamic_power")
        for (f0, p0), (f1, p1) in zip(pts, pts[1:]):
            if not (f1 > f0 and p1 > p0):
                raise ValidationError("dynamic power points must increase in "
                                      "frequency and power", field="dynamic_power")

    @property
    def static_power(self) -> float:
        """Mean of the D=0 and D=1 leakage."""
        return 0.5 * (self.static_power_d0 + self.static_power_d1)

    @property
    def freq_range(self) -> Tuple[float, float]:
        return self.dynamic_power_points[0][0], self.dynamic_power_points[-1][0]


@dataclass(frozen=True)
class FlipFlopState:
    q: int = 0
    s: int = 0
    s_b: int = 1

    def __post_init__(self):
        if self.s != 1 - self.s_b or self.q != self.s:
            raise ValidationError("inconsistent flip-flop state")

    @classmethod
    def holding(cls, q: int) -> "FlipFlopState":
        return cls(q=q, s=q, s_b=1 - q)


@dataclass(frozen=True)
class SetupHoldReport:
    setup_violation: bool
    hold_violation: bool
    setup_slack: float
    hold_slack: float

    @property
    def ok(self) -> bool:
        return not (self.setup_violation or self.hold_violation)


# -- characterization table ---------------------------------------------------

def _model_from_dict(kind: str, d) -> FlipFlopTimingModel:
    return FlipFlopTimingModel(
        kind=FlipFlopKind(kind), t_cq=float(d["t_cq"]), t_setup=float(d["t_setup"]),
        t_hold=float(d["t_hold"]), static_power_d0=float(d["static_power_d0"]),
        static_power_d1=float(d["static_power_d1"]),
        dynamic_power_points=tuple((float(f), float(p)) for f, p in d["dynamic_power"]),
        normalized_area=d.get("normalized_area"))


@lru_cache(maxsize=None)
def _packaged_table_text() -> str:
    return resources.files("psrclock.data").joinpath("ff_table.json").read_text("utf-8")


def load_ff_table(path=None) -> Dict[FlipFlopKind, FlipFlopTimingModel]:
    """Flip-flop timing models keyed by kind."""
    if path is None:
        raw = json.loads(_packaged_table_text())
    else:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    return {FlipFlopKind(k): _model_from_dict(k, v) for k, v in raw["kinds"].items()}


def mc_reference(kind: FlipFlopKind) -> Optional[dict]:
    """Published Monte-Carlo statistics for ``kind``, when available."""
    raw = json.loads(_packaged_table_text())
    return raw["kinds"][kind.value].get("mc_reference")


# -- pulse generator ----------------------------------------------------------

def clock_edges(freq: float, t_end: float, t_start: float = 0.0,
                signal: str = "CLK") -> List[DigitalEvent]:
    """Square-wave edges of a 50% clock starting high at ``t_start``."""
    if not freq > 0:
        raise ValidationError("non-positive clock frequency")
    half = 0.5 / freq
    # count edges in index space so an edge landing on t_end is excluded
    # regardless of rounding
    n = max(0, int(math.ceil((t_end - t_start) / half - 1e-9)))
    return [DigitalEvent(t_start + k * half, signal, 1 - k % 2) for k in range(n)]


def pulse_train(clk_edges: Sequence[DigitalEvent], t_d: float) -> List[Tuple[float, float]]:
    """XNOR of the clock with its t_d-delayed copy: a pulse at every edge.

    Returns ``(start, end)`` intervals, two per clock period.
    """
    edges = list(clk_edges)
    if not edges:
        return []
    for a, b in zip(edges, edges[1:]):
        if a.level == b.level:
            raise PreconditionError("clock edges must alternate levels")
        if t_d >= b.time - a.time:
            raise PreconditionError(
                f"pulse width {t_d!r} s >= clock half-period {b.time - a.time!r} s; "
                "pulses would overlap")
    return [(e.time, e.time + t_d) for e in edges]


def boosted_amplitude(spec: PulseGenSpec, vdd: float) -> float:
    """V_SR amplitude after the doubler; never more than 2*vdd."""
    return min(spec.booster.boost_gain * vdd, 2.0 * vdd)


def psr_schedule(tanks: Sequence[RlcTank], pulse_starts: Sequence[float],
                 t_end: float) -> SwitchSchedule:
    """Switch schedule induced by V_SR pulses.

    Each pulse starts one full resonant ring of every driver tank; when the
    ring completes (inductor current back at zero) the supply pulls the node
    the rest of the way to vdd. A ring still running when the next pulse
    arrives is cut short.
    """
    starts = sorted(t for t in pulse_starts if 0 <= t < t_end)
    events = []
    for b, tank in enumerate(tanks):
        events.append(SwitchEvent(0.0, b, Phase.PULL_UP))
        ring = tank.ring_period()
        for k, t0 in enumerate(starts):
            events.append(SwitchEvent(t0, b, Phase.RESONANT_DISCHARGE))
            nxt = starts[k + 1] if k + 1 < len(starts) else math.inf
            t1 = t0 + ring
            if t1 < nxt and t1 < t_end:
                events.append(SwitchEvent(t1, b, Phase.PULL_UP))
    events.sort(key=lambda e: (e.time, e.branch))
    return SwitchSchedule(tuple(events))


def psr_driver_run(tank: RlcTank, v_sr_pulses: Sequence[Tuple[float, float]],
                   config: SimConfig, initial: Optional[TankState] = None,
                   name: str = "psr") -> Waveform:
    """R_CLK waveform of one PSR driver fed by the given V_SR pulses."""
    config.check([(name, tank)])
    schedule = psr_schedule([tank], [p[0] for p in v_sr_pulses], config.t_end)
    return simulate_branch(name, tank, schedule.for_branch(0), config, initial).rclk


def pclk_events(rclk: Waveform, vdd: float, signal: str = "Pclk") -> List[DigitalEvent]:
    """Digital Pclk edges: R_CLK inverted and sliced at vdd/2."""
    pclk = rclk.inverted(vdd)
    ev = [DigitalEvent(t, signal, 1) for t in crossing_times(pclk, 0.5 * vdd, Direction.RISING)]
    ev += [DigitalEvent(t, signal, 0) for t in crossing_times(pclk, 0.5 * vdd, Direction.FALLING)]
    return sorted(ev, key=lambda e: e.time)


# -- gaters and buffers -------------------------------------------------------

def stage_delay(kind: str, load: float, params) -> float:
    """Affine stage delay: intrinsic + slope * load.

    ``params`` is either a single DelayParams or a mapping from kind to one.
    """
    if kind not in ("gater", "buffer"):
        raise ValidationError(f"unknown stage kind {kind!r}")
    if load < 0:
        raise ValidationError("negative stage load")
    p = params[kind] if isinstance(params, dict) else params
    return p.intrinsic + p.slope * load


# -- flip-flops ---------------------------------------------------------------

def ff13t_step(state: FlipFlopState, pclk: int, data: int, reset_n: int) -> FlipFlopState:
    """One evaluation of the 13-transistor pulsed register."""
    if not reset_n:
        return FlipFlopState.holding(0)
    if not pclk:
        return state
    return FlipFlopState.holding(1 if data else 0)


def ff_capture(model: FlipFlopTimingModel, clock_events: Sequence[DigitalEvent],
               data_events: Sequence[DigitalEvent],
               reset_events: Sequence[DigitalEvent] = ()) -> List[Tuple[float, int]]:
    """Replay event streams through a flip-flop; returns ``(time, q)`` pairs.

    PSFF samples data on rising clock edges. Pulsed kinds are transparent
    while the clock pulse is high, so a data change inside the pulse is
    also captured. Output times include t_cq. Data and reset start at 0 and
    1 respectively; at equal timestamps reset is applied first, then data,
    then clock.
    """
    order = {"reset": 0, "data": 1, "clock": 2}
    timeline = sorted(
        [(e.time, order["reset"], e.level) for e in reset_events]
        + [(e.time, order["data"], e.level) for e in data_events]
        + [(e.time, order["clock"], e.level) for e in clock_events],
        key=lambda x: (x[0], x[1]))
    state = FlipFlopState.holding(0)
    clk, data, reset_n = 0, 0, 1
    out = []
    pulsed = model.kind.pulsed
    for t, src, level in timeline:
        if src == 0:
            reset_n = level
            if not reset_n:
                state = ff13t_step(state, clk, data, 0)
                out.append((t + model.t_cq, state.q))
        elif src == 1:
            data = level
            if pulsed and clk and reset_n:
                state = ff13t_step(state, 1, data, reset_n)
                out.append((t + model.t_cq, state.q))
        else:
            rising = level and not clk
            clk = level
            if rising and reset_n:
                state = ff13t_step(state, 1, data, reset_n)
                out.append((t + model.t_cq, state.q))
    return out


def check_setup_hold(model: FlipFlopTimingModel, data_change: float,
                     edge: float) -> SetupHoldReport:
    """Check one data transition against one capturing edge.

    Setup slack is ``(edge - data_change) - t_setup``; a negative t_setup
    lets data change after the edge. Hold is checked on the half-open window
    ``[edge, edge + t_hold)``; a change outside it has infinite hold slack.
    """
    setup_slack = (edge - data_change) - model.t_setup
    delta = data_change - edge
    if delta >= -TIMING_EPS:
        hold_slack = delta - model.t_hold
    else:
        hold_slack = math.inf
    return SetupHoldReport(setup_violation=setup_slack < -TIMING_EPS,
                           hold_violation=hold_slack < -TIMING_EPS,
                           setup_slack=setup_slack, hold_slack=hold_slack)


def warn_pulse_width(t_d: float, model: FlipFlopTimingModel) -> bool:
    """Warn when a pulsed register's transparency outlasts its hold window."""
    if model.kind.pulsed and t_d > model.t_hold:
        warnings.warn(f"pulse width {t_d * 1e12:.1f} ps exceeds {model.kind.value} hold "
                      f"time {model.t_hold * 1e12:.1f} ps; data must stay stable for "
                      "the whole pulse", stacklevel=2)
        return True
    return False


def ff_dynamic_power(model: FlipFlopTimingModel, f: float) -> float:
    """Piecewise-linear dynamic power at clock frequency ``f``; no
    extrapolation beyond the characterized points."""
    lo, hi = model.freq_range
    if not (lo * (1 - 1e-12) <= f <= hi * (1 + 1e-12)):
        raise RangeError(f"frequency {f!r} Hz outside characterized range "
                         f"[{lo!r}, {hi!r}] for {model.kind.value}")
    fs, ps = zip(*model.dynamic_power_points)
    return float(np.interp(f, fs, ps))
