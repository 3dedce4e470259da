"""Fixed-step transient simulation of switched series-RLC clock branches.

Each branch is one tank whose topology changes at scheduled instants:

* ``pull_up``: the node charges from the supply through a resistor; the
  inductor is out of circuit and carries no current.
* ``resonant_discharge``: the node is connected through R and L to the
  mid-rail reference, so the charge sloshes out and back in one ring.
* ``hold``: switches open, the node floats.

Integration is classical RK4 on a uniform grid. A step that straddles a
switching event is split so the topology changes exactly at the event.
Dissipated energy and source work ride along as extra state variables, so
the energy ledger is integrated with the same order as the node voltage.
"""

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, NumericalError, PreconditionError
from .rlc import Damping, RlcTank, TankState, classify_damping, resonant_frequency

# dt ceiling as a fraction of the resonant period
DT_FRACTION = 200
# RK4 stability on the RC pull-up needs dt/tau below ~2.78
_PULLUP_STABILITY = 2.5


class Phase(enum.Enum):
    PULL_UP = "pull_up"
    RESONANT_DISCHARGE = "resonant_discharge"
    HOLD = "hold"


class Direction(enum.Enum):
    RISING = "rising"
    FALLING = "falling"


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    branch: int
    phase: Phase


@dataclass(frozen=True)
class SwitchSchedule:
    events: Tuple[SwitchEvent, ...]

    def __post_init__(self):
        if not self.events:
            raise PreconditionError("empty switch schedule")
        if self.events[0].time != 0:
            raise PreconditionError("schedule must start at t=0")
        for a, b in zip(self.events, self.events[1:]):
            if b.time < a.time:
                raise PreconditionError("schedule times must be non-decreasing")

    def for_branch(self, index: int) -> List[Tuple[float, Phase]]:
        return [(e.time, e.phase) for e in self.events if e.branch == index]


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_end: float
    vdd: float
    record_stride: int = 1
    pull_up_resistance: float = 1.0
    allow_unsafe_dt: bool = False

    def __post_init__(self):
        if not (0 < self.dt <= self.t_end):
            raise ConfigurationError(f"need 0 < dt <= t_end (dt={self.dt!r}, t_end={self.t_end!r})")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")
        if not self.vdd > 0:
            raise ConfigurationError("non-positive vdd")
        if not self.pull_up_resistance > 0:
            raise ConfigurationError("non-positive pull_up_resistance")

    @property
    def drive(self) -> float:
        """Mid-rail reference the resonant loop rings around."""
        return 0.5 * self.vdd

    def check(self, branches) -> None:
        """Raise ``ConfigurationError`` if dt is too coarse for any tank."""
        for name, tank in branches:
            t_res = 1.0 / resonant_frequency(tank)
            if (not self.allow_unsafe_dt and classify_damping(tank) is Damping.UNDERDAMPED
                    and self.dt > t_res / DT_FRACTION * (1 + 1e-12)):
                raise ConfigurationError(
                    f"dt={self.dt!r} exceeds t_res/{DT_FRACTION}={t_res / DT_FRACTION!r} "
                    f"for tank {name!r}")
            tau = self.pull_up_resistance * tank.capacitance
            if self.dt > _PULLUP_STABILITY * tau:
                raise ConfigurationError(
                    f"dt={self.dt!r} unstable for pull-up time constant {tau!r} "
                    f"of tank {name!r}")


def default_dt(tanks: Sequence[RlcTank]) -> float:
    """Largest dt satisfying the t_res/200 ceiling for every tank."""
    return min(1.0 / resonant_frequency(t) for t in tanks) / DT_FRACTION


@dataclass
class Waveform:
    node: str
    kind: str  # "voltage" or "current"
    times: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.times)

    @property
    def samples(self) -> List[Tuple[float, float]]:
        return list(zip(self.times.tolist(), self.values.tolist()))

    def inverted(self, vdd: float, node: Optional[str] = None) -> "Waveform":
        return Waveform(node or self.node, self.kind, self.times, vdd - self.values)

    def window(self, t0: float, t1: float) -> "Waveform":
        mask = (self.times >= t0) & (self.times <= t1)
        return Waveform(self.node, self.kind, self.times[mask], self.values[mask])


@dataclass
class EnergyLedger:
    """Energy bookkeeping for a run, in joules.

    ``supplied`` is the energy stored at t=0 plus the net work done by the
    sources, so ``supplied == dissipated + stored`` closes exactly in exact
    arithmetic.
    """

    supplied: float = 0.0
    dissipated: float = 0.0
    stored: float = 0.0

    @property
    def closure_error(self) -> float:
        return self.supplied - self.dissipated - self.stored

    @property
    def relative_closure_error(self) -> float:
        return abs(self.closure_error) / abs(self.supplied) if self.supplied else 0.0

    def __add__(self, other: "EnergyLedger") -> "EnergyLedger":
        return EnergyLedger(self.supplied + other.supplied,
                            self.dissipated + other.dissipated,
                            self.stored + other.stored)


@dataclass
class BranchRun:
    name: str
    rclk: Waveform
    current: Waveform
    ledger: EnergyLedger
    final: TankState


def _branch_list(network) -> List[Tuple[str, RlcTank]]:
    if isinstance(network, RlcTank):
        return [("b0", network)]
    branches = getattr(network, "branches", None)
    if branches is not None:
        return [(b.name, b.tank) for b in branches]
    return [(f"b{i}", t) for i, t in enumerate(network)]


def _rk4(phase, y, h, tank, drive, vdd, rpu):
    v, i, ed, w = y
    if phase is Phase.HOLD:
        return y
    c = tank.capacitance
    if phase is Phase.PULL_UP:
        def f(v):
            ipu = (vdd - v) / rpu
            return ipu / c, ipu * ipu * rpu, vdd * ipu

        k1v, k1e, k1w = f(v)
        k2v, k2e, k2w = f(v + 0.5 * h * k1v)
        k3v, k3e, k3w = f(v + 0.5 * h * k2v)
        k4v, k4e, k4w = f(v + h * k3v)
        s = h / 6.0
        return (v + s * (k1v + 2 * k2v + 2 * k3v + k4v), 0.0,
                ed + s * (k1e + 2 * k2e + 2 * k3e + k4e),
                w + s * (k1w + 2 * k2w + 2 * k3w + k4w))
    inv_l = 1.0 / tank.inductance
    r = tank.resistance
    inv_c = 1.0 / c

    k1v = i * inv_c
    k1i = (drive - v - r * i) * inv_l
    v2 = v + 0.5 * h * k1v
    i2 = i + 0.5 * h * k1i
    k2v = i2 * inv_c
    k2i = (drive - v2 - r * i2) * inv_l
    v3 = v + 0.5 * h * k2v
    i3 = i + 0.5 * h * k2i
    k3v = i3 * inv_c
    k3i = (drive - v3 - r * i3) * inv_l
    v4 = v + h * k3v
    i4 = i + h * k3i
    k4v = i4 * inv_c
    k4i = (drive - v4 - r * i4) * inv_l
    s = h / 6.0
    return (v + s * (k1v + 2 * k2v + 2 * k3v + k4v),
            i + s * (k1i + 2 * k2i + 2 * k3i + k4i),
            ed + s * r * (i * i + 2 * i2 * i2 + 2 * i3 * i3 + i4 * i4),
            w + s * drive * (i + 2 * i2 + 2 * i3 + i4))


def simulate_branch(name: str, tank: RlcTank, events: List[Tuple[float, Phase]],
                    config: SimConfig, initial: Optional[TankState] = None) -> BranchRun:
    """Integrate one branch through its phase events."""
    if not events or events[0][0] != 0:
        raise PreconditionError(f"schedule does not cover t=0 for branch {name!r}")
    dt, vdd, rpu, drive = config.dt, config.vdd, config.pull_up_resistance, config.drive
    state0 = initial if initial is not None else TankState(vdd, 0.0)
    y = (state0.v_c, state0.i_l, 0.0, 0.0)
    switch_loss = 0.0
    n_steps = int(math.floor(config.t_end / dt + 1e-9))
    snap = 1e-9 * dt
    stride = config.record_stride
    times, vs, cur = [], [], []

    phase = events[0][1]
    ev = 1

    def enter(new_phase, y):
        nonlocal switch_loss
        if new_phase is not Phase.RESONANT_DISCHARGE and y[1] != 0.0:
            # open-circuiting the coil dumps its field energy in the switch
            switch_loss += 0.5 * tank.inductance * y[1] * y[1]
            y = (y[0], 0.0, y[2], y[3])
        return y

    y = enter(phase, y)

    def advance(y, t_from, t_to):
        nonlocal ev, phase
        while ev < len(events) and events[ev][0] <= t_to + snap:
            te = events[ev][0]
            if te - t_from > snap:
                y = _rk4(phase, y, te - t_from, tank, drive, vdd, rpu)
                t_from = te
            phase = events[ev][1]
            y = enter(phase, y)
            ev += 1
        if t_to - t_from > snap:
            y = _rk4(phase, y, t_to - t_from, tank, drive, vdd, rpu)
        return y

    # events at t=0 beyond the first
    y = advance(y, 0.0, 0.0)
    for n in range(n_steps + 1):
        t = n * dt
        if n % stride == 0:
            times.append(t)
            vs.append(y[0])
            cur.append(y[1])
        if n == n_steps:
            break
        y = advance(y, t, (n + 1) * dt)
        if not (math.isfinite(y[0]) and math.isfinite(y[1])):
            raise NumericalError(f"non-finite state in branch {name!r} at t={(n + 1) * dt!r}")
    if config.t_end - n_steps * dt > snap:
        y = advance(y, n_steps * dt, config.t_end)

    final = TankState(y[0], y[1])
    ledger = EnergyLedger(supplied=state0.energy(tank) + y[3],
                          dissipated=y[2] + switch_loss,
                          stored=final.energy(tank))
    t_arr = np.asarray(times)
    return BranchRun(name=name,
                     rclk=Waveform(f"{name}.R_CLK", "voltage", t_arr, np.asarray(vs)),
                     current=Waveform(f"{name}.I_L", "current", t_arr, np.asarray(cur)),
                     ledger=ledger, final=final)


def simulate(network, schedule: SwitchSchedule, config: SimConfig,
             initial: Optional[Sequence[TankState]] = None,
             ) -> Tuple[Dict[str, Waveform], EnergyLedger]:
    """Run every branch of ``network`` through ``schedule``.

    Returns waveforms keyed by node name (``<branch>.R_CLK``,
    ``<branch>.Pclk``, ``<branch>.I_L``) and the summed energy ledger.
    Branches share only the ideal sources, so each is integrated on its own.
    """
    branches = _branch_list(network)
    config.check(branches)
    waveforms: Dict[str, Waveform] = {}
    total = EnergyLedger()
    for idx, (name, tank) in enumerate(branches):
        run = simulate_branch(name, tank, schedule.for_branch(idx), config,
                              None if initial is None else initial[idx])
        waveforms[run.rclk.node] = run.rclk
        waveforms[f"{name}.Pclk"] = run.rclk.inverted(config.vdd, f"{name}.Pclk")
        waveforms[run.current.node] = run.current
        total = total + run.ledger
    return waveforms, total


def crossing_times(w: Waveform, threshold: float,
                   direction: Direction = Direction.RISING) -> List[float]:
    """Threshold crossings located by linear interpolation between samples."""
    if len(w) == 0:
        raise PreconditionError(f"empty waveform {w.node!r}")
    v = w.values
    t = w.times
    if isinstance(direction, str):
        direction = Direction(direction)
    if direction is Direction.RISING:
        idx = np.nonzero((v[:-1] < threshold) & (v[1:] >= threshold))[0]
    else:
        idx = np.nonzero((v[:-1] > threshold) & (v[1:] <= threshold))[0]
    v0, v1 = v[idx], v[idx + 1]
    frac = (threshold - v0) / (v1 - v0)
    return (t[idx] + frac * (t[idx + 1] - t[idx])).tolist()


def dissipated_energy(current: Waveform, resistance: float) -> float:
    """Trapezoidal Joule integral of i^2 R over the record."""
    if len(current) < 2:
        return 0.0
    return float(resistance * np.trapezoid(current.values ** 2, current.times))


def write_waveforms_csv(waveforms, fh) -> None:
    """CSV with header ``time_s,node,kind,value``; floats in repr form."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["time_s", "node", "kind", "value"])
    for w in (waveforms.values() if isinstance(waveforms, dict) else waveforms):
        for t, v in zip(w.times.tolist(), w.values.tolist()):
            writer.writerow([repr(t), w.node, w.kind, repr(v)])
