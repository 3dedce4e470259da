"""Inductor matching for skew reduction.

Every branch is its own LC tank, so a capacitance mismatch between branches
shows up as a difference in ring period and therefore in arrival time.
Choosing each branch inductor so that all tanks share one resonant
frequency removes the first-order effect. ``refine_by_simulation`` then
trims the residual left by damping and the pull-up path, measuring the
arrivals on simulated waveforms.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .elements import clock_edges, psr_schedule, pulse_train
from .engine import DT_FRACTION, SimConfig, simulate, simulate_branch
from .errors import PreconditionError, UnsupportedRegimeError, ValidationError
from .rlc import Damping, RlcTank, classify_damping, resonant_frequency
from .skew import first_crossing, measure_skew

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class TuningResult:
    inductances: List[float]
    f_target: float
    f_res_spread: float  # (max - min) / f_target over branches
    skew_before: float
    skew_after: float
    converged: bool = True
    history: List[float] = field(default_factory=list)
    evaluations: int = 0
    baseline_inductance: Optional[float] = None


def match_inductors(branch_caps: Sequence[float], f_target: float) -> List[float]:
    """L_i = 1 / ((2 pi f)^2 C_i) for each branch capacitance."""
    if not f_target > 0:
        raise ValidationError("non-positive f_target", field="f_target")
    w2 = (2.0 * math.pi * f_target) ** 2
    out = []
    for c in branch_caps:
        if not c > 0:
            raise ValidationError("non-positive branch capacitance", field="capacitance")
        out.append(1.0 / (w2 * c))
    return out


def untuned_baseline(branch_caps: Sequence[float], f_target: float) -> List[float]:
    """One shared inductor, the mean of the matched values."""
    matched = match_inductors(branch_caps, f_target)
    mean = float(np.mean(matched))
    return [mean] * len(matched)


def f_res_spread(inductances, caps, f_target) -> float:
    fs = [resonant_frequency(RlcTank(l, c)) for l, c in zip(inductances, caps)]
    return (max(fs) - min(fs)) / f_target


class SkewProbe:
    """Measures single-pulse Pclk arrival per branch for trial inductances.

    Branches only share the ideal sources, so each arrival depends on that
    branch's own inductor alone and is cached per (branch, L).
    """

    def __init__(self, network, dt: float, pull_up_resistance: float = 1.0,
                 offsets: Optional[Sequence[float]] = None):
        self.network = network
        self.vdd = network.vdd
        self.dt = dt
        self.pull_up_resistance = pull_up_resistance
        # fixed per-branch delay added after the tank (local stage delays)
        self.offsets = list(offsets) if offsets is not None else [0.0] * len(network.branches)
        self._cache: Dict[Tuple[int, float], float] = {}
        self.evaluations = 0

    def feasible(self, i: int, l: float) -> bool:
        b = self.network.branches[i].tank
        tank = RlcTank(l, b.capacitance, b.resistance)
        if classify_damping(tank) is not Damping.UNDERDAMPED:
            return False
        return self.dt <= (1.0 / resonant_frequency(tank)) / DT_FRACTION * (1 + 1e-12)

    def arrival(self, i: int, l: float) -> float:
        key = (i, float(l))
        if key in self._cache:
            return self._cache[key] + self.offsets[i]
        br = self.network.branches[i]
        tank = RlcTank(l, br.tank.capacitance, br.tank.resistance)
        t_end = 0.6 * tank.ring_period()
        t_end = max(t_end, self.dt)
        cfg = SimConfig(dt=self.dt, t_end=t_end, vdd=self.vdd,
                        pull_up_resistance=self.pull_up_resistance)
        cfg.check([(br.name, tank)])
        sched = psr_schedule([tank], [0.0], t_end)
        run = simulate_branch(br.name, tank, sched.for_branch(0), cfg)
        t = first_crossing(run.rclk.inverted(self.vdd), 0.5 * self.vdd)
        if t is None:
            raise PreconditionError(f"branch {br.name!r} produced no Pclk edge")
        self.evaluations += 1
        self._cache[key] = t
        return t + self.offsets[i]

    def arrivals(self, inductances: Sequence[float]) -> List[float]:
        return [self.arrival(i, l) for i, l in enumerate(inductances)]

    def skew(self, inductances: Sequence[float]) -> float:
        a = self.arrivals(inductances)
        return max(a) - min(a)


def _objective(arrivals: Sequence[float]) -> float:
    # skew plus spread: the std term keeps the 1-D searches unimodal when
    # the moving branch sits strictly inside the arrival range
    a = np.asarray(arrivals)
    return float(a.max() - a.min() + a.std())


def _golden(f, lo, hi, tol, max_evals):
    """Golden-section minimization on [lo, hi]; returns (x, fx, evals)."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    evals = 2
    while hi - lo > tol and evals < max_evals:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
        evals += 1
    return (c, fc, evals) if fc <= fd else (d, fd, evals)


def probe_dt(network, inductance_sets: Sequence[Sequence[float]]) -> float:
    """Largest dt valid for every tank in every candidate inductor set."""
    t_min = math.inf
    for ls in inductance_sets:
        for l, b in zip(ls, network.branches):
            t_min = min(t_min, 1.0 / resonant_frequency(RlcTank(l, b.tank.capacitance)))
    return t_min / DT_FRACTION


def refine_by_simulation(network, initial_l: Sequence[float],
                         config: Optional[SimConfig] = None, budget: int = 50,
                         span: float = 0.2, rel_tol: float = 1e-6,
                         probe: Optional[SkewProbe] = None,
                         sweep_tol: float = 1e-2) -> TuningResult:
    """Coordinate-wise golden-section search on branch inductances.

    The branch whose arrival is closest to the median (lowest index on a
    tie) stays fixed as the timing anchor; every other branch is searched
    in turn within +/- ``span`` of its current value. A move is accepted only
    if it lowers the objective, so the result is never worse than the start.
    ``budget`` caps simulator evaluations per branch; the search stops
    early once a full sweep lowers the objective by less than ``sweep_tol``
    of its value.
    """
    n = len(initial_l)
    if n != len(network.branches):
        raise ValidationError("one initial inductance per branch required")
    for l, b in zip(initial_l, network.branches):
        if classify_damping(RlcTank(l, b.tank.capacitance, b.tank.resistance)) \
                is not Damping.UNDERDAMPED:
            raise UnsupportedRegimeError(
                f"branch {b.name!r} is not underdamped at the initial inductance; "
                "reduce its series resistance")
    if probe is None:
        if config is not None:
            dt = config.dt
            rpu = config.pull_up_resistance
        else:
            dt = probe_dt(network, [[l * (1 - span) for l in initial_l]])
            rpu = 1.0
        probe = SkewProbe(network, dt, rpu)

    ls = [float(l) for l in initial_l]
    arr = probe.arrivals(ls)
    skew0 = max(arr) - min(arr)
    best = _objective(arr)
    history = [best]
    used = [0] * n
    converged = n == 1 or skew0 == 0.0
    if not converged:
        med = float(np.median(arr))
        anchor = min(range(n), key=lambda k: (abs(arr[k] - med), k))
        spans = [span] * n
        while True:
            moved = False
            exhausted = False
            sweep_start = best
            for i in range(n):
                if i == anchor:
                    continue
                left = budget - used[i]
                if left < 3:
                    exhausted = True
                    continue
                l0 = ls[i]

                def f(l, i=i):
                    if not probe.feasible(i, l):
                        return math.inf
                    trial = list(arr)
                    trial[i] = probe.arrival(i, l)
                    return _objective(trial)

                lo, hi = l0 * (1 - spans[i]), l0 * (1 + spans[i])
                x, fx, ev = _golden(f, lo, hi, rel_tol * l0, left)
                used[i] += ev
                if fx < best:
                    step = abs(x - l0) / l0
                    at_edge = min(x - lo, hi - x) < 2 * rel_tol * l0
                    ls[i] = x
                    arr[i] = probe.arrival(i, x)
                    best = fx
                    history.append(best)
                    # narrow the next bracket unless the minimum sat on its edge
                    if not at_edge:
                        spans[i] = min(spans[i], max(4 * step, 1e-3))
                    moved = moved or step > rel_tol
            # a sweep that barely improves means the arrivals sit at the
            # interpolation floor of the time grid
            if not moved or sweep_start - best <= sweep_tol * sweep_start:
                converged = not exhausted
                break
            if all(used[k] + 3 > budget for k in range(n) if k != anchor):
                break

    arr = probe.arrivals(ls)
    skew1 = max(arr) - min(arr)
    caps = [b.tank.capacitance for b in network.branches]
    mean_f = float(np.mean([resonant_frequency(RlcTank(l, c)) for l, c in zip(ls, caps)]))
    return TuningResult(inductances=ls, f_target=mean_f,
                        f_res_spread=f_res_spread(ls, caps, mean_f),
                        skew_before=skew0, skew_after=skew1, converged=converged,
                        history=history, evaluations=sum(used))


def tune_network(network, f_target: float, refine: bool = False, budget: int = 50,
                 span: float = 0.2, clock_freqs: Sequence[float] = (),
                 pull_up_resistance: float = 1.0,
                 offsets: Optional[Sequence[float]] = None) -> TuningResult:
    """Match (and optionally refine) branch inductors at ``f_target``.

    ``skew_before`` is measured with one shared inductor equal to the mean
    matched value; ``skew_after`` with the tuned set, on the same time grid.
    ``offsets`` adds a fixed per-branch delay to every measured arrival so
    refinement can also absorb downstream stage-delay differences.
    If the tuned set measures worse than the shared baseline (possible only
    when the spread is below the numerical floor) the baseline is kept.
    """
    for f in clock_freqs:
        if f > f_target * (1 + 1e-9):
            raise PreconditionError(
                f"clock frequency {f:.6g} Hz exceeds f_target {f_target:.6g} Hz; "
                "tuned pulses must fit inside the clock period")
    caps = [b.tank.capacitance for b in network.branches]
    matched = match_inductors(caps, f_target)
    baseline = untuned_baseline(caps, f_target)
    for l, b in zip(matched, network.branches):
        tank = RlcTank(l, b.tank.capacitance, b.tank.resistance)
        if classify_damping(tank) is not Damping.UNDERDAMPED:
            raise UnsupportedRegimeError(
                f"branch {b.name!r} is {classify_damping(tank).value} at f_target "
                f"(R={b.tank.resistance:g} ohm >= 2*sqrt(L/C)="
                f"{2 * math.sqrt(l / b.tank.capacitance):.4g} ohm); reduce its "
                "series resistance or lower f_target")
    lo_sets = [baseline, [l * (1 - span) for l in matched] if refine else matched]
    probe = SkewProbe(network, probe_dt(network, lo_sets), pull_up_resistance, offsets)
    skew_before = probe.skew(baseline)
    history: List[float] = []
    converged = True
    if refine:
        res = refine_by_simulation(network, matched, budget=budget, span=span, probe=probe)
        tuned, history, converged = res.inductances, res.history, res.converged
    else:
        tuned = matched
    skew_after = probe.skew(tuned)
    if skew_after > skew_before:
        tuned, skew_after = baseline, skew_before
    return TuningResult(inductances=list(tuned), f_target=f_target,
                        f_res_spread=f_res_spread(tuned, caps, f_target),
                        skew_before=skew_before, skew_after=skew_after,
                        converged=converged, history=history,
                        evaluations=probe.evaluations, baseline_inductance=baseline[0])


def pulse_starts(network, clock_freq: float, t_end: float) -> List[float]:
    """V_SR pulse start times for a Pclk rate of ``clock_freq``: the source
    clock runs at half that rate and every edge fires a pulse."""
    edges = clock_edges(0.5 * clock_freq, t_end)
    return [p[0] for p in pulse_train(edges, network.pulse_gen.t_d)]


def simulate_clocked(network, clock_freq: float, cycles: int = 3,
                     dt: Optional[float] = None, pull_up_resistance: float = 1.0,
                     record_stride: int = 1, allow_unsafe_dt: bool = False):
    """Full pulse-generator plus driver run for ``cycles`` Pclk periods.

    Returns ``(waveforms, ledger, starts)``.
    """
    period = 1.0 / clock_freq
    t_end = cycles * period
    if dt is None:
        dt = probe_dt(network, [[b.tank.inductance for b in network.branches]])
    starts = pulse_starts(network, clock_freq, t_end)
    cfg = SimConfig(dt=dt, t_end=t_end, vdd=network.vdd, record_stride=record_stride,
                    pull_up_resistance=pull_up_resistance, allow_unsafe_dt=allow_unsafe_dt)
    sched = psr_schedule(network.tanks, starts, t_end)
    wf, ledger = simulate(network, sched, cfg)
    return wf, ledger, starts


def clocked_arrivals(network, clock_freq: float, cycles: int = 3,
                     dt: Optional[float] = None,
                     pull_up_resistance: float = 1.0) -> List[float]:
    """Per-branch Pclk arrival after the last pulse of a ``cycles``-period run."""
    wf, _, starts = simulate_clocked(network, clock_freq, cycles=cycles, dt=dt,
                                     pull_up_resistance=pull_up_resistance)
    t_last = starts[-1]
    leaves = [wf[f"{b.name}.Pclk"] for b in network.branches]
    rep = measure_skew(leaves, 0.5 * network.vdd, window=(t_last, t_last + 1.0 / clock_freq))
    return [t for _, t in rep.arrivals]


def wideband_skew_profile(network, tuned_l: Sequence[float], clock_freqs: Sequence[float],
                          config: Optional[SimConfig] = None, cycles: int = 3,
                          ) -> List[Tuple[float, float]]:
    """Skew at each clock frequency using one fixed set of inductors.

    Skew is measured in the last simulated cycle, so any cycle-to-cycle
    drift of the tree shows up in the result. A clock equal to the lowest
    tank resonance is accepted; anything above it is refused.
    """
    net = network.with_inductances(tuned_l)
    f_min_res = min(resonant_frequency(t) for t in net.tanks)
    for f in clock_freqs:
        if f > f_min_res * (1 + 1e-9):
            raise PreconditionError(
                f"clock frequency {f:.6g} Hz exceeds the tuned resonant frequency "
                f"{f_min_res:.6g} Hz")
    dt = config.dt if config is not None else probe_dt(net, [tuned_l])
    rpu = config.pull_up_resistance if config is not None else 1.0
    out = []
    for f in clock_freqs:
        arr = clocked_arrivals(net, f, cycles=cycles, dt=dt, pull_up_resistance=rpu)
        out.append((f, max(arr) - min(arr)))
    return out
