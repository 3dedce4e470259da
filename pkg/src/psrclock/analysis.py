"""Tree power, architecture comparison, and Monte-Carlo timing studies.

Absolute power numbers here are calibrated estimates. What the model is
built to get right is the comparison: the conventional tree pays C*vdd^2
per node per cycle, while the resonant tree only tops up the part of the
swing the tank could not recover on its own.
"""

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .calibration import Calibration
from .elements import (FlipFlopKind, FlipFlopTimingModel, ff_dynamic_power, stage_delay,
                       warn_pulse_width)
from .errors import PreconditionError, RangeError
from .netlist import Distribution, SimNetwork, TreeSpec, VariationSpec, elaborate
from .rlc import free_swing, quality_factor
from .skew import SkewReport, measure_skew  # noqa: F401  (re-exported)
from .tuning import clocked_arrivals, tune_network

# characterized frequency range of the power tables
F_MIN, F_MAX = 1e9, 5e9
# truncated-gaussian sigma as a fraction of the variation bound
GAUSS_SIGMAS = 3.0


class Architecture(enum.Enum):
    CONVENTIONAL = "conventional"
    RESONANT = "resonant"


@dataclass(frozen=True)
class PowerReport:
    frequency: float
    architecture: Architecture
    ff_power: float
    driver_power: float
    buffer_gater_power: float
    static_power: float
    recycled_fraction: float

    @property
    def total(self) -> float:
        return self.ff_power + self.driver_power + self.buffer_gater_power + self.static_power


@dataclass(frozen=True)
class McSummary:
    kind: str
    samples: int
    mean_t_cq: float
    stddev: float
    histogram: Tuple[Tuple[float, int], ...]
    bin_width: float
    seed: int
    length_variation: float
    distribution: str
    sensitivity: float


@dataclass(frozen=True)
class ComparisonRow:
    frequency: float
    architecture: Architecture
    ff_kind: FlipFlopKind
    power: PowerReport
    skew: float
    savings: float  # fraction of the conventional total at this frequency
    skew_reduction: float


# -- power ----------------------------------------------------------------

def _check_freq(f: float) -> None:
    if not (F_MIN * (1 - 1e-12) <= f <= F_MAX * (1 + 1e-12)):
        raise RangeError(f"frequency {f:.6g} Hz outside the characterized range "
                         f"{F_MIN:.0e}..{F_MAX:.0e} Hz")


def tree_power(network: SimNetwork, f: float, arch: Architecture,
               ff_models: Dict[FlipFlopKind, FlipFlopTimingModel],
               calibration: Calibration) -> PowerReport:
    """Clock-tree power at frequency ``f`` for one architecture.

    Driver energy per cycle is C*vdd^2 for the conventional tree and
    C*vdd*(vdd - swing) for the resonant one, with swing from the tank Q.
    """
    _check_freq(f)
    arch = Architecture(arch)
    vdd = network.vdd
    cal = calibration.power
    ff_p = static_p = 0.0
    gaters = buffers = 0
    c_total = recovered = 0.0
    for br in network.branches:
        for st in br.stages:
            if st.kind == "gater":
                gaters += st.count
            elif st.kind == "buffer":
                buffers += st.count
            else:
                model = ff_models[FlipFlopKind(st.kind)]
                ff_p += st.count * ff_dynamic_power(model, f) * cal.activity_scale
                static_p += st.count * model.static_power
        c = br.tank.capacitance
        c_total += c
        if arch is Architecture.RESONANT:
            recovered += c * free_swing(vdd, quality_factor(br.tank)).swing
    recycled = recovered / (c_total * vdd) if arch is Architecture.RESONANT else 0.0
    driver = c_total * vdd * vdd * f * (1.0 - recycled)
    bg = (gaters * cal.gater_energy + buffers * cal.buffer_energy) * f
    return PowerReport(frequency=f, architecture=arch, ff_power=ff_p, driver_power=driver,
                       buffer_gater_power=bg, static_power=static_p,
                       recycled_fraction=recycled)


# -- stage delays and skew --------------------------------------------------

def local_stage_delays(network: SimNetwork, calibration: Calibration) -> List[float]:
    """Per-branch delay through the gater and buffer levels below the driver.

    Each level drives an equal share of the load beneath it.
    """
    out = []
    for br in network.branches:
        loads = {st.kind: st for st in br.stages}
        gate = loads.get("gater")
        buf = loads.get("buffer")
        ff_load = sum(st.load for st in br.stages if st.kind not in ("gater", "buffer"))
        d = 0.0
        if gate is not None:
            below = ff_load + (buf.load if buf is not None else 0.0)
            d += stage_delay("gater", below / gate.count, calibration.delays)
        if buf is not None:
            d += stage_delay("buffer", ff_load / buf.count, calibration.delays)
        out.append(d)
    return out


def conventional_arrivals(network: SimNetwork, calibration: Calibration) -> List[float]:
    """Leaf arrival per branch of a buffered tree: branch driver (a buffer
    loaded by the whole branch) plus the local levels."""
    local = local_stage_delays(network, calibration)
    return [stage_delay("buffer", br.tank.capacitance, calibration.delays) + d
            for br, d in zip(network.branches, local)]


def _spread(values: Sequence[float]) -> float:
    return max(values) - min(values)


def compare_architectures(spec: TreeSpec, freqs: Sequence[float],
                          ff_kinds: Sequence[FlipFlopKind],
                          calibration: Calibration,
                          ff_models: Dict[FlipFlopKind, FlipFlopTimingModel],
                          f_target: Optional[float] = None, refine: bool = True,
                          cycles: int = 3) -> List[ComparisonRow]:
    """Conventional PSFF tree against a tuned resonant tree per FF kind.

    Returns one conventional row plus one resonant row per kind for every
    frequency, in (frequency, architecture, kind) order.
    """
    freqs = list(freqs)
    for f in freqs:
        _check_freq(f)
    f_target = f_target if f_target is not None else F_MAX
    conv_net = elaborate(spec.with_ff_kind(FlipFlopKind.PSFF), calibration.unit_caps)
    conv_skew = _spread(conventional_arrivals(conv_net, calibration))

    resonant = {}
    for kind in ff_kinds:
        net = elaborate(spec.with_ff_kind(kind), calibration.unit_caps)
        offsets = local_stage_delays(net, calibration)
        warn_pulse_width(spec.pulse_gen.t_d, ff_models[kind])
        tuned = tune_network(net, f_target, refine=refine, clock_freqs=freqs,
                             pull_up_resistance=calibration.pull_up_resistance,
                             offsets=offsets)
        tnet = net.with_inductances(tuned.inductances)
        skews = {}
        for f in freqs:
            arr = clocked_arrivals(tnet, f, cycles=cycles,
                                   pull_up_resistance=calibration.pull_up_resistance)
            skews[f] = _spread([a + o for a, o in zip(arr, offsets)])
        resonant[kind] = (tnet, skews)

    rows = []
    for f in freqs:
        conv = tree_power(conv_net, f, Architecture.CONVENTIONAL, ff_models, calibration)
        rows.append(ComparisonRow(f, Architecture.CONVENTIONAL, FlipFlopKind.PSFF, conv,
                                  conv_skew, 0.0, 0.0))
        for kind in ff_kinds:
            tnet, skews = resonant[kind]
            rp = tree_power(tnet, f, Architecture.RESONANT, ff_models, calibration)
            rows.append(ComparisonRow(
                f, Architecture.RESONANT, kind, rp, skews[f],
                savings=(conv.total - rp.total) / conv.total,
                skew_reduction=(conv_skew - skews[f]) / conv_skew if conv_skew else 0.0))
    return rows


COMPARE_HEADER = ["frequency_hz", "architecture", "ff_kind", "ff_power_w", "driver_power_w",
                  "buffer_gater_power_w", "static_power_w", "total_power_w",
                  "recycled_fraction", "skew_s", "power_savings_pct", "skew_reduction_pct"]


def comparison_records(rows: Sequence[ComparisonRow]) -> List[dict]:
    return [{
        "frequency_hz": r.frequency, "architecture": r.architecture.value,
        "ff_kind": r.ff_kind.value, "ff_power_w": r.power.ff_power,
        "driver_power_w": r.power.driver_power,
        "buffer_gater_power_w": r.power.buffer_gater_power,
        "static_power_w": r.power.static_power, "total_power_w": r.power.total,
        "recycled_fraction": r.power.recycled_fraction, "skew_s": r.skew,
        "power_savings_pct": 100.0 * r.savings,
        "skew_reduction_pct": 100.0 * r.skew_reduction,
    } for r in rows]


def write_records_csv(records: Sequence[dict], header: Sequence[str], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        writer.writerow([repr(v) if isinstance(v, float) else v
                         for v in (rec[k] for k in header)])


# -- Monte-Carlo ---------------------------------------------------------

def _standard_deviate(rng: np.random.Generator, distribution: Distribution) -> float:
    """A deviate in [-1, 1] in units of the variation bound."""
    if distribution is Distribution.UNIFORM:
        return 2.0 * rng.random() - 1.0
    while True:
        z = rng.standard_normal()
        if abs(z) <= GAUSS_SIGMAS:
            return z / GAUSS_SIGMAS


def deviate_std(distribution: Distribution) -> float:
    """Standard deviation of the unit-bound deviate."""
    if distribution is Distribution.UNIFORM:
        return 1.0 / math.sqrt(3.0)
    a = GAUSS_SIGMAS
    pdf = math.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
    mass = math.erf(a / math.sqrt(2))
    return math.sqrt(1.0 - 2 * a * pdf / mass) / a


def calibrate_sensitivity(model: FlipFlopTimingModel, variation: VariationSpec,
                          target_std: float) -> float:
    """Sensitivity that makes the t_cq spread match ``target_std``."""
    sigma = variation.length_variation * deviate_std(variation.distribution)
    if sigma == 0:
        raise PreconditionError("cannot calibrate against zero variation")
    return target_std / (model.t_cq * sigma)


def sample_t_cq(model: FlipFlopTimingModel, variation: VariationSpec,
                sensitivity: float = 1.0) -> np.ndarray:
    """t_cq per sample; sample k draws from its own stream seeded by
    (seed, k), so results do not depend on evaluation order."""
    out = np.empty(variation.samples)
    for k in range(variation.samples):
        rng = np.random.default_rng([variation.seed, k])
        delta = variation.length_variation * _standard_deviate(rng, variation.distribution)
        out[k] = model.t_cq * (1.0 + sensitivity * delta)
    return out


def histogram(samples: Sequence[float], bins: int) -> Tuple[List[Tuple[float, int]], float]:
    """Uniform bins over [min, max]; returns ``([(lower_edge, count)], width)``.

    Bins are right-open except the last. Identical samples land in one bin.
    """
    if bins < 1:
        raise PreconditionError("bins must be >= 1")
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise PreconditionError("no samples")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return [(lo, int(x.size))] + [(lo, 0)] * (bins - 1), 0.0
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    return [(float(e), int(c)) for e, c in zip(edges[:-1], counts)], float(edges[1] - edges[0])


def run_monte_carlo(model: FlipFlopTimingModel, variation: VariationSpec,
                    sensitivity: float = 1.0, bins: int = 50) -> McSummary:
    t = sample_t_cq(model, variation, sensitivity)
    hist, width = histogram(t, bins)
    # spread taken about the nominal so identical samples give exactly zero
    dev = t - model.t_cq
    return McSummary(kind=model.kind.value, samples=int(t.size), mean_t_cq=float(t.mean()),
                     stddev=float(dev.std()), histogram=tuple(hist), bin_width=width,
                     seed=variation.seed, length_variation=variation.length_variation,
                     distribution=variation.distribution.value, sensitivity=sensitivity)


MC_HEADER = ["kind", "samples", "seed", "length_variation", "distribution", "sensitivity",
             "mean_t_cq_s", "stddev_s"]
HIST_HEADER = ["bin_lower_s", "bin_width_s", "count"]


def mc_records(summary: McSummary) -> Tuple[List[dict], List[dict]]:
    summary_rec = [{"kind": summary.kind, "samples": summary.samples, "seed": summary.seed,
                    "length_variation": summary.length_variation,
                    "distribution": summary.distribution,
                    "sensitivity": summary.sensitivity, "mean_t_cq_s": summary.mean_t_cq,
                    "stddev_s": summary.stddev}]
    hist_rec = [{"bin_lower_s": lo, "bin_width_s": summary.bin_width, "count": n}
                for lo, n in summary.histogram]
    return summary_rec, hist_rec
