import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psrclock.analysis import (Architecture, calibrate_sensitivity, compare_architectures,
                               deviate_std, histogram, local_stage_delays, measure_skew,
                               run_monte_carlo, sample_t_cq, tree_power)
from psrclock.calibration import UnitCaps
from psrclock.elements import BoosterSpec, FlipFlopKind, PulseGenSpec, mc_reference
from psrclock.engine import Waveform
from psrclock.errors import PreconditionError, RangeError
from psrclock.netlist import BranchSpec, Distribution, TreeSpec, VariationSpec, elaborate
from psrclock.rlc import free_swing, quality_factor

K = FlipFlopKind
FREQS = [1e9, 2e9, 3e9, 4e9, 5e9]


def ramp(node, offset, t1=100e-12, n=201):
    t = np.linspace(0, 300e-12, n)
    return Waveform(node, "voltage", t, np.clip(0.8 * (t - offset) / t1, 0, 0.8))


def one_node(c=1e-12, r=1.0, l=1e-9):
    pg = PulseGenSpec(1.0132e-9, 1e-12, BoosterSpec(0.5e-9, 2e-12))
    spec = TreeSpec("t", 0.8, 0.5e9, pg, (BranchSpec("b", l, r, explicit_cap=c),))
    return elaborate(spec, UnitCaps(1e-15, 1e-15, {}))


# -- skew ----------------------------------------------------------------------------

def test_measure_skew_examples():
    same = [ramp(f"n{i}", 10e-12) for i in range(4)]
    assert measure_skew(same, 0.4).skew == 0.0
    rep = measure_skew([ramp("a", 10e-12), ramp("b", 17e-12)], 0.4)
    assert rep.skew == pytest.approx(7e-12, rel=1e-9)
    assert rep.skew == max(t for _, t in rep.arrivals) - min(t for _, t in rep.arrivals)
    assert rep.threshold == 0.4


def test_measure_skew_names_silent_leaf():
    flat = Waveform("dead", "voltage", np.linspace(0, 1e-9, 11), np.zeros(11))
    with pytest.raises(PreconditionError, match="dead"):
        measure_skew([ramp("a", 0.0), flat], 0.4)


def test_measure_skew_window():
    w = ramp("a", 10e-12)
    with pytest.raises(PreconditionError):
        measure_skew([w], 0.4, window=(200e-12, 300e-12))


@given(st.lists(st.floats(0, 150e-12), min_size=1, max_size=8))
def test_skew_nonnegative(offsets):
    rep = measure_skew([ramp(f"n{i}", o) for i, o in enumerate(offsets)], 0.4)
    assert rep.skew >= 0
    if len(offsets) == 1:
        assert rep.skew == 0


# -- power ---------------------------------------------------------------------------

def test_conventional_driver_power(ff_models, calibration):
    p = tree_power(one_node(), 1e9, Architecture.CONVENTIONAL, ff_models, calibration)
    assert p.driver_power == pytest.approx(0.64e-3, rel=1e-12)
    assert p.recycled_fraction == 0.0


def test_lossless_tank_recycles_everything(ff_models, calibration):
    p = tree_power(one_node(r=0.0), 1e9, Architecture.RESONANT, ff_models, calibration)
    assert p.driver_power == 0.0
    assert p.recycled_fraction == 1.0


def test_low_q_saves_nothing(ff_models, calibration):
    net = one_node(r=1e6)
    conv = tree_power(net, 2e9, Architecture.CONVENTIONAL, ff_models, calibration)
    res = tree_power(net, 2e9, Architecture.RESONANT, ff_models, calibration)
    assert res.driver_power == pytest.approx(conv.driver_power, rel=1e-3)


@given(st.floats(1e-3, 1e4))
def test_resonant_driver_never_exceeds_conventional(r):
    from psrclock.calibration import default_calibration
    from psrclock.elements import load_ff_table
    cal, models = default_calibration(), load_ff_table()
    net = one_node(r=r)
    conv = tree_power(net, 3e9, Architecture.CONVENTIONAL, models, cal)
    res = tree_power(net, 3e9, Architecture.RESONANT, models, cal)
    assert res.driver_power <= conv.driver_power
    q = quality_factor(net.tanks[0])
    assert res.recycled_fraction == pytest.approx(free_swing(0.8, q).swing / 0.8, rel=1e-12)


@pytest.mark.parametrize("f", [0.5e9, 6e9])
def test_power_out_of_range(ff_models, calibration, spread8_net, f):
    with pytest.raises(RangeError):
        tree_power(spread8_net, f, Architecture.RESONANT, ff_models, calibration)


@pytest.mark.parametrize("arch", list(Architecture))
def test_power_parts_and_monotonicity(ff_models, calibration, spread8_net, arch):
    totals = []
    for f in FREQS:
        p = tree_power(spread8_net, f, arch, ff_models, calibration)
        assert p.total == pytest.approx(p.ff_power + p.driver_power + p.buffer_gater_power
                                        + p.static_power, rel=1e-15)
        assert 0 <= p.recycled_fraction < 1
        totals.append(p.total)
    assert all(b > a for a, b in zip(totals, totals[1:]))


def test_local_stage_delays_follow_load(spread8_net, calibration):
    d = local_stage_delays(spread8_net, calibration)
    caps = [b.tank.capacitance for b in spread8_net.branches]
    assert np.argsort(d).tolist() == np.argsort(caps).tolist()


@pytest.fixture(scope="module")
def comparison(spread8_spec, calibration, ff_models):
    with pytest.warns(UserWarning):
        return compare_architectures(spread8_spec, FREQS, [K.PRFF, K.TSPCFF, K.FF13T],
                                     calibration, ff_models)


def test_compare_layout(comparison):
    assert len(comparison) == 5 * 4
    assert [r.frequency for r in comparison[:4]] == [1e9] * 4
    assert comparison[0].architecture is Architecture.CONVENTIONAL


def test_compare_power_ordering_and_savings(comparison):
    for f in FREQS:
        rows = {(r.architecture, r.ff_kind): r for r in comparison if r.frequency == f}
        conv = rows[(Architecture.CONVENTIONAL, K.PSFF)]
        res = {k: rows[(Architecture.RESONANT, k)] for k in (K.PRFF, K.TSPCFF, K.FF13T)}
        assert res[K.PRFF].power.total < res[K.TSPCFF].power.total \
            < res[K.FF13T].power.total < conv.power.total
        for r in res.values():
            assert r.savings == pytest.approx(
                (conv.power.total - r.power.total) / conv.power.total, rel=1e-12)
            assert r.savings > 0


def test_compare_skew_below_resonance(comparison):
    conv = comparison[0].skew
    for r in comparison:
        if r.architecture is Architecture.RESONANT and r.frequency < 5e9:
            assert r.skew <= 0.1 * conv


def test_compare_rejects_out_of_range(spread8_spec, calibration, ff_models):
    with pytest.raises(RangeError):
        compare_architectures(spread8_spec, [6e9], [K.PRFF], calibration, ff_models)


# -- Monte-Carlo -------------------------------------------------------------------

def var(bound=0.1, samples=5000, seed=42, dist=Distribution.GAUSSIAN_TRUNCATED):
    return VariationSpec(bound, dist, samples, seed)


def test_zero_variation(ff_models):
    s = run_monte_carlo(ff_models[K.PRFF], var(0.0, 100))
    assert s.stddev == 0.0
    assert s.mean_t_cq == pytest.approx(ff_models[K.PRFF].t_cq, rel=1e-15)
    assert sum(n for _, n in s.histogram) == 100


def test_prff_mean_near_reported(ff_models):
    ref = mc_reference(K.PRFF)
    s = run_monte_carlo(ff_models[K.PRFF], var())
    assert abs(s.mean_t_cq - ref["mean_t_cq"]) <= 0.01 * ref["mean_t_cq"]
    assert sum(n for _, n in s.histogram) == 5000


@pytest.mark.parametrize("dist", list(Distribution))
def test_std_scales_with_bound(ff_models, dist):
    a = run_monte_carlo(ff_models[K.PRFF], var(0.05, dist=dist))
    b = run_monte_carlo(ff_models[K.PRFF], var(0.10, dist=dist))
    assert b.stddev / a.stddev == pytest.approx(2.0, rel=0.05)


def test_determinism(ff_models):
    assert run_monte_carlo(ff_models[K.TSPCFF], var(seed=7)) == \
        run_monte_carlo(ff_models[K.TSPCFF], var(seed=7))
    assert run_monte_carlo(ff_models[K.TSPCFF], var(seed=7)) != \
        run_monte_carlo(ff_models[K.TSPCFF], var(seed=8))


def test_samples_independent_of_count(ff_models):
    # sample k depends only on (seed, k)
    short = sample_t_cq(ff_models[K.PRFF], var(samples=10))
    long = sample_t_cq(ff_models[K.PRFF], var(samples=100))
    assert np.array_equal(short, long[:10])


@pytest.mark.parametrize("dist", list(Distribution))
def test_deviates_bounded(ff_models, dist):
    m = ff_models[K.PRFF]
    t = sample_t_cq(m, var(0.1, 2000, dist=dist))
    assert np.all(np.abs(t / m.t_cq - 1) <= 0.1 + 1e-12)
    assert np.std(t / m.t_cq - 1) / 0.1 == pytest.approx(deviate_std(dist), rel=0.05)


def test_calibrated_sensitivity_hits_target(ff_models):
    ref = mc_reference(K.PRFF)
    v = var()
    s = calibrate_sensitivity(ff_models[K.PRFF], v, ref["std_t_cq"])
    assert 0 < s < 1
    out = run_monte_carlo(ff_models[K.PRFF], v, s)
    assert out.stddev == pytest.approx(ref["std_t_cq"], rel=0.05)
    with pytest.raises(PreconditionError):
        calibrate_sensitivity(ff_models[K.PRFF], var(0.0), 1e-13)


def test_histogram_examples():
    h, w = histogram([3.0] * 5, 4)
    assert [n for _, n in h] == [5, 0, 0, 0] and w == 0.0
    h, w = histogram([1, 2, 3, 4], 2)
    assert [n for _, n in h] == [2, 2]
    assert [e for e, _ in h] == [1.0, 2.5]
    with pytest.raises(PreconditionError):
        histogram([], 3)
    with pytest.raises(PreconditionError):
        histogram([1.0], 0)


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=200), st.integers(1, 60))
def test_histogram_conserves_count(xs, bins):
    h, _ = histogram(xs, bins)
    assert len(h) == bins
    assert sum(n for _, n in h) == len(xs)


def significant_turns(counts, k=3.0):
    """Direction changes that exceed k sigma of Poisson noise."""
    turns, direction, extreme = 0, 0, counts[0]
    for c in counts[1:]:
        tol = k * math.sqrt(max(extreme, 1))
        if direction >= 0:
            if c > extreme:
                extreme, direction = c, 1
            elif extreme - c > tol:
                turns += direction == 1
                extreme, direction = c, -1
        else:
            if c < extreme:
                extreme = c
            elif c - extreme > tol:
                turns += 1
                extreme, direction = c, 1
    return turns


@pytest.mark.parametrize("seed", range(5))
def test_gaussian_histogram_unimodal(ff_models, seed):
    s = run_monte_carlo(ff_models[K.PRFF], var(seed=seed), bins=50)
    counts = [n for _, n in s.histogram]
    assert significant_turns(counts) <= 3
    peak = int(np.argmax(counts))
    assert 10 < peak < 40
