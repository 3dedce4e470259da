import json
import math
import pathlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psrclock.errors import UnsupportedRegimeError, ValidationError
from psrclock.rlc import (INFINITE_Q, Damping, RlcTank, TankState, classify_damping,
                          free_swing, pulse_width, quality_factor, resonant_frequency,
                          segment_solution)

DATA = pathlib.Path(__file__).parent / "data"

inductances = st.floats(1e-12, 1e-6)
capacitances = st.floats(1e-15, 1e-9)
q_values = st.floats(0.05, 1e4)


def test_resonant_frequency_examples():
    assert resonant_frequency(RlcTank(1e-9, 1e-12)) == pytest.approx(5.0329e9, rel=1e-4)
    assert resonant_frequency(RlcTank(1.013e-9, 1e-12)) == pytest.approx(5.000e9, rel=2e-4)
    f1 = resonant_frequency(RlcTank(1e-9, 1e-12))
    assert resonant_frequency(RlcTank(4e-9, 1e-12)) == pytest.approx(f1 / 2, rel=1e-15)


def test_resonant_frequency_ignores_resistance():
    assert resonant_frequency(RlcTank(1e-9, 1e-12, 30.0)) == resonant_frequency(
        RlcTank(1e-9, 1e-12))


def test_quality_factor_examples():
    assert quality_factor(RlcTank(1e-9, 1e-12, 10.0)) == pytest.approx(math.sqrt(10), rel=1e-12)
    assert quality_factor(RlcTank(4e-9, 1e-12, 20.0)) == pytest.approx(3.1623, rel=1e-4)
    q1 = quality_factor(RlcTank(1e-9, 1e-12, 10.0))
    assert quality_factor(RlcTank(1e-9, 1e-12, 20.0)) == pytest.approx(q1 / 2, rel=1e-15)


def test_lossless_tank_has_infinite_q():
    assert quality_factor(RlcTank(1e-9, 1e-12, 0.0)) == INFINITE_Q


@pytest.mark.parametrize("kwargs,field", [
    (dict(inductance=0.0, capacitance=1e-12), "inductance"),
    (dict(inductance=1e-9, capacitance=-1e-12), "capacitance"),
    (dict(inductance=1e-9, capacitance=1e-12, resistance=-1.0), "resistance"),
])
def test_tank_rejects_invalid_values(kwargs, field):
    with pytest.raises(ValidationError, match=field):
        RlcTank(**kwargs)


def test_free_swing_examples():
    inf = free_swing(0.8, INFINITE_Q)
    assert (inf.v_oh, inf.v_ol, inf.swing) == (0.8, 0.0, 0.8)
    s = free_swing(0.8, math.pi)
    assert s.v_oh == pytest.approx(0.54716, abs=1e-5)
    assert s.v_ol == pytest.approx(0.15739, abs=1e-5)
    assert s.swing == pytest.approx(0.38977, abs=1e-5)
    # 0.4 * (e^-pi + e^-pi/2)
    q1 = free_swing(0.8, 1.0)
    assert q1.swing == pytest.approx(0.4 * (math.exp(-math.pi) + math.exp(-math.pi / 2)),
                                     rel=1e-14)
    assert q1.swing == pytest.approx(0.10046, abs=5e-5)


def test_free_swing_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        free_swing(0.0, 1.0)
    with pytest.raises(ValidationError):
        free_swing(0.8, 0.0)


def test_free_swing_high_q_limit():
    assert abs(free_swing(0.8, 1e6).swing - 0.8) <= 1e-5 * 0.8


@given(q_values, q_values)
def test_free_swing_monotone_in_q(q1, q2):
    if q1 == q2:
        return
    lo, hi = sorted((q1, q2))
    a, b = free_swing(0.8, lo), free_swing(0.8, hi)
    assert b.swing >= a.swing
    assert b.v_ol <= a.v_ol
    if hi > lo * (1 + 1e-9):
        assert b.swing > a.swing


@given(st.floats(0.1, 5.0), q_values)
def test_free_swing_bounds(vdd, q):
    s = free_swing(vdd, q)
    assert 0 <= s.v_ol <= s.v_oh <= vdd
    assert s.swing == s.v_oh - s.v_ol


def test_pulse_width_examples():
    assert pulse_width(1e-9, 1e-12) == pytest.approx(99.346e-12, rel=1e-5)
    assert pulse_width(1e-9, 4e-12) == pytest.approx(2 * pulse_width(1e-9, 1e-12), rel=1e-15)
    assert pulse_width(1.013e-9, 1e-12) == pytest.approx(100.0e-12, rel=2e-4)


@given(inductances, capacitances)
def test_half_period_law(l, c):
    assert pulse_width(l, c) * 2 * resonant_frequency(RlcTank(l, c)) == pytest.approx(1, rel=1e-12)


@given(inductances, capacitances, st.floats(0.01, 100.0), st.floats(0.1, 10.0))
def test_scale_invariance(l, c, r, k):
    a = RlcTank(l, c, r)
    b = RlcTank(l * k, c / k, r)
    assert resonant_frequency(b) == pytest.approx(resonant_frequency(a), rel=1e-12)
    assert quality_factor(b) == pytest.approx(k * quality_factor(a), rel=1e-12)


def test_classify_damping_examples():
    assert classify_damping(RlcTank(1e-9, 1e-12, 0.0)) is Damping.UNDERDAMPED
    r_crit = 2 * math.sqrt(1e-9 / 1e-12)
    assert abs(r_crit - 63.246) < 1e-3
    assert classify_damping(RlcTank(1e-9, 1e-12, r_crit)) is Damping.CRITICAL
    assert classify_damping(RlcTank(1e-9, 1e-12, 100.0)) is Damping.OVERDAMPED
    assert classify_damping(RlcTank(1e-9, 1e-12, 63.0)) is Damping.UNDERDAMPED


def test_metrics_consistent():
    m = RlcTank(1e-9, 1e-12, 10.0).metrics()
    assert m.t_res * m.f_res == pytest.approx(1.0, rel=1e-15)
    assert m.damping is Damping.UNDERDAMPED
    assert m.q == pytest.approx(math.sqrt(10))


def test_segment_solution_identity_at_zero():
    tank = RlcTank(1e-9, 1e-12, 10.0)
    s = TankState(0.3, 1e-3)
    assert segment_solution(tank, s, 0.4, 0.0) == s


def test_segment_solution_lossless_quarter_period():
    tank = RlcTank(1e-9, 1e-12, 0.0)
    t_res = 1 / resonant_frequency(tank)
    s = segment_solution(tank, TankState(0.8, 0.0), 0.0, t_res / 4)
    assert abs(s.v_c) < 1e-12
    s = segment_solution(tank, TankState(0.8, 0.0), 0.0, t_res / 2)
    assert s.v_c == pytest.approx(-0.8, rel=1e-12)


def test_segment_solution_matches_brute_force_oracle():
    data = json.loads((DATA / "segment_oracle.json").read_text())
    tk = data["tank"]
    tank = RlcTank(tk["inductance"], tk["capacitance"], tk["resistance"])
    init = TankState(*data["initial"])
    scale_v = max(abs(s["v_c"]) for s in data["samples"])
    scale_i = max(abs(s["i_l"]) for s in data["samples"])
    assert len(data["samples"]) == 64
    for s in data["samples"]:
        got = segment_solution(tank, init, data["drive"], s["t"])
        assert abs(got.v_c - s["v_c"]) <= 1e-6 * scale_v
        assert abs(got.i_l - s["i_l"]) <= 1e-6 * scale_i


def test_segment_solution_lossless_energy_conserved():
    tank = RlcTank(1e-9, 1e-12, 0.0)
    init = TankState(0.8, 2e-3)
    e0 = init.energy(tank)
    t_res = 1 / resonant_frequency(tank)
    for k in range(1, 201):
        s = segment_solution(tank, init, 0.0, k * 10 * t_res / 200)
        assert abs(s.energy(tank) - e0) / e0 < 1e-9


def test_segment_solution_rejects_non_underdamped():
    with pytest.raises(UnsupportedRegimeError):
        segment_solution(RlcTank(1e-9, 1e-12, 100.0), TankState(0.8, 0.0), 0.4, 1e-12)
    with pytest.raises(UnsupportedRegimeError):
        segment_solution(RlcTank(1e-9, 1e-12, 2 * math.sqrt(1e3)), TankState(0.8, 0.0), 0.4, 1e-12)


@settings(max_examples=50)
@given(st.floats(0.0, 30.0), st.floats(-1.0, 1.0), st.floats(-5e-3, 5e-3), st.floats(0, 1e-9),
       st.floats(0, 1e-9))
def test_segment_solution_composes(r, v0, i0, t1, t2):
    tank = RlcTank(1e-9, 1e-12, r)
    s0 = TankState(v0, i0)
    direct = segment_solution(tank, s0, 0.4, t1 + t2)
    split = segment_solution(tank, segment_solution(tank, s0, 0.4, t1), 0.4, t2)
    assert split.v_c == pytest.approx(direct.v_c, abs=1e-9)
    assert split.i_l == pytest.approx(direct.i_l, abs=1e-11)
