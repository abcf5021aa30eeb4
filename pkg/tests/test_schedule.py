"""Parameter schedule: exact rationals, certified inequalities, drift."""

import math
from fractions import Fraction

import pytest

from wermerlab.backend import active as B
from wermerlab.errors import GaugeTooWeak, InvalidSchedule, NotOrdinary
from wermerlab.gauges import GaugeFunction
from wermerlab.schedule import (
    build_schedule,
    capacity_drift,
    choose_m,
    recheck_estimates,
    schedule_records,
    validate_schedule,
    verify_m_choice,
)

R10 = Fraction(1, 10)


def test_default_tower_rationals_are_exact():
    s = build_schedule(R10, [1, 4], 2)
    assert s.delta_frac == (Fraction(1, 2), Fraction(1, 160), Fraction(1, 16384000))
    assert s.eps_frac == (None, Fraction(1, 8), Fraction(1, 819200))
    assert not s.corrupted


def test_recursion_identities_hold_exactly():
    s = build_schedule(R10, [1, 4, 1, 4], 4)
    for n in range(1, 5):
        d_prev = s.delta_frac[n - 1]
        m = s.m_seq[n - 1]
        assert s.eps_frac[n] == d_prev**2 / (2 * m**2)
        assert s.delta_frac[n] == d_prev**2 * R10 / (4 * m**2)


def test_separation_estimates_hold_to_depth_six():
    for m_seq in ([1] * 6, [1, 4, 1, 4, 1, 4]):
        s = build_schedule(R10, m_seq, 6)
        recheck_estimates(s)
        for n in range(1, 7):
            d_prev, m = s.delta_frac[n - 1], s.m_seq[n - 1]
            assert s.delta_frac[n] + s.eps_frac[n] < d_prev**2 / m**2
            assert s.delta_frac[n] < s.eps_frac[n] * R10


def test_log_intervals_bracket_exact_logs():
    s = build_schedule(R10, [1, 4], 2)
    for n in range(3):
        lo, hi = s.log_delta[n]
        lo_fr, hi_fr = B.to_fraction(lo), B.to_fraction(hi)
        d = s.delta_frac[n]
        # e^lo <= delta <= e^hi, checked in float with slack far above
        # the 160-bit interval width
        assert math.exp(float(lo_fr)) <= float(d) * (1 + 1e-12)
        assert float(d) * (1 - 1e-12) <= math.exp(float(hi_fr))
        assert lo_fr <= hi_fr


def test_corrupted_delta_fails_est1_with_frozen_margin():
    s = build_schedule(R10, [1], 2, check=False).with_corrupted_delta(2, 10**6)
    assert s.corrupted
    with pytest.raises(InvalidSchedule) as info:
        recheck_estimates(s)
    exc = info.value
    assert exc.which == "est1"
    assert exc.n == 2
    assert exc.measured == pytest.approx(0.97658203124999998, rel=1e-12)
    assert exc.bound == pytest.approx(3.9062500000000001e-05, rel=1e-12)


def test_corruption_does_not_mutate_original():
    s = build_schedule(R10, [1], 2)
    s.with_corrupted_delta(2, 10**6)
    assert not s.corrupted
    recheck_estimates(s)


def test_validate_schedule_report():
    rep = validate_schedule(build_schedule(R10, [1, 4], 2))
    assert rep.tail_converges
    assert rep.super_exponential_m
    assert rep.scales_separate == (True, True)
    assert rep.tail_bound == pytest.approx(math.log(10), abs=1e-12)
    assert rep.increments[0] == pytest.approx(math.log(10) / 2, abs=1e-12)
    assert rep.increments[1] == pytest.approx(math.log(10) / 4, abs=1e-12)
    assert rep.tail_sums[-1] == pytest.approx(sum(rep.increments), abs=1e-12)


def test_capacity_drift_frozen_values():
    s = build_schedule(R10, [1] * 12, 12)
    assert capacity_drift(s, 1) == pytest.approx(-1.3862943611198906, abs=1e-12)
    assert capacity_drift(s, 2) == pytest.approx(-1.7328679513998633, abs=1e-12)
    assert capacity_drift(s, 3) == pytest.approx(-1.9061547465398496, abs=1e-12)
    assert capacity_drift(s, 12) == pytest.approx(-2.0791030909080783, abs=1e-12)
    # limit is -log(8) = -2.0794...; depth 12 sits within 4e-4 of it
    assert abs(capacity_drift(s, 12) + math.log(8)) < 4e-4


def test_capacity_drift_requires_ordinary_m():
    with pytest.raises(NotOrdinary):
        capacity_drift(build_schedule(R10, [1, 4], 2), 2)


def test_choose_m_log_gauge_depth_two():
    theta = GaugeFunction.abs_log()
    m = choose_m(theta, 2, 3, 2)
    assert [v.bit_length() for v in m] == [1025, 524289]
    assert verify_m_choice(theta, 2, 3, m)


def test_choose_m_squared_log_gauge_depth_three():
    theta = GaugeFunction.power_log(0, 2)
    m = choose_m(theta, 2, 3, 3)
    assert [v.bit_length() for v in m] == [65, 1025, 32769]
    assert verify_m_choice(theta, 2, 3, m)


def test_choose_m_rejects_weak_gauges():
    with pytest.raises(GaugeTooWeak):
        choose_m(GaugeFunction.constant(5.0), 2, 3, 2)
    with pytest.raises(GaugeTooWeak):
        choose_m(GaugeFunction.abs_log(), 1, 3, 3)


def test_schedule_records_shape():
    rows = schedule_records(build_schedule(R10, [1, 4], 2))
    assert len(rows) == 3
    assert rows[0]["r"] == "" and rows[0]["m"] == ""
    assert rows[1]["m"] == "1" and rows[2]["m"] == "4"
    assert rows[1]["r"] == "1/10"
    assert float(rows[1]["log10_delta"]) == pytest.approx(-math.log10(160), abs=1e-12)
    assert float(rows[2]["log10_delta"]) == pytest.approx(-math.log10(16384000), abs=1e-12)
    assert rows[0]["log10_eps"] == ""


def test_build_schedule_rejects_bad_input():
    with pytest.raises(ValueError):
        build_schedule(Fraction(1, 5), [1], 1)  # r outside (0, 1/10]
    with pytest.raises(ValueError):
        build_schedule(R10, [0], 1)
    with pytest.raises(ValueError):
        build_schedule([R10, Fraction(1, 5)], [1, 1], 2)  # increasing r
    with pytest.raises(ValueError):
        build_schedule(R10, [1], -1)


def test_short_m_sequence_pads_with_ones():
    s = build_schedule(R10, [1, 4], 3)
    assert s.m_seq == (1, 4, 1)
