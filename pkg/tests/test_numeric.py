"""Interval complex arithmetic against the exact rational oracle."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wermerlab.backend import active as B
from wermerlab.errors import ContainsZero
from wermerlab.numeric import (
    ExactComplex,
    Inclusion,
    IntervalComplex,
    PrecisionContext,
    classify_disk,
    interval_sqrt_branches,
    log_max_abs,
    precision_for_depth,
    pt,
    pt_to_complex,
    pt_to_exact,
)
from wermerlab.schedule import build_schedule

CTX = PrecisionContext(bits=64)

small_fr = st.fractions(min_value=Fraction(-2), max_value=Fraction(2),
                        max_denominator=10**4)
exacts = st.builds(ExactComplex, small_fr, small_fr)


def _exact_mul(a: ExactComplex, b: ExactComplex) -> ExactComplex:
    return ExactComplex(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def test_exact_complex_basics():
    z = ExactComplex(Fraction(3, 4), Fraction(-1, 2))
    assert z.abs2() == Fraction(9, 16) + Fraction(1, 4)
    assert z.conj().im == Fraction(1, 2)
    assert not z.is_zero()
    assert ExactComplex(Fraction(0), Fraction(0)).is_zero()
    assert z.to_complex() == complex(0.75, -0.5)


def test_precision_context_caps_bits():
    assert PrecisionContext(bits=64).bits == 64
    with pytest.raises(ValueError):
        PrecisionContext(bits=8192, max_bits=4096)


def test_precision_for_depth_default_tower():
    s = build_schedule(Fraction(1, 10), [1, 4], 2)
    assert [precision_for_depth(s, n) for n in range(3)] == [66, 79, 112]


def test_from_exact_encloses_seed():
    z = ExactComplex(Fraction(1, 3), Fraction(1, 7))
    x = IntervalComplex.from_exact(z, CTX)
    assert x.contains_exact(z)
    rl, rh, il, ih = x.to_fractions()
    assert rl <= Fraction(1, 3) <= rh and il <= Fraction(1, 7) <= ih
    assert rh - rl <= Fraction(1, 2**60)


@given(a=exacts, b=exacts)
@settings(max_examples=120, deadline=None)
def test_interval_ops_contain_exact_results(a, b):
    xa = IntervalComplex.from_exact(a, CTX)
    xb = IntervalComplex.from_exact(b, CTX)
    assert xa.add(xb, CTX).contains_exact(ExactComplex(a.re + b.re, a.im + b.im))
    assert xa.sub(xb, CTX).contains_exact(ExactComplex(a.re - b.re, a.im - b.im))
    assert xa.mul(xb, CTX).contains_exact(_exact_mul(a, b))
    assert xa.square(CTX).contains_exact(_exact_mul(a, a))
    assert xa.neg().contains_exact(ExactComplex(-a.re, -a.im))
    assert xa.conj().contains_exact(a.conj())


@given(a=exacts, b=exacts)
@settings(max_examples=80, deadline=None)
def test_interval_div_contains_exact_quotient(a, b):
    if b.abs2() < Fraction(1, 100):
        return
    xa = IntervalComplex.from_exact(a, CTX)
    xb = IntervalComplex.from_exact(b, CTX)
    d = b.abs2()
    q = _exact_mul(a, b.conj())
    assert xa.div(xb, CTX).contains_exact(ExactComplex(q.re / d, q.im / d))


def test_abs2_bounds_are_exact_fractions():
    x = IntervalComplex.from_center_halfwidth(pt(Fraction(1, 2), 0, CTX),
                                              Fraction(1, 100), CTX)
    lo2, hi2 = x.abs2_bounds_exact()
    assert isinstance(lo2, Fraction) and isinstance(hi2, Fraction)
    assert lo2 <= Fraction(1, 4) <= hi2
    iv = x.abs2_interval(CTX)
    assert B.to_fraction(iv[0]) <= lo2 and hi2 <= B.to_fraction(iv[1])


def test_classify_disk_three_ways():
    x = IntervalComplex.from_center_halfwidth(pt(Fraction(1, 2), 0, CTX),
                                              Fraction(1, 100), CTX)
    assert classify_disk(x, Fraction(3, 5)) is Inclusion.INSIDE
    assert classify_disk(x, Fraction(2, 5)) is Inclusion.OUTSIDE
    assert classify_disk(x, Fraction(505, 1000)) is Inclusion.UNKNOWN


def test_box_geometry_predicates():
    c = pt(Fraction(1, 2), 0, CTX)
    big = IntervalComplex.from_center_halfwidth(c, Fraction(1, 4), CTX)
    small = IntervalComplex.from_center_halfwidth(c, Fraction(1, 100), CTX)
    assert small.is_inside_interior_of(big)
    assert not big.is_inside_interior_of(small)
    assert big.overlaps(small)
    far = IntervalComplex.from_center_halfwidth(pt(Fraction(3, 2), 0, CTX),
                                                Fraction(1, 100), CTX)
    assert not big.overlaps(far)
    assert pt_to_complex(small.mid_point(CTX)) == complex(0.5, 0.0)


def test_sqrt_branches_square_back():
    z = ExactComplex(Fraction(1, 3), Fraction(1, 7))
    x = IntervalComplex.from_exact(z, CTX)
    branches = interval_sqrt_branches(x, CTX)
    assert len(branches) == 2
    for br in branches:
        assert br.square(CTX).contains_exact(z)
    # the two branches are antipodal, so they never overlap
    assert not branches[0].overlaps(branches[1])


def test_sqrt_branches_negative_real_axis():
    z = ExactComplex(Fraction(-1, 2), Fraction(0))
    branches = interval_sqrt_branches(IntervalComplex.from_exact(z, CTX), CTX)
    for br in branches:
        assert br.square(CTX).contains_exact(z)


def test_sqrt_of_box_containing_zero_raises():
    x = IntervalComplex.from_center_halfwidth(pt(0, 0, CTX), Fraction(1, 10), CTX)
    assert x.contains_zero()
    with pytest.raises(ContainsZero):
        interval_sqrt_branches(x, CTX)


def test_log_max_abs_floor():
    above = log_max_abs(pt(Fraction(1, 2), 0, CTX), Fraction(1, 16), CTX)
    assert B.to_float(above) == pytest.approx(math.log(0.5), abs=1e-15)
    below = log_max_abs(pt(Fraction(1, 10), 0, CTX), Fraction(1, 16), CTX)
    assert B.to_float(below) == pytest.approx(math.log(0.25), abs=1e-15)


def test_pt_round_trip():
    # dyadic coordinates survive the backend exactly
    u = pt(Fraction(5, 16), Fraction(-3, 8), CTX)
    z = pt_to_exact(u)
    assert z.re == Fraction(5, 16) and z.im == Fraction(-3, 8)
    assert pt_to_complex(u) == complex(0.3125, -0.375)
    # non-dyadic ones are enclosed by the interval built on top
    v = IntervalComplex.from_exact(ExactComplex(Fraction(2, 5), Fraction(0)), CTX)
    assert v.contains_exact(ExactComplex(Fraction(2, 5), Fraction(0)))
