"""Directed-rounding contract shared by the gmpy2 and libmp backends."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wermerlab import backend
from wermerlab.backend import _Gmpy2Real, _LibmpReal


def _impls():
    out = [_LibmpReal()]
    try:
        out.append(_Gmpy2Real())
    except ImportError:
        pass
    return out


@pytest.fixture(params=_impls(), ids=lambda b: b.name)
def B(request):
    return request.param


fractions_st = st.fractions(
    min_value=Fraction(-10), max_value=Fraction(10), max_denominator=10**6
)


def test_active_backend_is_selected():
    assert backend.backend_name() in ("gmpy2", "libmp")
    assert backend.active.name == backend.backend_name()


def test_dyadic_values_are_exact(B):
    for fr in (Fraction(3, 8), Fraction(-7, 16), Fraction(5), Fraction(0)):
        for rnd in ("n", "f", "c"):
            assert B.to_fraction(B.from_fraction(fr, 64, rnd)) == fr


def test_one_third_brackets(B):
    lo = B.to_fraction(B.from_fraction(Fraction(1, 3), 64, "f"))
    hi = B.to_fraction(B.from_fraction(Fraction(1, 3), 64, "c"))
    assert lo < Fraction(1, 3) < hi
    assert hi - lo <= Fraction(1, 2**62)


@given(a=fractions_st, b=fractions_st)
@settings(max_examples=150, deadline=None)
def test_ring_ops_bracket_exact_value(a, b):
    for B in _impls():
        xa = {r: B.from_fraction(a, 64, r) for r in ("f", "c")}
        xb = {r: B.from_fraction(b, 64, r) for r in ("f", "c")}
        checks = [
            (B.add(xa["f"], xb["f"], 64, "f"), B.add(xa["c"], xb["c"], 64, "c"), a + b),
            (B.sub(xa["f"], xb["c"], 64, "f"), B.sub(xa["c"], xb["f"], 64, "c"), a - b),
        ]
        if a >= 0 and b >= 0:
            checks.append(
                (B.mul(xa["f"], xb["f"], 64, "f"), B.mul(xa["c"], xb["c"], 64, "c"), a * b)
            )
        for lo, hi, exact in checks:
            assert B.to_fraction(lo) <= exact <= B.to_fraction(hi)


@given(a=st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(1000),
                      max_denominator=10**6))
@settings(max_examples=100, deadline=None)
def test_sqrt_and_log_bracket(a):
    # Oracle: squaring the rounded sqrt bounds, exponent-free comparison for log.
    for B in _impls():
        lo = B.to_fraction(B.sqrt(B.from_fraction(a, 64, "f"), 64, "f"))
        hi = B.to_fraction(B.sqrt(B.from_fraction(a, 64, "c"), 64, "c"))
        assert lo * lo <= a <= hi * hi
        llo = B.to_fraction(B.log(B.from_fraction(a, 96, "f"), 96, "f"))
        lhi = B.to_fraction(B.log(B.from_fraction(a, 96, "c"), 96, "c"))
        assert llo <= lhi
        assert float(llo) <= math.log(float(a)) + 1e-12
        assert math.log(float(a)) - 1e-12 <= float(lhi)


def test_log_of_one_and_exp_of_zero_are_exact(B):
    one = B.from_int(1, 64, "n")
    zero = B.from_int(0, 64, "n")
    for rnd in ("n", "f", "c"):
        assert B.to_fraction(B.log(one, 64, rnd)) == 0
        assert B.to_fraction(B.exp(zero, 64, rnd)) == 1


def test_exp_brackets_e(B):
    one = B.from_int(1, 64, "n")
    lo = B.to_fraction(B.exp(one, 64, "f"))
    hi = B.to_fraction(B.exp(one, 64, "c"))
    assert float(lo) <= math.e <= float(hi)
    assert hi - lo < Fraction(1, 2**48)


def test_neg_and_abs_are_exact(B):
    x = B.from_fraction(Fraction(-22, 7), 64, "n")
    assert B.to_fraction(B.neg(x)) == -B.to_fraction(x)
    assert B.to_fraction(B.abs(x)) == abs(B.to_fraction(x))
    assert B.sign(x) == -1
    assert B.cmp(x, B.neg(x)) == -1
    assert B.cmp(x, x) == 0


def test_is_finite(B):
    assert B.is_finite(B.from_int(7, 64, "n"))
    assert B.is_finite(B.from_int(0, 64, "n"))


def test_backends_agree_on_brackets():
    # The two implementations must produce brackets that intersect: both
    # contain the exact value, so [lo,hi] pairs for the same op overlap.
    impls = _impls()
    if len(impls) < 2:
        pytest.skip("only one backend importable")
    a, b = impls
    for fr in (Fraction(1, 3), Fraction(355, 113), Fraction(2, 7)):
        lo_a = a.to_fraction(a.log(a.from_fraction(fr, 80, "c"), 80, "c"))
        hi_b = b.to_fraction(b.log(b.from_fraction(fr, 80, "f"), 80, "f"))
        assert hi_b <= lo_a or abs(float(hi_b - lo_a)) < 1e-20
