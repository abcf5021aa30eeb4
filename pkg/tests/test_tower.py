"""Tower recursion: anchors, signature bookkeeping, certified evaluation."""

from fractions import Fraction

import math
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wermerlab.errors import BudgetExceeded, RangeError
from wermerlab.numeric import PrecisionContext, pt_to_complex
from wermerlab.schedule import build_schedule
from wermerlab.tower import (
    AnchorSequence,
    Signature,
    TowerModel,
    all_signatures,
    eval_P,
    eval_dP,
    eval_u,
    eval_v,
    membership_depth,
    sigma_grid,
    signature_count,
)

R10 = Fraction(1, 10)
CTX = PrecisionContext(bits=112)


@pytest.fixture(scope="module")
def t():
    return TowerModel.make(build_schedule(R10, [1, 4], 2))


def test_first_anchor_is_pinned_to_zero():
    for seed in (0, 1, 17):
        a = AnchorSequence(seed=seed)
        assert a.a(1).is_zero()


def test_anchors_are_dyadic_and_small():
    a = AnchorSequence(seed=0)
    for n in range(1, 20):
        z = a.a(n)
        # denominators are powers of two so every backend sees them exactly
        assert z.re.denominator & (z.re.denominator - 1) == 0
        assert z.im.denominator & (z.im.denominator - 1) == 0
        assert z.abs2() < Fraction(1, 4)


def test_anchor_sequences_are_deterministic():
    xs = [AnchorSequence(seed=3).a(n) for n in range(1, 8)]
    ys = [AnchorSequence(seed=3).a(n) for n in range(1, 8)]
    assert xs == ys
    zs = [AnchorSequence(seed=4).a(n) for n in range(2, 8)]
    assert any(x != z for x, z in zip(xs[1:], zs))


def test_sigma_grid_sizes(t):
    assert len(sigma_grid(t, 1)) == 1  # m_1 = 1: singleton {0}
    assert len(sigma_grid(t, 2)) == 5
    t5 = TowerModel.make(build_schedule(R10, [1, 4, 5], 3))
    assert len(sigma_grid(t5, 3)) == 5
    with pytest.raises(ValueError):
        sigma_grid(t, 3)


def test_sigma_grid_lattice_inequality(t):
    # 9(j^2+k^2) <= (m-1)^2 on the lattice (3 delta_{n-1}/m) Z^2, all exact
    m = 4
    step = 3 * t.schedule.delta_frac[1] / m
    for z in sigma_grid(t, 2):
        j, k = z.re / step, z.im / step
        assert j.denominator == 1 and k.denominator == 1
        assert 9 * (j**2 + k**2) <= (m - 1) ** 2


def test_signature_counts(t):
    assert [signature_count(t, n) for n in range(3)] == [1, 1, 5]


def test_all_signatures_enumeration_and_index(t):
    sigs = list(all_signatures(t, 2))
    assert len(sigs) == 5
    assert sigs == sorted(sigs, key=lambda s: s.idx)
    for k, s in enumerate(sigs):
        assert s.index_int(t) == k
        assert Signature.from_index_int(t, 2, k) == s
    assert sigs[0].parent() == Signature(1, (0,))


def test_eval_P_frozen_values(t):
    sig1 = next(iter(all_signatures(t, 1)))
    # P_1 = (w - 0)^2 - (1/8) z at (2/5, 3/10): 9/100 - 1/20 = 1/25
    assert pt_to_complex(eval_P(t, sig1, Fraction(2, 5), Fraction(3, 10), CTX)) == 0.04 + 0j
    assert pt_to_complex(eval_dP(t, sig1, Fraction(2, 5), Fraction(3, 10), CTX)) == 0.6 + 0j
    sig0 = next(iter(all_signatures(t, 0)))
    assert pt_to_complex(eval_P(t, sig0, Fraction(2, 5), Fraction(3, 10), CTX)) == 0.3 + 0j


def test_eval_P_domain_guard(t):
    sig0 = next(iter(all_signatures(t, 0)))
    with pytest.raises(RangeError):
        eval_P(t, sig0, Fraction(1, 2), Fraction(0), CTX)
    with pytest.raises(RangeError):
        eval_P(t, sig0, Fraction(0), Fraction(1), CTX)


def test_eval_requires_enough_bits(t):
    with pytest.raises(BudgetExceeded):
        eval_u(t, 2, Fraction(2, 5), Fraction(4, 5), PrecisionContext(bits=64))


def test_eval_u_frozen_value(t):
    # single signature at n=1, P_1(2/5, 4/5) = 0.59 above the delta_1 floor
    got = eval_u(t, 1, Fraction(2, 5), Fraction(4, 5), CTX)
    assert got == pytest.approx(0.5 * math.log(0.59), abs=1e-15)


def test_eval_u_floor_engages(t):
    # just off the root w = sqrt(1/20) of P_1(2/5, .): |P_1| ~ 9e-8 is far
    # below delta_1 = 1/160, so the clamp pins u_1 at log(delta_1)/2
    got = eval_u(t, 1, Fraction(2, 5), Fraction(223607, 10**6), CTX)
    assert got == pytest.approx(math.log(1 / 160) / 2, abs=1e-15)


def test_eval_v_frozen_value(t):
    got = eval_v(t, 1, Fraction(2, 5), Fraction(4, 5), CTX)
    assert got == pytest.approx(math.log(0.8), abs=1e-15)


def test_sample_mode_agrees_with_exact(t):
    exact = eval_u(t, 2, Fraction(2, 5), Fraction(4, 5), CTX)
    mean, se = eval_u(t, 2, Fraction(2, 5), Fraction(4, 5), CTX,
                      mode="sample", samples=256, rng_seed=7)
    assert se < 0.01
    assert abs(mean - exact) < 6 * se + 1e-9
    again, _ = eval_u(t, 2, Fraction(2, 5), Fraction(4, 5), CTX,
                      mode="sample", samples=256, rng_seed=7)
    assert again == mean


def test_membership_depths(t):
    inside = membership_depth(t, Fraction(2, 5), 0, CTX)
    assert inside.status == "certified"
    assert inside.depth == 0
    out = membership_depth(t, Fraction(9, 20), Fraction(9, 10), CTX)
    assert out.depth == -1
    assert out.inside_counts == (0,)
    # w = 0 sits inside X_0 = {|P_0| < 1/2} whatever z is
    assert membership_depth(t, 5, 0, CTX).depth >= 0


@given(wr=st.fractions(min_value=Fraction(-9, 10), max_value=Fraction(9, 10),
                       max_denominator=64))
@settings(max_examples=30, deadline=None)
def test_u_is_bounded_below_by_log_floor(wr):
    t = TowerModel.make(build_schedule(R10, [1, 4], 2))
    val = eval_u(t, 1, Fraction(1, 5), wr, CTX)
    assert val >= math.log(float(t.schedule.delta_frac[1])) / 2 - 1e-12
    assert val <= math.log(2.0)


def test_description_mentions_parameters(t):
    d = t.description()
    assert "depth=2" in d and "m=1,4" in d and "1/10" in d
