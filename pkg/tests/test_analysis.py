"""Potential-theoretic diagnostics against frozen reference values."""

import math
from fractions import Fraction

import pytest

from wermerlab.analysis import (
    L_potential,
    box_dimension_slice,
    circle_average_T,
    convergence_report,
    harmonic_gap_check,
    interior_sup_check,
    jensen_cross_check,
    nu_ball_mass,
    two_regime_check,
)
from wermerlab.errors import DomainExit
from wermerlab.numeric import PrecisionContext
from wermerlab.schedule import build_schedule
from wermerlab.slicer import SlicePlane, slice_measure
from wermerlab.tower import TowerModel

R10 = Fraction(1, 10)
CTX = PrecisionContext(bits=112)


@pytest.fixture(scope="module")
def t():
    return TowerModel.make(build_schedule(R10, [1, 4], 2))


@pytest.fixture(scope="module")
def plane():
    return SlicePlane.make(Fraction(2, 5))


def test_L_potential_frozen_values():
    assert L_potential(1, 0) == 0.0
    assert L_potential(2, 0) == pytest.approx(math.log(0.5), abs=1e-14)
    assert L_potential(4, 0) == pytest.approx(-0.5074045301854028, abs=1e-13)
    # subharmonic cap: never above the k = 1 value on the closed disk
    for k in (2, 4, 8, 16):
        for z in (0, 0.3, 0.5j, -0.7 + 0.1j):
            assert L_potential(k, z) <= 1e-12


def test_nu_ball_mass_values():
    assert nu_ball_mass(1, 0, 0.3) == 0.0
    assert nu_ball_mass(2, 0, 0.3) == 0.0  # kernel harmonic away from |z| = 1
    assert nu_ball_mass(4, 0.5, 0.2) == pytest.approx(0.05239595217378186, rel=1e-9)
    # linear-in-r bound along rays reaching the unit circle
    for k in (2, 4, 8):
        for frac_r in (0.1, 0.25, 0.5):
            assert nu_ball_mass(k, 0.9, frac_r) <= 6 * frac_r + 1e-9


def test_circle_average_frozen(t, plane):
    mu = slice_measure(t, 1, plane, CTX)
    atom = mu.atoms[0][0]
    got = circle_average_T(t, 1, (Fraction(2, 5), atom), (0, 1), Fraction(3, 100), CTX)
    assert got == pytest.approx(424.3872009426649, rel=1e-9)
    assert got >= -1e-8


def test_jensen_cross_check_at_atoms(t, plane):
    mu = slice_measure(t, 1, plane, CTX)
    for atom, _ in mu.atoms:
        for r in (Fraction(3, 100), Fraction(2, 25)):
            quad, mass = jensen_cross_check(t, 1, (Fraction(2, 5), atom), (0, 1), r, ctx=CTX)
            assert abs(quad - mass) < 1e-9
    quad0, mass0 = jensen_cross_check(t, 0, (Fraction(2, 5), Fraction(0)), (0, 1),
                                      Fraction(1, 5), ctx=CTX)
    assert abs(quad0 - mass0) < 1e-9


def test_convergence_report_small_grid(t):
    grid = [(Fraction(2, 5), Fraction(k, 10)) for k in range(-8, 9)]
    rep = convergence_report(t, 2, grid)
    assert rep.points == 17
    assert rep.gaps_u[0] == pytest.approx(1.6094379124341005, rel=1e-12)
    assert rep.gaps_u[1] == pytest.approx(0.006181834014078458, rel=1e-9)
    assert rep.bounds == pytest.approx((math.log(10), math.log(10) / 2), rel=1e-12)
    assert rep.ratios[0] < 0.75
    assert len(rep.gaps_v) == 2


def test_harmonic_gap_frozen(t, plane):
    assert harmonic_gap_check(t, 0, plane, 12) == pytest.approx(
        0.9122794326296412, rel=1e-9)
    assert harmonic_gap_check(t, 1, plane, 12) == pytest.approx(
        0.00016479655296786078, rel=1e-9)
    bound = abs(math.log(0.1)) + math.log(2)
    assert harmonic_gap_check(t, 0, plane, 12) <= bound
    assert harmonic_gap_check(t, 1, plane, 12) <= bound


def test_two_regime_frozen_constants(t, plane):
    rep = two_regime_check(t, 1, plane, samples=5)
    assert rep.c_plateau == pytest.approx(1.6, rel=1e-12)
    assert rep.c_quadratic == pytest.approx(81.92, rel=1e-9)
    assert rep.c_quadratic_atlas == pytest.approx(3.2, rel=1e-9)
    assert len(rep.rows) == 40
    assert {row[3] for row in rep.rows} == {"plateau", "quadratic"}
    assert rep.rad_child < rep.rad_int < rep.rad_parent


def test_interior_sup_stays_below_band(t):
    interior, band = interior_sup_check(t, 1, (0, 1), Fraction(1, 50), (2, 3, 3),
                                        ctx=CTX, nodes=512)
    assert interior <= band + 1e-4
    assert band > 100  # the band grid passes next to a depth-1 atom
    flat_i, flat_b = interior_sup_check(t, 0, (0, 1), Fraction(1, 50), (2, 3, 3),
                                        ctx=CTX, nodes=512)
    assert abs(flat_i) < 1e-8 and abs(flat_b) < 1e-8


def test_interior_sup_rejects_oversized_radius(t):
    with pytest.raises(DomainExit):
        interior_sup_check(t, 1, (0, 1), Fraction(1, 4), (2, 3, 3), ctx=CTX)


def test_box_dimension_frozen(t, plane):
    ests = box_dimension_slice(t, plane, (0, 1, 2), ctx=CTX)
    assert [e.count for e in ests] == [1, 2, 20]
    assert ests[0].estimate == 0.0
    assert ests[1].estimate == pytest.approx(0.16231226027279316, rel=1e-9)
    assert ests[2].estimate == pytest.approx(0.3271768389269221, rel=1e-9)
