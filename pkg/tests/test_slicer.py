"""Slice geometry: certified roots, components, measures, nesting, winding."""

import math
from fractions import Fraction

import pytest

from wermerlab.errors import CertificationFailure, Inconclusive
from wermerlab.numeric import PrecisionContext
from wermerlab.schedule import build_schedule
from wermerlab.slicer import (
    ObstructionLog,
    SelectionWitness,
    SlicePlane,
    mass_profile,
    nesting_certificate,
    render_escape,
    slice_components,
    slice_measure,
    slice_poly_coeffs,
    slice_roots,
    winding_probe,
)
from wermerlab.tower import Signature, TowerModel, all_signatures

R10 = Fraction(1, 10)
CTX = PrecisionContext(bits=112)


@pytest.fixture(scope="module")
def t():
    return TowerModel.make(build_schedule(R10, [1, 4], 2))


@pytest.fixture(scope="module")
def plane():
    return SlicePlane.make(Fraction(2, 5))


def test_plane_accessors(plane):
    assert plane.describe() == "plane(z0=0.4+0.0j,gamma=0.0+0.0j)"
    z = plane.z_of_w_exact(Fraction(1, 4))
    assert z.re == Fraction(2, 5) and z.im == 0


def test_slice_poly_is_monic_with_frozen_constant(t, plane):
    sig1 = next(iter(all_signatures(t, 1)))
    coeffs = slice_poly_coeffs(t, sig1, plane)
    assert [c.re for c in coeffs] == [Fraction(-1, 20), Fraction(0), Fraction(1)]
    assert all(c.im == 0 for c in coeffs)
    for sig in all_signatures(t, 2):
        cs = slice_poly_coeffs(t, sig, plane)
        assert len(cs) == 5
        assert cs[-1].re == 1 and cs[-1].im == 0


def test_roots_level_one_alpha_zero(t, plane):
    sig1 = next(iter(all_signatures(t, 1)))
    rs = slice_roots(t, sig1, plane, 0, CTX)
    assert sorted(r.real for r in rs.roots) == pytest.approx(
        [-math.sqrt(1 / 20), math.sqrt(1 / 20)], abs=1e-15)
    # certified boxes: midpoints solve w^2 = 1/20 far beyond float precision,
    # so keep the residual in exact rational arithmetic
    for box in rs.boxes:
        rl, rh, il, ih = box.to_fractions()
        mre, mim = (rl + rh) / 2, (il + ih) / 2
        res2 = (mre * mre - mim * mim - Fraction(1, 20)) ** 2 + (2 * mre * mim) ** 2
        assert res2 < Fraction(1, 10**40)
        assert rh - rl < Fraction(1, 10**18)
    assert all(r > 0 for r in rs.sep_radii)


def test_roots_level_one_alpha_shifted(t, plane):
    sig1 = next(iter(all_signatures(t, 1)))
    rs = slice_roots(t, sig1, plane, Fraction(1, 160), CTX)
    want = math.sqrt(9 / 160)  # w^2 = 1/20 + 1/160
    assert sorted(r.real for r in rs.roots) == pytest.approx([-want, want], abs=1e-15)


def test_roots_level_two_count_and_disjointness(t, plane):
    seen = []
    for sig in all_signatures(t, 2):
        rs = slice_roots(t, sig, plane, 0, CTX)
        assert len(rs.roots) == 4  # degree 2^n, all simple at alpha = 0
        for box in rs.boxes:
            for other in seen:
                assert not box.overlaps(other)
            seen.append(box)


def test_components_frozen_records(t, plane):
    (c0,) = slice_components(t, 0, plane, CTX)
    assert (c0.depth, c0.center, c0.deriv_mag, c0.conf_radius) == (0, 0j, 1.0, 0.5)
    comps = slice_components(t, 1, plane, CTX)
    assert sorted(c.center.real for c in comps) == pytest.approx(
        [-0.22360679774997896, 0.22360679774997896], abs=1e-15)
    for c in comps:
        assert c.deriv_mag == pytest.approx(2 * abs(c.center), rel=1e-12)
        assert c.conf_radius == pytest.approx(0.013975424859373687, rel=1e-9)


def test_measure_atoms_and_masses(t, plane):
    mu = slice_measure(t, 1, plane, CTX)
    assert mu.total_mass() == 1
    assert [wt for _, wt in mu.atoms] == [Fraction(1, 2), Fraction(1, 2)]
    atom = mu.atoms[0][0]
    assert mu.ball_mass(atom, Fraction(1, 20)) == Fraction(1, 2)
    assert mu.ball_mass(atom, Fraction(1, 2)) == 1
    assert mu.ball_mass(complex(0.9, 0.9), Fraction(1, 100)) == 0

    mu2 = slice_measure(t, 2, plane, CTX)
    assert mu2.total_mass() == 1
    assert len(mu2.atoms) == 20
    assert all(wt == Fraction(1, 20) for _, wt in mu2.atoms)


def test_nesting_certificates_frozen_margins(t, plane):
    c0 = nesting_certificate(t, 0, plane, CTX)
    assert c0.min_margin == pytest.approx(0.2149561437252155, rel=1e-9)
    assert len(c0.rows) == 2
    c1 = nesting_certificate(t, 1, plane, CTX)
    assert c1.min_margin == pytest.approx(0.0006770982483569878, rel=1e-9)
    for row in c0.rows + c1.rows:
        assert row.margin_intermediate > 0
        assert row.margin_sublevel > 0
        assert row.margin_disk > 0


def test_nesting_rejects_corrupted_schedule(plane):
    bad = build_schedule(R10, [1], 2, check=False).with_corrupted_delta(2, 10**6)
    tb = TowerModel.make(bad)
    with pytest.raises(CertificationFailure) as info:
        nesting_certificate(tb, 1, plane, CTX)
    assert info.value.reason == "est1"


def test_winding_probe_three_outcomes():
    log = winding_probe(1, R10, Fraction(1, 20))
    assert isinstance(log, ObstructionLog)
    assert log.swapped
    assert log.steps == 720
    wit = winding_probe(1, R10, Fraction(11, 100))
    assert isinstance(wit, SelectionWitness)
    assert wit.residual == pytest.approx(0.1, abs=1e-15)
    assert wit.residual < wit.delta == 0.11
    with pytest.raises(Inconclusive):
        winding_probe(1, R10, Fraction(1, 10))  # exact tie


def test_mass_profile_labels(t, plane):
    mu = slice_measure(t, 1, plane, CTX)
    atom = mu.atoms[0][0]
    prof = mass_profile(t, 1, plane, atom,
                        [Fraction(1, 100), Fraction(1, 10), Fraction(3, 10)], CTX)
    assert prof.masses == (0.5, 0.5, 0.5)
    assert prof.labels == ("", "plateau", "plateau")


def test_render_escape_deterministic_across_workers(t, plane):
    one = render_escape(t, plane, 16, 2, CTX, workers=1)
    many = render_escape(t, plane, 16, 2, CTX, workers=4)
    assert one.pixels == many.pixels
    assert one.width == one.height == 16
    assert "n_max=2" in one.comment and "plane(z0=0.4" in one.comment
    vals = set(one.pixels)
    assert vals & {0}           # escaped corners
    assert max(vals) <= 65535
    assert any(0 < v < 65535 for v in vals)
