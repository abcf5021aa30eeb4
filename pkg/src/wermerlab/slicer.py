"""Vertical-slice geometry of the tower.

A slice is the line (z, w) = (z0 - gamma w', w') for a projection
pi(z, w) = z + gamma w with |gamma| <= 1/100. Along the slice both P and its
w'-derivative satisfy closed recursions with exact rational/complex constants
(the anchor line A_k becomes A0_k + A1_k w'), so root solving, component
extraction and the certificates all run over a single scalar variable.

Root isolation is three-stage: backward +/- recursion through the tower for
2^n seeds (with the w'-dependence of even anchors resolved by a short fixed
point iteration), Newton polishing at working precision, then a Krawczyk
certificate on a rectangle around each root. The Krawczyk operator

    K(X) = m - F(m)/F'(m) + (1 - F'(X)/F'(m)) (X - m)

with K(X) inside the interior of X proves existence and uniqueness of a zero
in X; complex rectangle arithmetic realizes the underlying 2x2 real interval
computation because every operation here outward-encloses the exact image.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .backend import active as B
from .errors import (CertificationFailure, ContainsZero,
                     EnumerationCapExceeded, Inconclusive, InvalidSchedule,
                     RangeError)
from .numeric import (ExactComplex, IntervalComplex, PrecisionContext,
                      pt_abs, pt_add, pt_div, pt_from_exact, pt_mul,
                      pt_scale, pt_sqr, pt_sub, pt_to_complex)
from .schedule import recheck_estimates
from .tower import (Signature, TowerModel, _delta_frac, _eps_frac,
                    _to_exact, all_signatures, membership_depth, sigma_grid,
                    signature_count)

DISTORTION_ALLOWANCE = 4  # Koebe-type placeholder constant K


@dataclass(frozen=True)
class SlicePlane:
    """The line pi^{-1}(z0) for pi(z,w) = z + gamma*w, parameterized by w'."""
    z0: ExactComplex
    gamma: ExactComplex

    @classmethod
    def make(cls, z0, gamma=0):
        plane = cls(_to_exact(z0), _to_exact(gamma))
        if plane.gamma.abs2() > Fraction(1, 10000):
            raise RangeError("|gamma| must be <= 1/100")
        return plane

    def in_boundary_regime(self) -> bool:
        """0.385 <= |z0| <= 0.495, exact comparison."""
        a2 = self.z0.abs2()
        return Fraction(385, 1000) ** 2 <= a2 <= Fraction(495, 1000) ** 2

    def require_boundary(self):
        if not self.in_boundary_regime():
            raise RangeError(
                f"slice plane outside the admissible annulus: |z0|^2 = {float(self.z0.abs2()):.6f}")

    def z_of_w_exact(self, w: ExactComplex) -> ExactComplex:
        return self.z0 - self.gamma * w

    def describe(self) -> str:
        return (f"plane(z0={float(self.z0.re)}+{float(self.z0.im)}j,"
                f"gamma={float(self.gamma.re)}+{float(self.gamma.im)}j)")


def _slice_consts(t: TowerModel, s: Signature, plane: SlicePlane):
    """Per-level exact constants along the slice.

    A_k restricted to the plane is A0_k + A1_k * w' with
    A0_k = z0 - a_k and A1_k = w_coeff(k) - gamma.
    """
    out = []
    for k, sig in enumerate(s.sigma(t), start=1):
        a = t.anchors.a(k)
        cw = ExactComplex(t.anchors.w_coeff(k), Fraction(0))
        a0 = plane.z0 - a
        a1 = cw - plane.gamma
        out.append((sig, _eps_frac(t, k), a0, a1))
    return out


def _slice_eval_float(consts, w: complex, alpha: complex):
    """(F, F') in float arithmetic, F = P_{n,s}(slice(w')) - alpha."""
    val, dval = w, 1.0 + 0j
    for sig, eps, a0, a1 in consts:
        sg = complex(sig.to_complex())
        e = float(eps)
        shifted = val - sg
        dval = 2.0 * shifted * dval - e * complex(a1.to_complex())
        val = shifted * shifted - e * (complex(a0.to_complex()) + complex(a1.to_complex()) * w)
    return val - alpha, dval


def _slice_eval_point(consts, wp, alpha_pt, ctx):
    """(F, F') as backend points."""
    one = ExactComplex(Fraction(1), Fraction(0))
    val, dval = wp, pt_from_exact(one, ctx)
    for sig, eps, a0, a1 in consts:
        shifted = pt_sub(val, pt_from_exact(sig, ctx), ctx)
        dval = pt_sub(pt_mul(pt_add(shifted, shifted, ctx), dval, ctx),
                      pt_scale(pt_from_exact(a1, ctx), eps, ctx), ctx)
        a_val = pt_add(pt_from_exact(a0, ctx),
                       pt_mul(pt_from_exact(a1, ctx), wp, ctx), ctx)
        val = pt_sub(pt_sqr(shifted, ctx), pt_scale(a_val, eps, ctx), ctx)
    return pt_sub(val, alpha_pt, ctx), dval


def _slice_eval_interval(consts, wbox: IntervalComplex, alpha_x: ExactComplex, ctx):
    """(F, F') as certified interval enclosures over the box wbox."""
    one = ExactComplex(Fraction(1), Fraction(0))
    val, dval = wbox, IntervalComplex.from_exact(one, ctx)
    for sig, eps, a0, a1 in consts:
        a1_box = IntervalComplex.from_exact(a1, ctx)
        shifted = val.sub(IntervalComplex.from_exact(sig, ctx), ctx)
        dval = shifted.add(shifted, ctx).mul(dval, ctx) \
                      .sub(a1_box.scale_exact(eps, ctx), ctx)
        a_val = IntervalComplex.from_exact(a0, ctx).add(a1_box.mul(wbox, ctx), ctx)
        val = shifted.square(ctx).sub(a_val.scale_exact(eps, ctx), ctx)
    return val.sub(IntervalComplex.from_exact(alpha_x, ctx), ctx), dval


def slice_poly_coeffs(t: TowerModel, s: Signature, plane: SlicePlane):
    """Exact coefficients of P_{n,s} restricted to the slice, ascending in w'.

    The result is monic of degree 2^n. Only intended for desk depths (the
    degree doubles per level); the root solver never uses it, it exists as
    an independent target for oracle comparisons.
    """
    from .numeric import EC_ONE, EC_ZERO
    consts = _slice_consts(t, s, plane)
    coeffs = [EC_ZERO, EC_ONE]  # P_0 = w'

    def poly_mul(p, q):
        out = [EC_ZERO] * (len(p) + len(q) - 1)
        for i, a in enumerate(p):
            if a.is_zero():
                continue
            for j, b in enumerate(q):
                out[i + j] = out[i + j] + a * b
        return out

    for sig, eps, a0, a1 in consts:
        eps_c = ExactComplex(eps, Fraction(0))
        shifted = coeffs[:]
        shifted[0] = shifted[0] - sig
        coeffs = poly_mul(shifted, shifted)
        coeffs[0] = coeffs[0] - eps_c * a0
        coeffs[1] = coeffs[1] - eps_c * a1
    return coeffs


@dataclass(frozen=True)
class SliceRootSet:
    signature: Signature
    alpha: complex
    roots: tuple          # complex centers, sorted by (re, im)
    boxes: tuple          # certified IntervalComplex enclosures
    sep_radii: tuple      # half of the distance to the nearest other root

    def __post_init__(self):
        if not (len(self.roots) == len(self.boxes) == len(self.sep_radii)):
            raise ValueError("inconsistent root set")


def slice_roots(t: TowerModel, s: Signature, plane: SlicePlane, alpha,
                ctx: PrecisionContext) -> SliceRootSet:
    """All 2^n certified solutions of P_{n,s} = alpha on the slice."""
    plane.require_boundary()
    n = s.n
    alpha_x = _to_exact(alpha)
    delta = _delta_frac(t, n)
    if alpha_x.abs2() >= 4 * delta * delta:
        raise RangeError(f"|alpha| must be < 2*delta_n = {float(2 * delta):.3g}")
    consts = _slice_consts(t, s, plane)
    alpha_f = complex(alpha_x.to_complex())

    seeds = _backward_seeds(consts, alpha_f, n)
    alpha_pt = pt_from_exact(alpha_x, ctx)
    ctr_boxes = []
    centers = []
    for seed in seeds:
        w, last_step = _newton_polish(consts, seed, alpha_f, alpha_pt, ctx)
        box = _krawczyk_certify(consts, w, alpha_x, last_step, ctx)
        if box is None:
            raise CertificationFailure(
                reason="krawczyk contraction failed",
                location=f"signature {s.idx} seed {seed:.6g}",
                measured=float("nan"), bound=0.0)
        centers.append(pt_to_complex(w))
        ctr_boxes.append(box)

    order = sorted(range(len(centers)), key=lambda i: (centers[i].real, centers[i].imag))
    centers = [centers[i] for i in order]
    ctr_boxes = [ctr_boxes[i] for i in order]
    for i in range(len(ctr_boxes)):
        for j in range(i + 1, len(ctr_boxes)):
            if ctr_boxes[i].overlaps(ctr_boxes[j]):
                raise CertificationFailure(
                    reason="root enclosures overlap",
                    location=f"signature {s.idx} roots {i},{j}",
                    measured=abs(centers[i] - centers[j]), bound=0.0)
    seps = []
    for i, c in enumerate(centers):
        others = [abs(c - d) for j, d in enumerate(centers) if j != i]
        seps.append(min(others) / 2 if others else float(delta))
    return SliceRootSet(signature=s, alpha=complex(alpha_f), roots=tuple(centers),
                        boxes=tuple(ctr_boxes), sep_radii=tuple(seps))


def _backward_seeds(consts, alpha_f: complex, n: int):
    """2^n seeds by the backward +/- recursion, w-dependence fixed-pointed."""
    seeds = []
    for mask in range(1 << n):
        w_est = 0j
        for _ in range(3):
            val = alpha_f
            for k in range(n, 0, -1):
                sig, eps, a0, a1 = consts[k - 1]
                rad = val + float(eps) * (complex(a0.to_complex())
                                          + complex(a1.to_complex()) * w_est)
                g = cmath.sqrt(rad)
                if (mask >> (k - 1)) & 1:
                    g = -g
                val = complex(sig.to_complex()) + g
            w_est = val
        seeds.append(w_est)
    return seeds


def _newton_polish(consts, seed: complex, alpha_f: complex, alpha_pt, ctx):
    w = seed
    for _ in range(6):
        f, df = _slice_eval_float(consts, w, alpha_f)
        if df == 0:
            break
        step = f / df
        w -= step
        if abs(step) < 1e-14 * (1 + abs(w)):
            break
    wp = pt_from_exact(ExactComplex(Fraction(w.real), Fraction(w.imag)), ctx)
    last = 1.0
    for _ in range(8):
        f, df = _slice_eval_point(consts, wp, alpha_pt, ctx)
        if B.sign(pt_abs(df, ctx)) == 0:
            raise CertificationFailure(reason="derivative vanished during Newton",
                                       location=f"near {w:.6g}", measured=0.0, bound=0.0)
        step = pt_div(f, df, ctx)
        wp = pt_sub(wp, step, ctx)
        last = B.to_float(pt_abs(step, ctx))
        if last < math.ldexp(1.0, -(ctx.bits - 8)) * (1 + abs(w)):
            break
    return wp, last


def _krawczyk_certify(consts, wp, alpha_x: ExactComplex, last_step: float,
                      ctx) -> Optional[IntervalComplex]:
    scale = 1 + B.to_float(pt_abs(wp, ctx))
    base = max(64 * last_step, math.ldexp(scale, -(2 * ctx.bits) // 3))
    one = ExactComplex(Fraction(1), Fraction(0))
    for factor in (1.0, 16.0, 1 / 16.0, 256.0):
        rho = Fraction(base * factor)
        X = IntervalComplex.from_center_halfwidth(wp, rho, ctx)
        m_box = IntervalComplex.from_point(wp, ctx)
        f_m, d_m = _slice_eval_interval(consts, m_box, alpha_x, ctx)
        _, d_X = _slice_eval_interval(consts, X, alpha_x, ctx)
        try:
            quotient = f_m.div(d_m, ctx)
            spread = IntervalComplex.from_exact(one, ctx).sub(d_X.div(d_m, ctx), ctx)
        except ContainsZero:
            continue
        K = m_box.sub(quotient, ctx).add(spread.mul(X.sub(m_box, ctx), ctx), ctx)
        if K.is_inside_interior_of(X):
            return X
    return None


@dataclass(frozen=True)
class ComponentRecord:
    depth: int
    signature: Signature
    center: complex
    deriv_mag: float
    conf_radius: float
    center_box: IntervalComplex


def slice_components(t: TowerModel, n: int, plane: SlicePlane,
                     ctx: PrecisionContext, check_bracket: bool = True):
    """One record per root of P_{n,s} = 0 across all signatures at depth n.

    conf_radius = delta_n / |P'(center)| is the first-order component size.
    Each record is checked against the distortion bracket
    [3^-n, 3^n] * R_n / (4^n M_n); with the schedule identity
    D_n = 4^n delta_n M_n / R_n this is the same statement as
    deriv_mag in [3^-n, 3^n] * D_n.
    """
    plane.require_boundary()
    count = signature_count(t, n)
    if count * (2 ** n) > 200_000:
        raise EnumerationCapExceeded(count * 2 ** n, 200_000)
    delta = _delta_frac(t, n)
    records = []
    for s in all_signatures(t, n):
        consts = _slice_consts(t, s, plane)
        rootset = slice_roots(t, s, plane, 0, ctx)
        for center, box in zip(rootset.roots, rootset.boxes):
            wp = pt_from_exact(ExactComplex(Fraction(center.real), Fraction(center.imag)), ctx)
            _, df = _slice_eval_point(consts, wp, pt_from_exact(ExactComplex(Fraction(0), Fraction(0)), ctx), ctx)
            dmag = B.to_float(pt_abs(df, ctx))
            if dmag <= 0:
                raise CertificationFailure(reason="vanishing derivative at center",
                                           location=f"signature {s.idx}", measured=dmag, bound=0.0)
            records.append(ComponentRecord(depth=n, signature=s, center=center,
                                           deriv_mag=dmag, conf_radius=float(delta) / dmag,
                                           center_box=box))
    if n >= 1:
        # Depth 0 is the raw disk {|w| <= 1/2}: conf_radius = delta_0 exactly,
        # outside the distortion statement (which starts at the first square).
        lo = 3.0 ** -n * math.exp(t.schedule.log_R_float(n) - n * math.log(4)
                                  - t.schedule.log_M_float(n))
        hi = 3.0 ** n * math.exp(t.schedule.log_R_float(n) - n * math.log(4)
                                 - t.schedule.log_M_float(n))
        for rec in records:
            if not lo * (1 - 1e-9) <= rec.conf_radius <= hi * (1 + 1e-9):
                raise CertificationFailure(
                    reason="distortion bracket violated",
                    location=f"signature {rec.signature.idx} center {rec.center:.6g}",
                    measured=rec.conf_radius, bound=hi)
    if check_bracket and n + 1 <= t.depth and signature_count(t, n + 1) * 2 ** (n + 1) <= 4096:
        _check_child_bracket(t, n, plane, ctx, records)
    return tuple(records)


def _check_child_bracket(t, n, plane, ctx, parents):
    """Sampled eq-style bracket: every depth-(n+1) center lies in its parent's
    allowance disk and strictly inside the parent's delta_n sublevel set."""
    K = DISTORTION_ALLOWANCE
    delta = _delta_frac(t, n)
    by_sig = {}
    for rec in parents:
        by_sig.setdefault(rec.signature.idx, []).append(rec)
    for child in slice_components(t, n + 1, plane, ctx, check_bracket=False):
        parent_idx = child.signature.idx[:-1]
        cands = by_sig[parent_idx]
        parent = min(cands, key=lambda rec: abs(rec.center - child.center))
        if abs(child.center - parent.center) > K * parent.conf_radius:
            raise CertificationFailure(
                reason="child center escapes the parent allowance disk",
                location=f"signature {child.signature.idx}",
                measured=abs(child.center - parent.center),
                bound=K * parent.conf_radius)
        consts = _slice_consts(t, Signature(n, parent_idx), plane)
        f, _ = _slice_eval_float(consts, child.center, 0j)
        if abs(f) >= float(delta):
            raise CertificationFailure(
                reason="child center outside the parent sublevel set",
                location=f"signature {child.signature.idx}",
                measured=abs(f), bound=float(delta))


@dataclass(frozen=True)
class SliceMeasure:
    depth: int
    atoms: tuple  # (center: complex, weight: Fraction)

    def total_mass(self) -> Fraction:
        return sum((w for _, w in self.atoms), Fraction(0))

    def ball_mass(self, p: complex, r: float) -> Fraction:
        return sum((w for c, w in self.atoms if abs(c - p) <= r), Fraction(0))


def slice_measure(t: TowerModel, n: int, plane: SlicePlane,
                  ctx: PrecisionContext) -> SliceMeasure:
    """Atoms of weight 1/(2^n #S_n) at the component centers; mass exactly 1."""
    comps = slice_components(t, n, plane, ctx, check_bracket=False)
    weight = Fraction(1, (2 ** n) * signature_count(t, n))
    atoms = tuple((rec.center, weight) for rec in comps)
    measure = SliceMeasure(depth=n, atoms=atoms)
    if measure.total_mass() != 1:
        raise CertificationFailure(reason="total mass deviates from 1",
                                   location=f"depth {n}",
                                   measured=float(measure.total_mass()), bound=1.0)
    return measure


@dataclass(frozen=True)
class MassProfile:
    p: complex
    radii: tuple
    masses: tuple   # floats
    labels: tuple   # "plateau" | "quadratic" | ""

    def __post_init__(self):
        if any(b < a for a, b in zip(self.masses, self.masses[1:])):
            raise ValueError("masses must be nondecreasing in r")


def mass_profile(t: TowerModel, n: int, plane: SlicePlane, p, radii,
                 ctx: PrecisionContext, measure: Optional[SliceMeasure] = None,
                 components=None) -> MassProfile:
    """mu_n(B(p, r)) for each r, with regime labels from the component atlas.

    Labels use the scales local to p: its depth-n component radius rad_n, the
    intermediate radius rad_n^int = (parent conf)/m_n, and the parent's
    depth-(n-1) radius; radii between consecutive scales get "plateau" or
    "quadratic", radii outside them get "".
    """
    radii = tuple(float(r) for r in radii)
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive increasing")
    p = complex(p)
    if measure is None:
        measure = slice_measure(t, n, plane, ctx)
    rad_n = rad_int = rad_up = None
    if n >= 1:
        comps = components if components is not None else slice_components(t, n, plane, ctx, check_bracket=False)
        nearest = min(comps, key=lambda rec: abs(rec.center - p))
        rad_n = nearest.conf_radius
        parents = slice_components(t, n - 1, plane, ctx, check_bracket=False)
        parent = min(parents, key=lambda rec: abs(rec.center - p))
        rad_up = parent.conf_radius
        rad_int = parent.conf_radius / t.schedule.m_seq[n - 1]
    masses = []
    labels = []
    for r in radii:
        masses.append(float(measure.ball_mass(p, r)))
        if rad_n is not None and rad_n <= r <= rad_int:
            labels.append("plateau")
        elif rad_int is not None and rad_int <= r <= rad_up:
            labels.append("quadratic")
        else:
            labels.append("")
    return MassProfile(p=p, radii=radii, masses=tuple(masses), labels=tuple(labels))


@dataclass(frozen=True)
class NestingRow:
    child_signature: tuple
    child_center: complex
    margin_intermediate: float
    margin_sublevel: float
    margin_disk: float


@dataclass(frozen=True)
class NestingCertificate:
    n: int
    rows: tuple
    min_margin: float


def nesting_certificate(t: TowerModel, n: int, plane: SlicePlane,
                        ctx: PrecisionContext) -> NestingCertificate:
    """Interval proof that every depth-(n+1) component disk maps into its
    intermediate disk and its parent depth-n component.

    The schedule estimates est1/est2 are re-verified first: a corrupted
    delta sequence must fail here, before any geometry is trusted.
    """
    if n + 1 > t.depth:
        raise ValueError("need depth n+1 in the tower")
    try:
        recheck_estimates(t.schedule)
    except InvalidSchedule as exc:
        raise CertificationFailure(reason=exc.which, location=f"schedule step {exc.n}",
                                   measured=exc.measured, bound=exc.bound) from None
    plane.require_boundary()
    K = DISTORTION_ALLOWANCE
    delta_n = _delta_frac(t, n)
    m_next = t.schedule.m_seq[n]
    inter_radius = delta_n / m_next
    parent_records = slice_components(t, n, plane, ctx, check_bracket=False)
    by_sig = {}
    for rec in parent_records:
        by_sig.setdefault(rec.signature.idx, []).append(rec)
    rows = []
    for child in slice_components(t, n + 1, plane, ctx, check_bracket=False):
        parent_idx = child.signature.idx[:-1]
        sigma = sigma_grid(t, n + 1)[child.signature.idx[-1]]
        parent = min(by_sig[parent_idx], key=lambda rec: abs(rec.center - child.center))
        halfwidth = Fraction(K * child.conf_radius)
        wp = pt_from_exact(ExactComplex(Fraction(child.center.real),
                                        Fraction(child.center.imag)), ctx)
        W = IntervalComplex.from_center_halfwidth(wp, halfwidth, ctx)
        consts = _slice_consts(t, Signature(n, parent_idx), plane)
        p_box, _ = _slice_eval_interval(consts, W, ExactComplex(Fraction(0), Fraction(0)), ctx)
        shifted = p_box.sub(IntervalComplex.from_exact(sigma, ctx), ctx)
        _, sh_hi2 = shifted.abs2_bounds_exact()
        margin_int = float(inter_radius) - math.sqrt(float(sh_hi2))
        _, p_hi2 = p_box.abs2_bounds_exact()
        margin_sub = float(delta_n) - math.sqrt(float(p_hi2))
        margin_disk = K * parent.conf_radius - (abs(child.center - parent.center)
                                                + K * child.conf_radius)
        rows.append(NestingRow(child_signature=child.signature.idx,
                               child_center=child.center,
                               margin_intermediate=margin_int,
                               margin_sublevel=margin_sub,
                               margin_disk=margin_disk))
    if not rows:
        raise CertificationFailure(reason="no components to certify",
                                   location=f"depth {n + 1}", measured=0.0, bound=0.0)
    worst = min(min(r.margin_intermediate, r.margin_sublevel, r.margin_disk) for r in rows)
    for r in rows:
        m = min(r.margin_intermediate, r.margin_sublevel, r.margin_disk)
        if m <= 0:
            raise CertificationFailure(reason="nesting margin nonpositive",
                                       location=f"signature {r.child_signature}",
                                       measured=m, bound=0.0)
    return NestingCertificate(n=n, rows=tuple(rows), min_margin=worst)


@dataclass(frozen=True)
class ObstructionLog:
    steps: int
    start: complex
    end: complex
    swapped: bool
    max_jump: float


@dataclass(frozen=True)
class SelectionWitness:
    residual: float
    delta: float


def winding_probe(eps, r, delta):
    """The square-root selection obstruction at scale (eps, r, delta).

    Tracks a continuous branch of sqrt(eps * zeta) while zeta loops once
    around the circle of radius r. If delta < eps * r the two components of
    {|w^2 - eps*zeta| < delta} are forced to swap after one loop (no
    continuous selection exists); if delta > eps * r the constant section
    f = 0 is a valid selection since |0^2 - eps*zeta| = eps*r < delta.
    Equality is refused as Inconclusive. Comparisons are exact.
    """
    eps_f, r_f, delta_f = Fraction(eps), Fraction(r), Fraction(delta)
    if eps_f <= 0 or r_f <= 0 or delta_f <= 0:
        raise ValueError("eps, r, delta must be positive")
    lhs, rhs = delta_f, eps_f * r_f
    if lhs == rhs:
        raise Inconclusive("delta equals eps*r exactly; neither regime certifies")
    if lhs > rhs:
        return SelectionWitness(residual=float(rhs), delta=float(delta_f))
    steps = 720
    e, rr = float(eps_f), float(r_f)
    current = cmath.sqrt(e * rr)
    start = current
    max_jump = 0.0
    for j in range(1, steps + 1):
        zeta = rr * cmath.exp(2j * math.pi * j / steps)
        g = cmath.sqrt(e * zeta)
        cand = g if abs(g - current) <= abs(-g - current) else -g
        max_jump = max(max_jump, abs(cand - current))
        current = cand
    swapped = abs(current + start) < abs(current - start)
    if not swapped:
        raise CertificationFailure(reason="continuation did not swap the branches",
                                   location="winding_probe", measured=abs(current - start),
                                   bound=0.0)
    return ObstructionLog(steps=steps, start=start, end=current, swapped=True,
                          max_jump=max_jump)


@dataclass(frozen=True)
class Raster:
    width: int
    height: int
    pixels: tuple  # row-major uint16 values
    comment: str

    UNKNOWN = 65535


def render_escape(t: TowerModel, plane: SlicePlane, resolution: int, n_max: int,
                  ctx: PrecisionContext, workers: int = 1) -> Raster:
    """Per-pixel membership depth over the w'-square [-1,1]^2.

    Pixel value = certified depth + 1 (0 = outside X_0), 65535 = unresolved.
    Row order, pixel order and the reduction are fixed, so the bytes are
    identical for any worker count.
    """
    if resolution < 1 or resolution * resolution > 4096 * 4096:
        raise RangeError("resolution out of range")
    if n_max > t.depth:
        raise ValueError("n_max exceeds tower depth")
    sub = TowerModel(schedule=t.schedule, anchors=t.anchors, depth=n_max)

    def render_row(i: int):
        out = []
        im = Fraction(-(resolution - 1) + 2 * i, resolution)
        for j in range(resolution):
            re = Fraction(-(resolution - 1) + 2 * j, resolution)
            w = ExactComplex(re, im)
            if w.abs2() >= 1:
                out.append(0)
                continue
            z = plane.z_of_w_exact(w)
            res = membership_depth(sub, z, w, ctx)
            if res.status == "unknown":
                out.append(Raster.UNKNOWN)
            else:
                out.append(res.depth + 1)
        return tuple(out)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(render_row, range(resolution)))
    else:
        rows = [render_row(i) for i in range(resolution)]
    pixels = tuple(v for row in rows for v in row)
    comment = f"{t.description()} {plane.describe()} n_max={n_max}"
    return Raster(width=resolution, height=resolution, pixels=pixels, comment=comment)
