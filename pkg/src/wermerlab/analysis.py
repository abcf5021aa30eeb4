"""Potential-theoretic diagnostics built on top of the tower evaluators.

Three groups of operations live here. The k-grid circle measures nu_k and
their logarithmic potentials L_k, whose uniform boundedness drives the
capacity estimates; the convergence and harmonic-gap functionals that measure
how fast the potentials u_n stabilize; and the circle-average functional
T_{zeta,r} with its Jensen cross-check, the one place where a quadrature
result is compared against an exact closed form.

Gauge calculus (GaugeFunction, modulus_from_h, tame_gauge) is implemented in
wermerlab.gauges, and MassProfile/mass_profile in wermerlab.slicer; both are
re-exported here so the reporting API reads from one module while the
dependency graph stays acyclic.
"""

from __future__ import annotations

import cmath
import math
import statistics
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .backend import active as B
from .errors import (CertificationFailure, DomainExit, RangeError,
                     ScaleOverlap)
from .gauges import GaugeFunction, modulus_from_h, tame_gauge  # noqa: F401
from .numeric import ExactComplex, PrecisionContext, log_max_abs, \
    precision_for_depth, pt_from_exact, pt_scale, pt_sqr, pt_sub
from .slicer import (MassProfile, SlicePlane, mass_profile,  # noqa: F401
                     slice_components, slice_measure, _backward_seeds,
                     _slice_consts)
from .tower import (Signature, TowerModel, _anchor_point, _delta_frac,
                    _eps_frac, _walk_P_points, eval_u, eval_v, sigma_grid,
                    signature_count)

__all__ = [
    "GaugeFunction", "MassProfile", "ConvergenceReport", "TwoRegimeReport",
    "DimensionEstimate", "L_potential", "nu_ball_mass", "convergence_report",
    "harmonic_gap_check", "modulus_from_h", "tame_gauge", "circle_average_T",
    "jensen_cross_check", "interior_sup_check", "two_regime_check",
    "box_dimension_slice", "mass_profile",
]


@lru_cache(maxsize=32)
def _k_lattice(k: int) -> tuple:
    """(3/k)Z^2 intersected with the closed disk of radius 1 - 1/k.

    Integer-exact membership: 9(j^2 + l^2) <= (k-1)^2. Lexicographic (j, l)
    order so every consumer sees the same enumeration.
    """
    bound = (k - 1) ** 2
    reach = (k - 1) // 3
    pts = []
    for j in range(-reach, reach + 1):
        for l in range(-reach, reach + 1):
            if 9 * (j * j + l * l) <= bound:
                pts.append((Fraction(3 * j, k), Fraction(3 * l, k)))
    return tuple(pts)


@lru_cache(maxsize=32)
def _k_lattice_array(k: int) -> np.ndarray:
    return np.array([complex(a, b) for a, b in _k_lattice(k)], dtype=complex)


def L_potential(k: int, z) -> float:
    """(1/#grid) sum over grid sigma of log max(|z - sigma|, 1/k).

    The potential of the measure nu_k that puts equal mass on the circles of
    radius 1/k around each grid point. k = 1 collapses to log max(|z|, 1).
    """
    if k < 1:
        raise RangeError("k must be >= 1")
    lattice = _k_lattice_array(k)
    d = np.abs(complex(z) - lattice)
    return float(np.log(np.maximum(d, 1.0 / k)).mean())


def nu_ball_mass(k: int, z, r) -> float:
    """nu_k(D(z, r)) as an exact arc-length fraction, no sampling.

    Each grid circle contributes the fraction of its arc inside D(z, r):
    1 when r >= d + 1/k, 0 when the circle misses the disk, else acos of
    the law-of-cosines ratio over pi.
    """
    if k < 1:
        raise RangeError("k must be >= 1")
    r = float(r)
    if r <= 0:
        raise RangeError("r must be positive")
    z = complex(z)
    rho = 1.0 / k
    lattice = _k_lattice_array(k)
    total = 0.0
    for c in lattice:
        d = abs(z - c)
        if r >= d + rho:
            total += 1.0
        elif d >= r + rho or rho >= d + r:
            continue
        else:
            cosine = (rho * rho + d * d - r * r) / (2.0 * rho * d)
            total += math.acos(max(-1.0, min(1.0, cosine))) / math.pi
    return total / len(lattice)


def _abs_log_r(t: TowerModel, k: int) -> float:
    """|log r_k|, k >= 1."""
    return abs(math.log(float(t.schedule.r_seq[k - 1])))


def _slice_grid(z0: complex, side: int, limit: float = 0.97):
    """side x side points w in [-0.9, 0.9]^2 with |w| <= limit, row-major."""
    pts = []
    for iy in range(side):
        y = -0.9 + 1.8 * iy / (side - 1) if side > 1 else 0.0
        for ix in range(side):
            x = -0.9 + 1.8 * ix / (side - 1) if side > 1 else 0.0
            w = complex(x, y)
            if abs(w) <= limit:
                pts.append((z0, w))
    return pts


@dataclass(frozen=True)
class ConvergenceReport:
    gaps_u: tuple       # sup |u_{n+1} - u_n| over the grid, n = 0..n_max-1
    gaps_v: tuple       # sup |v_{n+1} - u_n|
    bounds: tuple       # |log r_{n+1}| / 2^n
    ratios: tuple       # gaps_u[k] / gaps_u[k-1], k >= 1
    fitted_B: float     # max(0, max_n (gap_u(n) 2^n - |log r_{n+1}|))
    points: int

    def total_gap(self) -> float:
        return sum(self.gaps_u)


def convergence_report(t: TowerModel, n_max: int, grid) -> ConvergenceReport:
    """Grid sups of |u_{n+1} - u_n| and |v_{n+1} - u_n| for n < n_max.

    The grid sup is a lower bound for the true sup; the point of the report
    is the decay rate, not the constant. Gap ratios past the first one must
    fall below 0.75 (geometric decay), else CertificationFailure.
    """
    if n_max > t.depth:
        raise RangeError(f"n_max {n_max} exceeds tower depth {t.depth}")
    if isinstance(grid, int):
        points = _slice_grid(complex(0.4, 0.0), grid)
    else:
        points = [(complex(z), complex(w)) for z, w in grid]
    if n_max <= 0:
        return ConvergenceReport(gaps_u=(), gaps_v=(), bounds=(), ratios=(),
                                 fitted_B=0.0, points=len(points))
    ctx = PrecisionContext(bits=precision_for_depth(t.schedule, n_max))
    u_vals = [[eval_u(t, n, z, w, ctx) for (z, w) in points]
              for n in range(n_max + 1)]
    v_vals = [[eval_v(t, n, z, w, ctx) for (z, w) in points]
              for n in range(1, n_max + 1)]
    gaps_u, gaps_v, bounds = [], [], []
    for n in range(n_max):
        gaps_u.append(max(abs(a - b) for a, b in zip(u_vals[n + 1], u_vals[n])))
        gaps_v.append(max(abs(a - b) for a, b in zip(v_vals[n], u_vals[n])))
        bounds.append(_abs_log_r(t, n + 1) / 2 ** n)
    ratios = tuple(gaps_u[k] / gaps_u[k - 1] if gaps_u[k - 1] > 0 else 0.0
                   for k in range(1, n_max))
    for k in range(1, len(ratios)):
        if ratios[k] > 0.75:
            raise CertificationFailure(
                reason="gap ratio exceeds geometric decay",
                location=f"gap({k + 1})/gap({k})",
                measured=ratios[k], bound=0.75)
    fitted = max([0.0] + [gaps_u[n] * 2 ** n - _abs_log_r(t, n + 1)
                          for n in range(n_max)])
    return ConvergenceReport(gaps_u=tuple(gaps_u), gaps_v=tuple(gaps_v),
                             bounds=tuple(bounds), ratios=ratios,
                             fitted_B=fitted, points=len(points))


def harmonic_gap_check(t: TowerModel, n: int, plane: SlicePlane, grid) -> float:
    """Max over the grid, signatures and subdivision children of

        | (1/2) log max(|P_{n+1,(s,j)}|, delta_{n+1})
          - log max(|P_{n,s} - sigma_j|, delta_n / m_{n+1}) |.

    Bounded by |log r_{n+1}| + log 2: deep inside both clips the gap is the
    schedule identity |log(r_{n+1}/4)|/2, outside both clips it is half a
    log of 1 - eps A / (P - sigma)^2 with eps m^2 |A| <= delta_n^2 / 2.
    Violation raises CertificationFailure.
    """
    if n + 1 > t.depth:
        raise RangeError(f"need depth {n + 1}, tower has {t.depth}")
    if isinstance(grid, int):
        points = [w for _, w in _slice_grid(0j, grid)]
    else:
        points = [complex(w) for w in grid]
    delta_n = _delta_frac(t, n)
    delta_child = _delta_frac(t, n + 1)
    m_next = t.schedule.m_seq[n]
    eps = _eps_frac(t, n + 1)
    floor_child2 = delta_child ** 2
    floor_v2 = (delta_n / m_next) ** 2
    grid_next = sigma_grid(t, n + 1)
    ctx = PrecisionContext(bits=precision_for_depth(t.schedule, n + 1))
    bound = _abs_log_r(t, n + 1) + math.log(2.0)
    worst = 0.0
    for w in points:
        zx = plane.z_of_w_exact(ExactComplex(Fraction(w.real), Fraction(w.imag)))
        zp = pt_from_exact(zx, ctx)
        wp = pt_from_exact(ExactComplex(Fraction(w.real), Fraction(w.imag)), ctx)
        eps_anchor = pt_scale(_anchor_point(t, n + 1, zp, wp, ctx), eps, ctx)
        for val in _walk_P_points(t, n, zp, wp, ctx):
            for sg in grid_next:
                shifted = pt_sub(val, pt_from_exact(sg, ctx), ctx)
                child = pt_sub(pt_sqr(shifted, ctx), eps_anchor, ctx)
                term_child = 0.5 * B.to_float(log_max_abs(child, floor_child2, ctx))
                term_v = B.to_float(log_max_abs(shifted, floor_v2, ctx))
                gap = abs(term_child - term_v)
                if gap > worst:
                    worst = gap
    if worst > bound:
        raise CertificationFailure(reason="harmonic gap exceeds the bound",
                                   location=f"depth {n} -> {n + 1}",
                                   measured=worst, bound=bound)
    return worst


def _unpack_direction(zeta):
    z1, z2 = complex(zeta[0]), complex(zeta[1])
    norm = math.hypot(abs(z1), abs(z2))
    if norm == 0:
        raise RangeError("zeta must be nonzero")
    z1, z2 = z1 / norm, z2 / norm
    if abs(z1) > abs(z2) / 100.0:
        raise RangeError("need |zeta_1| <= |zeta_2| / 100 (vertical regime)")
    return z1, z2


def circle_average_T(t: TowerModel, n: int, p, zeta, r, ctx: PrecisionContext,
                     nodes: int = 256) -> float:
    """T_{zeta,r} u_n (p) = r^-2 (mean of u_n over the circle p + r zeta e^{i theta}
    minus u_n(p)), trapezoidal quadrature.

    Trapezoid on a smooth periodic integrand is spectrally accurate; the
    half-node mean is kept as an embedded error check. Subharmonicity forces
    T >= -1e-8 (quadrature slack), violation raises CertificationFailure.
    """
    if nodes < 256:
        raise RangeError("at least 256 quadrature nodes required")
    z, w = complex(p[0]), complex(p[1])
    z1, z2 = _unpack_direction(zeta)
    r = float(r)
    if r <= 0:
        raise RangeError("r must be positive")
    if abs(z) + r * abs(z1) >= 0.5 or abs(w) + r * abs(z2) >= 1.0:
        raise DomainExit(f"circle of radius {r:.3g} at ({z:.3g}, {w:.3g}) "
                         "leaves the closed bidisk domain")
    center = eval_u(t, n, z, w, ctx)

    def mean(count):
        total = 0.0
        for k in range(count):
            e = cmath.exp(2j * math.pi * k / count)
            total += eval_u(t, n, z + r * z1 * e, w + r * z2 * e, ctx)
        return total / count

    coarse = mean(nodes // 2)
    fine = mean(nodes)
    value = (fine - center) / (r * r)
    check = abs(fine - coarse) / (r * r)
    if check > 1e-6 * max(1.0, abs(value)):
        fine2 = mean(2 * nodes)
        if abs(fine2 - fine) / (r * r) > 1e-6 * max(1.0, abs(value)):
            raise CertificationFailure(reason="circle quadrature not converged",
                                       location=f"p=({z:.4g},{w:.4g}) r={r:.4g}",
                                       measured=abs(fine2 - fine) / (r * r),
                                       bound=1e-6)
        value = (fine2 - center) / (r * r)
    if value < -1e-8:
        raise CertificationFailure(reason="negative circle average (subharmonicity)",
                                   location=f"p=({z:.4g},{w:.4g}) r={r:.4g}",
                                   measured=value, bound=-1e-8)
    return value


def jensen_cross_check(t: TowerModel, n: int, p, zeta, r,
                       ctx: Optional[PrecisionContext] = None,
                       nodes: int = 256) -> Tuple[float, float]:
    """(quadrature value, mass-integral value) of T_{zeta,r} u_n (p).

    The mass side integrates the atom-counting function: each depth-n atom
    at plane distance d < r contributes weight * log(r/d) / r^2. An atom
    whose own component disk contains p uses its radius delta_n/|P'| instead
    of d (atoms stand for circles of positive radius, not points), which is
    exactly the value the circle average produces when the clip region stays
    inside the circle and every other atom stays outside.
    """
    z, w = complex(p[0]), complex(p[1])
    z1, z2 = _unpack_direction(zeta)
    r = float(r)
    if ctx is None:
        ctx = PrecisionContext(bits=precision_for_depth(t.schedule, n))
    quadrature = circle_average_T(t, n, p, zeta, r, ctx, nodes=nodes)

    gamma = -z1 / z2
    z0 = z - gamma * w
    plane = SlicePlane.make(ExactComplex(Fraction(z0.real), Fraction(z0.imag)),
                            ExactComplex(Fraction(gamma.real), Fraction(gamma.imag)))
    records = slice_components(t, n, plane, ctx, check_bracket=False)
    weight = Fraction(1, 2 ** n * signature_count(t, n))
    scale = abs(z2)
    total = 0.0
    for rec in records:
        d = abs(rec.center - w) / scale
        d_eff = max(d, rec.conf_radius / scale)
        if d_eff < r:
            total += float(weight) * math.log(r / d_eff)
    return quadrature, total / (r * r)


def interior_sup_check(t: TowerModel, n: int, zeta, r, grids,
                       ctx: Optional[PrecisionContext] = None,
                       band_width: float = 0.05,
                       nodes: int = 256) -> Tuple[float, float]:
    """sup of T_{zeta,r} u_n over an interior grid vs a boundary-band grid.

    One-sided check: interior sup <= band sup + 1e-4 (grid sampling cannot
    certify the reverse). Both grids share the same angular layout and the
    same per-slice w samples: approximate depth-n atoms from the backward
    seed recursion plus a ring at the median atom modulus, so each region is
    sampled at its own sharp points rather than at arbitrary lattice points.
    """
    if isinstance(grids, int):
        n_rho = n_phi = n_w = grids
    else:
        n_rho, n_phi, n_w = grids
    z1, z2 = _unpack_direction(zeta)
    r = float(r)
    if ctx is None:
        ctx = PrecisionContext(bits=precision_for_depth(t.schedule, n))
    margin_w = 1.05 * r * abs(z2)
    margin_z = 1.05 * r * abs(z1)
    if margin_w >= band_width:
        raise DomainExit(f"r = {r:.3g} does not fit inside the boundary band "
                         f"of width {band_width:.3g}")
    gamma = -z1 / z2

    def w_samples(z_center: complex):
        plane = SlicePlane(ExactComplex(Fraction(z_center.real), Fraction(z_center.imag)),
                           ExactComplex(Fraction(gamma.real), Fraction(gamma.imag)))
        out = []
        for idx in range(min(signature_count(t, n), 2)):
            sig = Signature(n, _index_to_tuple(t, n, idx))
            consts = _slice_consts(t, sig, plane)
            out.extend(_backward_seeds(consts, 0j, n))
        radius = statistics.median(abs(v) for v in out) if out else 0.3
        ring = [radius * cmath.exp(2j * math.pi * k / n_w) for k in range(n_w)]
        keep = []
        for cand in out + ring:
            if abs(cand) + margin_w < 1.0 - band_width:
                keep.append(cand)
        return plane, keep

    def sup_over(z_radii):
        best = -math.inf
        for rho in z_radii:
            for j in range(n_phi):
                zc = rho * cmath.exp(2j * math.pi * j / n_phi)
                plane, cands = w_samples(zc)
                for cand in cands:
                    zc_exact = plane.z_of_w_exact(
                        ExactComplex(Fraction(cand.real), Fraction(cand.imag)))
                    point = (complex(zc_exact.to_complex()), cand)
                    val = circle_average_T(t, n, point, (z1, z2), r, ctx, nodes=nodes)
                    if val > best:
                        best = val
        return best

    inner_top = 0.5 - band_width - margin_z
    interior_radii = [(i + 0.5) / n_rho * inner_top for i in range(n_rho)]
    band_lo = 0.5 - band_width
    band_hi = 0.5 - margin_z - 1e-9
    band_radii = [band_lo + (i + 0.5) / n_rho * (band_hi - band_lo)
                  for i in range(n_rho)]
    interior = sup_over(interior_radii)
    band = sup_over(band_radii)
    # w-face collar: u_n is pluriharmonic there, T ~ 0; sample a short ring.
    for j in range(n_phi):
        wc = (1.0 - band_width) * cmath.exp(2j * math.pi * j / n_phi)
        point = (0.2 + 0j, wc)
        val = circle_average_T(t, n, point, (z1, z2), r, ctx, nodes=nodes)
        if val > band:
            band = val
    if interior > band + 1e-4:
        raise CertificationFailure(reason="interior circle-average sup exceeds the boundary band sup",
                                   location=f"depth {n}",
                                   measured=interior, bound=band + 1e-4)
    return interior, band


def _index_to_tuple(t: TowerModel, n: int, flat: int) -> tuple:
    sizes = [len(sigma_grid(t, k)) for k in range(1, n + 1)]
    idx = []
    for size in reversed(sizes):
        idx.append(flat % size)
        flat //= size
    return tuple(reversed(idx))


@dataclass(frozen=True)
class TwoRegimeReport:
    depth: int                 # n: regimes of depth-(n+1) atoms inside depth-n parents
    rows: tuple                # (p, r, mass, regime)
    c_plateau: float           # max (mass * M_{n+1}^2)^(1/n)
    c_quadratic: float         # max (mass * R_n^2 / r^2)^(1/n)
    c_quadratic_atlas: float   # max (mass / (parent mass * (r/rad_n)^2))^(1/n)
    rad_child: float
    rad_int: float
    rad_parent: float


def two_regime_check(t: TowerModel, n: int, plane: SlicePlane, samples: int,
                     ctx: Optional[PrecisionContext] = None) -> TwoRegimeReport:
    """Ball-mass regimes around depth-(n+1) atoms.

    plateau:    rad_{n+1} <= r <= rad_int = rad_n / m_{n+1}, mass vs C^n / M_{n+1}^2
    quadratic:  rad_int <= r <= rad_n,                       mass vs C^n r^2 / R_n^2

    Reports the smallest admissible C per regime, plus an atlas-normalized
    quadratic constant (mass relative to the parent component's mass scaled
    by (r/rad_n)^2) as a diagnostic. ScaleOverlap when the three radii fail
    to decrease strictly at this desk scale.
    """
    if n < 1:
        raise RangeError("two_regime_check needs n >= 1")
    if n + 1 > t.depth:
        raise RangeError(f"need depth {n + 1}, tower has {t.depth}")
    if ctx is None:
        ctx = PrecisionContext(bits=precision_for_depth(t.schedule, n + 1))
    parents = slice_components(t, n, plane, ctx, check_bracket=False)
    children = slice_components(t, n + 1, plane, ctx, check_bracket=False)
    measure = slice_measure(t, n + 1, plane, ctx)
    m_next = t.schedule.m_seq[n]
    log_R = t.schedule.log_R_float(n)
    M_next = math.prod(t.schedule.m_seq[:n + 1])
    parent_weight = Fraction(1, 2 ** n * signature_count(t, n))

    rows = []
    c_pl = c_q = c_qa = 0.0
    rad_child_seen = rad_int_seen = rad_parent_seen = None
    for child in children[:samples]:
        parent = min(parents, key=lambda rec: abs(rec.center - child.center))
        rad_child = child.conf_radius
        rad_parent = parent.conf_radius
        rad_int = rad_parent / m_next
        if not rad_child < rad_int < rad_parent:
            raise ScaleOverlap(
                f"scales do not separate at depth {n}: child {rad_child:.3g}, "
                f"intermediate {rad_int:.3g}, parent {rad_parent:.3g}")
        if rad_child_seen is None:
            rad_child_seen, rad_int_seen, rad_parent_seen = rad_child, rad_int, rad_parent
        p = child.center
        for r in _geomspace(rad_child, rad_int, 4):
            mass = float(measure.ball_mass(p, r))
            rows.append((p, r, mass, "plateau"))
            c_pl = max(c_pl, (mass * M_next * M_next) ** (1.0 / n))
        for r in _geomspace(rad_int, rad_parent, 4):
            mass = float(measure.ball_mass(p, r))
            rows.append((p, r, mass, "quadratic"))
            c_q = max(c_q, (mass * math.exp(2 * log_R) / (r * r)) ** (1.0 / n))
            rel = mass / (float(parent_weight) * (r / rad_parent) ** 2)
            c_qa = max(c_qa, rel ** (1.0 / n))
    return TwoRegimeReport(depth=n, rows=tuple(rows), c_plateau=c_pl,
                           c_quadratic=c_q, c_quadratic_atlas=c_qa,
                           rad_child=rad_child_seen, rad_int=rad_int_seen,
                           rad_parent=rad_parent_seen)


def _geomspace(lo: float, hi: float, count: int):
    if not 0 < lo <= hi:
        raise RangeError("geometric range needs 0 < lo <= hi")
    if count == 1:
        return [lo]
    step = (hi / lo) ** (1.0 / (count - 1))
    return [lo * step ** i for i in range(count)]


@dataclass(frozen=True)
class DimensionEstimate:
    depth: int
    count: int
    median_radius: float
    estimate: float


def box_dimension_slice(t: TowerModel, plane: SlicePlane, depths,
                        ctx: Optional[PrecisionContext] = None) -> tuple:
    """Per-depth box-counting estimate log(count) / log(1/median radius).

    Counts are the 2^n #S_n components of the atlas; the radius is the
    median conformal-radius proxy. Depth 0 is the single unit component,
    estimate 0 by convention (log 1 = 0).
    """
    out = []
    for d in sorted(set(int(d) for d in depths)):
        if d > t.depth:
            raise RangeError(f"depth {d} exceeds tower depth {t.depth}")
        local = ctx or PrecisionContext(bits=precision_for_depth(t.schedule, d))
        comps = slice_components(t, d, plane, local, check_bracket=False)
        radii = [rec.conf_radius for rec in comps]
        med = statistics.median(radii)
        count = len(comps)
        est = math.log(count) / math.log(1.0 / med) if med < 1.0 else 0.0
        out.append(DimensionEstimate(depth=d, count=count,
                                     median_radius=med, estimate=est))
    return tuple(out)
