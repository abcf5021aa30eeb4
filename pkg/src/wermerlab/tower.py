"""Recursive polynomial towers: anchors, sigma grids, signatures, potentials.

The family is defined by P_0 = w and

    P_{k+1,(s,sigma)} = (P_{k,s} - sigma)^2 - eps_{k+1} * A_{k+1}

with A_k(z,w) = z - a_k for odd k and z + w/100 - a_k for even k, anchors a_k
drawn from a fixed deterministic enumeration of D(0,1/4), and sigma running
over the grid Sigma_{k+1}. Everything here is exact where it can be: anchors
and grid points are ExactComplex (the grid membership test is a pure integer
inequality), floats appear only at the final reduction of potentials.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

from .backend import active as B
from .errors import BudgetExceeded, EnumerationCapExceeded, RangeError
from .numeric import (EC_ZERO, ExactComplex, Inclusion, IntervalComplex,
                      PrecisionContext, classify_disk, log_max_abs,
                      precision_for_depth, pt_add, pt_from_exact, pt_mul,
                      pt_scale, pt_sqr, pt_sub)
from .schedule import ParameterSchedule

ENUMERATION_CAP = 10 ** 6

_SNAP = 1 << 48
_GOLD = 0.6180339887498949


def _vdc(j: int, base: int) -> float:
    """Van der Corput radical inverse of j in the given base."""
    v, denom = 0.0, 1.0
    while j:
        j, digit = divmod(j, base)
        denom *= base
        v += digit / denom
    return v


def _snap_fraction(x: float) -> Fraction:
    return Fraction(round(x * _SNAP), _SNAP)


@dataclass(frozen=True)
class AnchorSequence:
    """Deterministic anchors a_n dense in D(0,1/4), split by parity.

    Odd and even indices come from two independent low-discrepancy spirals
    (Halton radial maps in bases (2,3) and (5,7)); the seed rotates both.
    a_1 = 0 is pinned for every seed so the worked examples are stable.
    Coordinates are snapped to dyadic rationals at 48 bits, which keeps all
    downstream arithmetic exact while moving each point by less than 1e-14.
    """
    seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def a(self, n: int) -> ExactComplex:
        if n < 1:
            raise ValueError("anchors are indexed from 1")
        hit = self._cache.get(n)
        if hit is not None:
            return hit
        if n == 1:
            val = EC_ZERO
        else:
            even = n % 2 == 0
            j = n // 2 if even else (n + 1) // 2
            b_rad, b_ang = (5, 7) if even else (2, 3)
            u = _vdc(j, b_rad)
            ang = 2 * math.pi * ((_vdc(j, b_ang) + self.seed * _GOLD) % 1.0)
            rho = 0.25 * math.sqrt(u) * (1 - 2.0 ** -16)
            val = ExactComplex(_snap_fraction(rho * math.cos(ang)),
                               _snap_fraction(rho * math.sin(ang)))
            if val.abs2() >= Fraction(1, 16):
                raise AssertionError("anchor escaped D(0,1/4)")
        self._cache[n] = val
        return val

    @staticmethod
    def w_coeff(n: int) -> Fraction:
        """Coefficient of w in A_n: 0 for odd n, 1/100 for even n."""
        return Fraction(1, 100) if n % 2 == 0 else Fraction(0)


@dataclass(frozen=True)
class TowerModel:
    schedule: ParameterSchedule
    anchors: AnchorSequence
    depth: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def make(cls, schedule: ParameterSchedule, seed: int = 0, depth: Optional[int] = None):
        depth = schedule.depth if depth is None else depth
        if depth > schedule.depth:
            raise ValueError("tower depth exceeds schedule depth")
        return cls(schedule=schedule, anchors=AnchorSequence(seed=seed), depth=depth)

    def description(self) -> str:
        ms = ",".join(str(m) for m in self.schedule.m_seq)
        rs = ",".join(f"{r.numerator}/{r.denominator}" for r in self.schedule.r_seq)
        return f"tower(depth={self.depth};seed={self.anchors.seed};r={rs};m={ms})"


def _delta_frac(t: TowerModel, n: int) -> Fraction:
    d = t.schedule.delta_frac[n]
    if d is None:
        raise BudgetExceeded(0, 0, detail=f"exact delta_{n} unavailable (size cap)")
    return d


def _eps_frac(t: TowerModel, k: int) -> Fraction:
    e = t.schedule.eps_frac[k]
    if e is None:
        raise BudgetExceeded(0, 0, detail=f"exact eps_{k} unavailable (size cap)")
    return e


def sigma_grid(t: TowerModel, n: int):
    """Sigma_n = closed disk of radius delta_{n-1}(1 - 1/m_n) on the lattice
    (3 delta_{n-1}/m_n) Z^2, enumerated lexicographically in (j, k).

    Membership is the integer inequality 9(j^2 + k^2) <= (m_n - 1)^2, so the
    grid is exact. m_n = 1 gives {0}.
    """
    if n < 1 or n > t.schedule.depth:
        raise ValueError("grid level out of range")
    key = ("grid", n)
    hit = t._cache.get(key)
    if hit is not None:
        return hit
    m = t.schedule.m_seq[n - 1]
    step = 3 * _delta_frac(t, n - 1) / m
    bound = (m - 1) ** 2
    jmax = (m - 1) // 3
    pts = []
    for j in range(-jmax, jmax + 1):
        for k in range(-jmax, jmax + 1):
            if 9 * (j * j + k * k) <= bound:
                pts.append(ExactComplex(j * step, k * step))
    out = tuple(pts)
    t._cache[key] = out
    return out


def signature_count(t: TowerModel, n: int) -> int:
    c = 1
    for k in range(1, n + 1):
        c *= len(sigma_grid(t, k))
    return c


@dataclass(frozen=True)
class Signature:
    """Grid choices (sigma_1..sigma_n) stored as indices into the grids."""
    n: int
    idx: tuple

    def __post_init__(self):
        if len(self.idx) != self.n:
            raise ValueError("index vector length must equal depth")

    def sigma(self, t: TowerModel):
        return tuple(sigma_grid(t, k + 1)[i] for k, i in enumerate(self.idx))

    def parent(self) -> "Signature":
        if self.n == 0:
            raise ValueError("root signature has no parent")
        return Signature(self.n - 1, self.idx[:-1])

    def child(self, i: int) -> "Signature":
        return Signature(self.n + 1, self.idx + (i,))

    def index_int(self, t: TowerModel) -> int:
        """Mixed-radix integer with level 1 most significant."""
        v = 0
        for k, i in enumerate(self.idx):
            v = v * len(sigma_grid(t, k + 1)) + i
        return v

    @classmethod
    def from_index_int(cls, t: TowerModel, n: int, v: int) -> "Signature":
        sizes = [len(sigma_grid(t, k)) for k in range(1, n + 1)]
        idx = []
        for size in reversed(sizes):
            v, i = divmod(v, size)
            idx.append(i)
        if v:
            raise ValueError("index out of range")
        return cls(n, tuple(reversed(idx)))


def all_signatures(t: TowerModel, n: int) -> Iterator[Signature]:
    """Deterministic lexicographic enumeration of S_n."""
    sizes = [len(sigma_grid(t, k)) for k in range(1, n + 1)]

    def rec(k, acc):
        if k == n:
            yield Signature(n, tuple(acc))
            return
        for i in range(sizes[k]):
            acc.append(i)
            yield from rec(k + 1, acc)
            acc.pop()

    yield from rec(0, [])


PointLike = Union[complex, ExactComplex]


def _to_exact(v) -> ExactComplex:
    if isinstance(v, ExactComplex):
        return v
    if isinstance(v, complex):
        return ExactComplex(Fraction(v.real), Fraction(v.imag))
    return ExactComplex(Fraction(v), Fraction(0))


def _require_domain(zx: ExactComplex, wx: ExactComplex):
    if zx.abs2() >= Fraction(1, 4):
        raise RangeError(f"|z| must be < 1/2, got |z|^2 = {float(zx.abs2()):.6f}")
    if wx.abs2() >= 1:
        raise RangeError(f"|w| must be < 1, got |w|^2 = {float(wx.abs2()):.6f}")


def _require_bits(t: TowerModel, n: int, ctx: PrecisionContext):
    need = precision_for_depth(t.schedule, n, ctx.max_bits)
    if ctx.bits < need:
        raise BudgetExceeded(need, ctx.bits,
                             detail=f"depth {n} needs {need} bits, context has {ctx.bits}")


def eval_P(t: TowerModel, s: Signature, z, w, ctx: PrecisionContext):
    """P_{n,s}(z, w). Point inputs give a rounded point; IntervalComplex
    inputs give a certified enclosure."""
    if isinstance(z, IntervalComplex) or isinstance(w, IntervalComplex):
        return _eval_P_interval(t, s, z, w, ctx)
    zx, wx = _to_exact(z), _to_exact(w)
    _require_domain(zx, wx)
    _require_bits(t, s.n, ctx)
    zp = pt_from_exact(zx, ctx)
    wp = pt_from_exact(wx, ctx)
    val = wp
    for k, sig in enumerate(s.sigma(t), start=1):
        a_term = _anchor_point(t, k, zp, wp, ctx)
        val = pt_sub(pt_sqr(pt_sub(val, pt_from_exact(sig, ctx), ctx), ctx),
                     pt_scale(a_term, _eps_frac(t, k), ctx), ctx)
    return val


def _anchor_point(t: TowerModel, k: int, zp, wp, ctx):
    """A_k(z, w) as a backend point: z (+ w/100 for even k) - a_k."""
    a = t.anchors.a(k)
    val = pt_sub(zp, pt_from_exact(a, ctx), ctx)
    cw = AnchorSequence.w_coeff(k)
    if cw:
        val = pt_add(val, pt_scale(wp, cw, ctx), ctx)
    return val


def _anchor_interval(t: TowerModel, k: int, zi: IntervalComplex, wi: IntervalComplex, ctx):
    a = IntervalComplex.from_exact(t.anchors.a(k), ctx)
    val = zi.sub(a, ctx)
    cw = AnchorSequence.w_coeff(k)
    if cw:
        val = val.add(wi.scale_exact(cw, ctx), ctx)
    return val


def _as_interval(v, ctx) -> IntervalComplex:
    if isinstance(v, IntervalComplex):
        return v
    return IntervalComplex.from_exact(_to_exact(v), ctx)


def _eval_P_interval(t, s, z, w, ctx):
    _require_bits(t, s.n, ctx)
    zi, wi = _as_interval(z, ctx), _as_interval(w, ctx)
    val = wi
    for k, sig in enumerate(s.sigma(t), start=1):
        a_term = _anchor_interval(t, k, zi, wi, ctx)
        val = val.sub(IntervalComplex.from_exact(sig, ctx), ctx).square(ctx) \
                 .sub(a_term.scale_exact(_eps_frac(t, k), ctx), ctx)
    return val


def eval_dP(t: TowerModel, s: Signature, z, w, ctx: PrecisionContext):
    """d/dw of P_{n,s} at fixed z, by the forward recursion
    P'_{k+1} = 2 (P_k - sigma) P'_k - eps_{k+1} A'_{k+1} with A' = 0 or 1/100."""
    if isinstance(z, IntervalComplex) or isinstance(w, IntervalComplex):
        return _eval_dP_interval(t, s, z, w, ctx)
    zx, wx = _to_exact(z), _to_exact(w)
    _require_domain(zx, wx)
    _require_bits(t, s.n, ctx)
    zp = pt_from_exact(zx, ctx)
    wp = pt_from_exact(wx, ctx)
    val = wp
    dval = pt_from_exact(ExactComplex(Fraction(1), Fraction(0)), ctx)
    for k, sig in enumerate(s.sigma(t), start=1):
        shifted = pt_sub(val, pt_from_exact(sig, ctx), ctx)
        eps = _eps_frac(t, k)
        new_d = pt_mul(pt_add(shifted, shifted, ctx), dval, ctx)
        cw = AnchorSequence.w_coeff(k)
        if cw:
            dA = pt_from_exact(ExactComplex(cw, Fraction(0)), ctx)
            new_d = pt_sub(new_d, pt_scale(dA, eps, ctx), ctx)
        val = pt_sub(pt_sqr(shifted, ctx), pt_scale(_anchor_point(t, k, zp, wp, ctx), eps, ctx), ctx)
        dval = new_d
    return dval


def _eval_dP_interval(t, s, z, w, ctx):
    _require_bits(t, s.n, ctx)
    zi, wi = _as_interval(z, ctx), _as_interval(w, ctx)
    val = wi
    one = ExactComplex(Fraction(1), Fraction(0))
    dval = IntervalComplex.from_exact(one, ctx)
    for k, sig in enumerate(s.sigma(t), start=1):
        shifted = val.sub(IntervalComplex.from_exact(sig, ctx), ctx)
        eps = _eps_frac(t, k)
        new_d = shifted.add(shifted, ctx).mul(dval, ctx)
        cw = AnchorSequence.w_coeff(k)
        if cw:
            dA = IntervalComplex.from_exact(ExactComplex(cw, Fraction(0)), ctx)
            new_d = new_d.sub(dA.scale_exact(eps, ctx), ctx)
        val = shifted.square(ctx).sub(_anchor_interval(t, k, zi, wi, ctx).scale_exact(eps, ctx), ctx)
        dval = new_d
    return dval


def _walk_P_points(t: TowerModel, n: int, zp, wp, ctx) -> Iterator:
    """All P_{n,s}(z,w) in lexicographic signature order, sharing prefixes."""
    eps_A = []
    for k in range(1, n + 1):
        eps_A.append(pt_scale(_anchor_point(t, k, zp, wp, ctx), _eps_frac(t, k), ctx))
    grids = [tuple(pt_from_exact(g, ctx) for g in sigma_grid(t, k)) for k in range(1, n + 1)]

    def rec(k, val):
        if k == n:
            yield val
            return
        for sg in grids[k]:
            yield from rec(k + 1, pt_sub(pt_sqr(pt_sub(val, sg, ctx), ctx), eps_A[k], ctx))

    yield from rec(0, wp)


def eval_u(t: TowerModel, n: int, z, w, ctx: PrecisionContext, mode: str = "exact",
           samples: int = 2048, rng_seed: int = 0):
    """u_n(z,w) = (1 / (2^n #S_n)) * sum_s log max(|P_{n,s}(z,w)|, delta_n).

    Exact mode enumerates every signature (EnumerationCapExceeded beyond the
    cap); sample mode averages over uniformly drawn signatures and returns
    (mean, standard_error) instead of a bare float.
    """
    zx, wx = _to_exact(z), _to_exact(w)
    _require_domain(zx, wx)
    _require_bits(t, n, ctx)
    count = signature_count(t, n)
    floor2 = _delta_frac(t, n) ** 2
    zp, wp = pt_from_exact(zx, ctx), pt_from_exact(wx, ctx)
    p = ctx.bits

    if mode == "exact":
        if count > ENUMERATION_CAP:
            raise EnumerationCapExceeded(count, ENUMERATION_CAP)
        acc = B.from_int(0, p, "n")
        for val in _walk_P_points(t, n, zp, wp, ctx):
            acc = B.add(acc, log_max_abs(val, floor2, ctx), p, "n")
        scale = B.from_fraction(Fraction(1, (2 ** n) * count), p, "n")
        return B.to_float(B.mul(acc, scale, p, "n"))

    if mode != "sample":
        raise ValueError("mode must be 'exact' or 'sample'")
    rng = random.Random(rng_seed)
    sizes = [len(sigma_grid(t, k)) for k in range(1, n + 1)]
    vals = []
    for _ in range(samples):
        sig = Signature(n, tuple(rng.randrange(size) for size in sizes))
        term = log_max_abs(eval_P(t, sig, zx, wx, ctx), floor2, ctx)
        vals.append(B.to_float(term) / 2 ** n)
    mean = sum(vals) / len(vals)
    var = sum((v - mean) ** 2 for v in vals) / max(len(vals) - 1, 1)
    return mean, math.sqrt(var / len(vals))


def eval_v(t: TowerModel, n_plus_1: int, z, w, ctx: PrecisionContext):
    """Subdivision-step potential at level n+1:

        v_{n+1} = (1 / (2^n #S_{n+1})) * sum_{(s,sigma)}
                  log max(|P_{n,s} - sigma|, delta_n / m_{n+1}).

    Note the 2^n (not 2^{n+1}): v interpolates between u_n and u_{n+1} before
    the squaring step doubles the degree.
    """
    if n_plus_1 < 1:
        raise ValueError("eval_v needs level >= 1")
    n = n_plus_1 - 1
    zx, wx = _to_exact(z), _to_exact(w)
    _require_domain(zx, wx)
    _require_bits(t, n_plus_1, ctx)
    m = t.schedule.m_seq[n]
    count = signature_count(t, n_plus_1)
    if count > ENUMERATION_CAP:
        raise EnumerationCapExceeded(count, ENUMERATION_CAP)
    floor2 = (_delta_frac(t, n) / m) ** 2
    zp, wp = pt_from_exact(zx, ctx), pt_from_exact(wx, ctx)
    p = ctx.bits
    grid_pts = tuple(pt_from_exact(g, ctx) for g in sigma_grid(t, n_plus_1))
    acc = B.from_int(0, p, "n")
    for val in _walk_P_points(t, n, zp, wp, ctx):
        for sg in grid_pts:
            acc = B.add(acc, log_max_abs(pt_sub(val, sg, ctx), floor2, ctx), p, "n")
    scale = B.from_fraction(Fraction(1, (2 ** n) * count), p, "n")
    return B.to_float(B.mul(acc, scale, p, "n"))


@dataclass(frozen=True)
class MembershipResult:
    depth: int
    status: str  # "certified" | "unknown"
    inside_counts: tuple


def membership_depth(t: TowerModel, z, w, ctx: PrecisionContext) -> MembershipResult:
    """Largest certified n with (z,w) in X_n = union of {|P_{n,s}| < delta_n}.

    Children of certified-outside signatures are pruned (the nested-disks
    lemma makes them outside too); unknown parents keep propagating, so a
    deeper level can still certify. depth -1 means certified outside X_0.
    """
    zi, wi = _as_interval(z, ctx), _as_interval(w, ctx)
    best = -1
    inside_counts = []
    unknown_any = []
    frontier = [(Signature(0, ()), wi)]  # P_0 = w
    for n in range(0, t.depth + 1):
        radius = _delta_frac(t, n)
        inside_here = 0
        unknown_here = False
        survivors = []
        for sig, box in frontier:
            cls = classify_disk(box, radius)
            if cls is Inclusion.INSIDE:
                inside_here += 1
                survivors.append((sig, box))
            elif cls is Inclusion.UNKNOWN:
                unknown_here = True
                survivors.append((sig, box))
        inside_counts.append(inside_here)
        unknown_any.append(unknown_here)
        if inside_here:
            best = n
        if not survivors or n == t.depth:
            break
        grid = sigma_grid(t, n + 1)
        eps = _eps_frac(t, n + 1)
        a_term = _anchor_interval(t, n + 1, zi, wi, ctx).scale_exact(eps, ctx)
        frontier = []
        for sig, box in survivors:
            for i, sg in enumerate(grid):
                child_box = box.sub(IntervalComplex.from_exact(sg, ctx), ctx) \
                               .square(ctx).sub(a_term, ctx)
                frontier.append((sig.child(i), child_box))
    # The claim "in X_best" is exact. Whether the point also fails X_{best+1}
    # is settled only if that level was examined and had no unknown boxes;
    # unknowns at or below best are irrelevant to the reported depth.
    if best == t.depth or best + 1 >= len(unknown_any):
        status = "certified"
    else:
        status = "certified" if not unknown_any[best + 1] else "unknown"
    return MembershipResult(depth=best, status=status, inside_counts=tuple(inside_counts))
