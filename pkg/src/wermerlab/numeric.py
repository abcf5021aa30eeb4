"""Adjustable-precision complex arithmetic and rectangular interval arithmetic.

Three layers share the directed-rounding backend:

* ExactComplex, Gaussian rationals over fractions.Fraction, the exactness
  oracle that everything else is tested against;
* point arithmetic, pairs of backend reals combined with nearest rounding,
  used for diagnostics and root refinement;
* IntervalComplex, rectangles with outward-rounded endpoints, used for every
  certified claim.

By design this module touches no transcendental function beyond log, exp and
sqrt on reals plus the complex modulus. Precision is always passed explicitly
through a PrecisionContext; there is no ambient global state, and every value
is immutable, so all operations are safe for unrestricted concurrent use.

The precision policy follows the doubly-exponential decay of the tower
scales: evaluating at depth n needs max(64, ceil(2*log2(1/delta_n)) + 64)
significand bits, i.e. twice the bits of the smallest resolved scale plus a
64-bit guard for the 2^n-deep recursion's rounding accumulation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from .backend import active as B
from .errors import BudgetExceeded, ContainsZero

DEFAULT_MAX_BITS = 4096


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision in bits plus the hard budget it must respect."""

    bits: int = 64
    max_bits: int = DEFAULT_MAX_BITS

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError(f"bits must be >= 64, got {self.bits}")
        if self.bits > self.max_bits:
            raise ValueError(f"bits={self.bits} exceeds max_bits={self.max_bits}")

    @classmethod
    def for_depth(cls, schedule, n, max_bits=DEFAULT_MAX_BITS):
        return cls(bits=precision_for_depth(schedule, n, max_bits=max_bits), max_bits=max_bits)


def _ceil_2log2_inverse(delta: Fraction) -> int:
    """Smallest integer t with (1/delta)^2 <= 2^t, computed exactly."""
    p, q = delta.numerator, delta.denominator
    d = q * q
    e = p * p
    t = d.bit_length() - e.bit_length()
    while (e << t) < d if t >= 0 else e < (d << -t):
        t += 1
    while t > 0 and (e << (t - 1)) >= d:
        t -= 1
    return t


def precision_for_depth(schedule, n, max_bits=DEFAULT_MAX_BITS):
    """Bits needed to evaluate the tower at depth n of the given schedule.

    Exact integer arithmetic when the schedule retains delta_n as a rational;
    otherwise a certified over-estimate from the stored log bounds (possibly
    one bit above the exact ceiling, never below).

    Raises BudgetExceeded when the answer exceeds max_bits: evaluation at this
    depth is infeasible and the caller must reduce n.
    """
    if n > schedule.depth:
        raise ValueError(f"depth {n} exceeds schedule depth {schedule.depth}")
    fr = schedule.delta_frac[n]
    if fr is not None:
        t = _ceil_2log2_inverse(fr)
    else:
        # log_delta endpoints are certified; the lower one gives the larger t.
        lo, _hi = schedule.log_delta[n]
        t = math.ceil(-B.to_float(lo) * 2.0 / math.log(2.0)) + 1
    bits = max(64, t + 64)
    if bits > max_bits:
        raise BudgetExceeded(bits, max_bits, detail=f"tower depth n={n}")
    return bits


@dataclass(frozen=True)
class ExactComplex:
    """Gaussian rational: the exactness oracle for point and interval code."""

    re: Fraction
    im: Fraction

    @classmethod
    def make(cls, re, im=0):
        return cls(Fraction(re), Fraction(im))

    def __add__(self, o):
        return ExactComplex(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return ExactComplex(self.re - o.re, self.im - o.im)

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def __mul__(self, o):
        if isinstance(o, ExactComplex):
            return ExactComplex(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)
        f = Fraction(o)
        return ExactComplex(self.re * f, self.im * f)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, ExactComplex):
            d = o.abs2()
            if d == 0:
                raise ZeroDivisionError("division by exact zero")
            c = self * o.conj()
            return ExactComplex(c.re / d, c.im / d)
        f = Fraction(o)
        return ExactComplex(self.re / f, self.im / f)

    def conj(self):
        return ExactComplex(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0


EC_ZERO = ExactComplex(Fraction(0), Fraction(0))
EC_ONE = ExactComplex(Fraction(1), Fraction(0))


# ---------------------------------------------------------------------------
# Point layer: (re, im) tuples of backend reals, nearest rounding.

def _coerce_real(x, prec, rnd="n"):
    if isinstance(x, Fraction):
        return B.from_fraction(x, prec, rnd)
    if isinstance(x, int):
        return B.from_int(x, prec, rnd)
    if isinstance(x, float):
        return B.from_float(x, prec, rnd)
    return x  # already a backend real


def pt(re, im, ctx):
    return (_coerce_real(re, ctx.bits), _coerce_real(im, ctx.bits))


def pt_from_exact(z: ExactComplex, ctx):
    return (B.from_fraction(z.re, ctx.bits, "n"), B.from_fraction(z.im, ctx.bits, "n"))


def pt_add(u, v, ctx):
    p = ctx.bits
    return (B.add(u[0], v[0], p, "n"), B.add(u[1], v[1], p, "n"))


def pt_sub(u, v, ctx):
    p = ctx.bits
    return (B.sub(u[0], v[0], p, "n"), B.sub(u[1], v[1], p, "n"))


def pt_neg(u):
    return (B.neg(u[0]), B.neg(u[1]))


def pt_mul(u, v, ctx):
    p = ctx.bits
    a, b = u
    c, d = v
    re = B.sub(B.mul(a, c, p, "n"), B.mul(b, d, p, "n"), p, "n")
    im = B.add(B.mul(a, d, p, "n"), B.mul(b, c, p, "n"), p, "n")
    return (re, im)


def pt_sqr(u, ctx):
    p = ctx.bits
    a, b = u
    re = B.sub(B.mul(a, a, p, "n"), B.mul(b, b, p, "n"), p, "n")
    ab = B.mul(a, b, p, "n")
    return (re, B.add(ab, ab, p, "n"))


def pt_abs2(u, ctx):
    p = ctx.bits
    return B.add(B.mul(u[0], u[0], p, "n"), B.mul(u[1], u[1], p, "n"), p, "n")


def pt_abs(u, ctx):
    return B.sqrt(pt_abs2(u, ctx), ctx.bits, "n")


def pt_div(u, v, ctx):
    p = ctx.bits
    d = pt_abs2(v, ctx)
    if B.sign(d) == 0:
        raise ZeroDivisionError("complex point division by zero")
    num = pt_mul(u, (v[0], B.neg(v[1])), ctx)
    return (B.div(num[0], d, p, "n"), B.div(num[1], d, p, "n"))


def pt_scale(u, fr: Fraction, ctx):
    p = ctx.bits
    f = B.from_fraction(fr, p, "n")
    return (B.mul(u[0], f, p, "n"), B.mul(u[1], f, p, "n"))


def pt_sqrt_principal(u, ctx):
    """Principal complex square root, nearest rounding.

    Stable two-case form: no trigonometry, only real sqrt and division.
    On the branch cut (re < 0, im = 0) returns the limit from above (+i sqrt).
    """
    p = ctx.bits
    a, b = u
    sa, sb = B.sign(a), B.sign(b)
    if sa == 0 and sb == 0:
        z = B.from_int(0, p, "n")
        return (z, z)
    m = B.sqrt(B.add(B.mul(a, a, p, "n"), B.mul(b, b, p, "n"), p, "n"), p, "n")
    half = Fraction(1, 2)
    if sa >= 0:
        pr = B.sqrt(B.mul(B.add(m, a, p, "n"), B.from_fraction(half, p, "n"), p, "n"), p, "n")
        if sb == 0:
            return (pr, B.from_int(0, p, "n"))
        qi = B.div(b, B.add(pr, pr, p, "n"), p, "n")
        return (pr, qi)
    t = B.sqrt(B.mul(B.sub(m, a, p, "n"), B.from_fraction(half, p, "n"), p, "n"), p, "n")
    if sb == 0:
        return (B.from_int(0, p, "n"), t)
    qi = t if sb > 0 else B.neg(t)
    pr = B.div(b, B.add(qi, qi, p, "n"), p, "n")
    return (pr, qi)


def pt_to_complex(u) -> complex:
    return complex(B.to_float(u[0]), B.to_float(u[1]))


def pt_to_exact(u) -> ExactComplex:
    return ExactComplex(B.to_fraction(u[0]), B.to_fraction(u[1]))


def log_max_abs(u, floor2: Fraction, ctx):
    """log max(|u|, sqrt(floor2)) as a backend real, floor given squared.

    Works on |u|^2 throughout so no square root is taken: the result is
    0.5 * log(max(|u|^2, floor2)).
    """
    p = ctx.bits
    a2 = pt_abs2(u, ctx)
    f2 = B.from_fraction(floor2, p, "n")
    big = a2 if B.cmp(a2, f2) >= 0 else f2
    return B.mul(B.log(big, p, "n"), B.from_fraction(Fraction(1, 2), p, "n"), p, "n")


# ---------------------------------------------------------------------------
# Interval layer: real intervals are (lo, hi) tuples of backend reals.

def _r_from_exact(x: Fraction, prec):
    return (B.from_fraction(x, prec, "f"), B.from_fraction(x, prec, "c"))


def _r_add(x, y, p):
    return (B.add(x[0], y[0], p, "f"), B.add(x[1], y[1], p, "c"))


def _r_sub(x, y, p):
    return (B.sub(x[0], y[1], p, "f"), B.sub(x[1], y[0], p, "c"))


def _r_neg(x):
    return (B.neg(x[1]), B.neg(x[0]))


def _r_mul(x, y, p):
    los = [B.mul(x[i], y[j], p, "f") for i in (0, 1) for j in (0, 1)]
    his = [B.mul(x[i], y[j], p, "c") for i in (0, 1) for j in (0, 1)]
    lo = los[0]
    for v in los[1:]:
        if B.cmp(v, lo) < 0:
            lo = v
    hi = his[0]
    for v in his[1:]:
        if B.cmp(v, hi) > 0:
            hi = v
    return (lo, hi)


def _r_sqr(x, p):
    sl, sh = B.sign(x[0]), B.sign(x[1])
    if sl >= 0:
        return (B.mul(x[0], x[0], p, "f"), B.mul(x[1], x[1], p, "c"))
    if sh <= 0:
        return (B.mul(x[1], x[1], p, "f"), B.mul(x[0], x[0], p, "c"))
    c1 = B.mul(x[0], x[0], p, "c")
    c2 = B.mul(x[1], x[1], p, "c")
    return (B.from_int(0, p, "f"), c1 if B.cmp(c1, c2) >= 0 else c2)


def _r_div_pos(x, d, p):
    # d = (dlo, dhi) with dlo > 0.
    lo1 = B.div(x[0], d[0], p, "f")
    lo2 = B.div(x[0], d[1], p, "f")
    hi1 = B.div(x[1], d[0], p, "c")
    hi2 = B.div(x[1], d[1], p, "c")
    return (lo1 if B.cmp(lo1, lo2) < 0 else lo2, hi1 if B.cmp(hi1, hi2) > 0 else hi2)


def _r_scale_half(x, p):
    h = B.from_fraction(Fraction(1, 2), p, "n")
    return (B.mul(x[0], h, p, "f"), B.mul(x[1], h, p, "c"))


class Inclusion(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNKNOWN = "unknown"


class IntervalComplex:
    """Rectangular complex interval with outward-rounded endpoints.

    Immutable. The exact image of the represented set under each operation is
    contained in the returned rectangle (inclusion monotonicity). Rectangles
    were chosen over disks deliberately: outward rounding is four directed
    endpoint operations, and all certified claims downstream are
    open-condition inclusions with slack.
    """

    __slots__ = ("re_lo", "re_hi", "im_lo", "im_hi")

    def __init__(self, re_lo, re_hi, im_lo, im_hi):
        object.__setattr__(self, "re_lo", re_lo)
        object.__setattr__(self, "re_hi", re_hi)
        object.__setattr__(self, "im_lo", im_lo)
        object.__setattr__(self, "im_hi", im_hi)

    def __setattr__(self, *_):
        raise AttributeError("IntervalComplex is immutable")

    # -- construction ------------------------------------------------------

    @classmethod
    def from_exact(cls, z, ctx):
        """Degenerate (point) interval from an ExactComplex, outward rounded."""
        p = ctx.bits
        r = _r_from_exact(z.re, p)
        i = _r_from_exact(z.im, p)
        return cls(r[0], r[1], i[0], i[1])

    @classmethod
    def from_box(cls, re_lo, re_hi, im_lo, im_hi, ctx):
        """Box with Fraction corners, outward rounded."""
        if re_lo > re_hi or im_lo > im_hi:
            raise ValueError("empty box")
        p = ctx.bits
        return cls(B.from_fraction(Fraction(re_lo), p, "f"),
                   B.from_fraction(Fraction(re_hi), p, "c"),
                   B.from_fraction(Fraction(im_lo), p, "f"),
                   B.from_fraction(Fraction(im_hi), p, "c"))

    @classmethod
    def from_point(cls, u, ctx):
        """Degenerate interval around an existing backend point (exact)."""
        del ctx
        return cls(u[0], u[0], u[1], u[1])

    @classmethod
    def from_center_halfwidth(cls, center, halfwidth: Fraction, ctx):
        """Box around a backend point; halfwidth an exact Fraction."""
        p = ctx.bits
        h_hi = B.from_fraction(halfwidth, p, "c")
        return cls(B.sub(center[0], h_hi, p, "f"), B.add(center[0], h_hi, p, "c"),
                   B.sub(center[1], h_hi, p, "f"), B.add(center[1], h_hi, p, "c"))

    # -- views -------------------------------------------------------------

    def _re(self):
        return (self.re_lo, self.re_hi)

    def _im(self):
        return (self.im_lo, self.im_hi)

    def to_fractions(self):
        return (B.to_fraction(self.re_lo), B.to_fraction(self.re_hi),
                B.to_fraction(self.im_lo), B.to_fraction(self.im_hi))

    def mid_point(self, ctx):
        rl, rh, il, ih = self.to_fractions()
        return pt_from_exact(ExactComplex((rl + rh) / 2, (il + ih) / 2), ctx)

    def contains_exact(self, z: ExactComplex) -> bool:
        rl, rh, il, ih = self.to_fractions()
        return rl <= z.re <= rh and il <= z.im <= ih

    def contains_zero(self) -> bool:
        return (B.sign(self.re_lo) <= 0 and B.sign(self.re_hi) >= 0
                and B.sign(self.im_lo) <= 0 and B.sign(self.im_hi) >= 0)

    def is_inside_interior_of(self, other) -> bool:
        return (B.cmp(self.re_lo, other.re_lo) > 0 and B.cmp(self.re_hi, other.re_hi) < 0
                and B.cmp(self.im_lo, other.im_lo) > 0 and B.cmp(self.im_hi, other.im_hi) < 0)

    def overlaps(self, other) -> bool:
        return not (B.cmp(self.re_hi, other.re_lo) < 0 or B.cmp(other.re_hi, self.re_lo) < 0
                    or B.cmp(self.im_hi, other.im_lo) < 0 or B.cmp(other.im_hi, self.im_lo) < 0)

    def __repr__(self):
        rl, rh, il, ih = (B.to_float(self.re_lo), B.to_float(self.re_hi),
                          B.to_float(self.im_lo), B.to_float(self.im_hi))
        return f"IntervalComplex([{rl!r},{rh!r}] + [{il!r},{ih!r}]i)"

    # -- arithmetic ----------------------------------------------------------

    def add(self, other, ctx):
        p = ctx.bits
        r = _r_add(self._re(), other._re(), p)
        i = _r_add(self._im(), other._im(), p)
        return IntervalComplex(r[0], r[1], i[0], i[1])

    def sub(self, other, ctx):
        p = ctx.bits
        r = _r_sub(self._re(), other._re(), p)
        i = _r_sub(self._im(), other._im(), p)
        return IntervalComplex(r[0], r[1], i[0], i[1])

    def neg(self):
        r = _r_neg(self._re())
        i = _r_neg(self._im())
        return IntervalComplex(r[0], r[1], i[0], i[1])

    def conj(self):
        i = _r_neg(self._im())
        return IntervalComplex(self.re_lo, self.re_hi, i[0], i[1])

    def mul(self, other, ctx):
        p = ctx.bits
        ac = _r_mul(self._re(), other._re(), p)
        bd = _r_mul(self._im(), other._im(), p)
        ad = _r_mul(self._re(), other._im(), p)
        bc = _r_mul(self._im(), other._re(), p)
        r = _r_sub(ac, bd, p)
        i = _r_add(ad, bc, p)
        return IntervalComplex(r[0], r[1], i[0], i[1])

    def square(self, ctx):
        # (a+bi)^2 = (a^2 - b^2) + 2ab i, with the sharper interval square
        # for the real part instead of a generic product.
        p = ctx.bits
        a2 = _r_sqr(self._re(), p)
        b2 = _r_sqr(self._im(), p)
        ab = _r_mul(self._re(), self._im(), p)
        r = _r_sub(a2, b2, p)
        i = _r_add(ab, ab, p)
        return IntervalComplex(r[0], r[1], i[0], i[1])

    def abs2_interval(self, ctx):
        p = ctx.bits
        return _r_add(_r_sqr(self._re(), p), _r_sqr(self._im(), p), p)

    def div(self, other, ctx):
        p = ctx.bits
        d = other.abs2_interval(ctx)
        if B.sign(d[0]) <= 0:
            raise ContainsZero("division by an interval that may contain 0")
        num = self.mul(other.conj(), ctx)
        r = _r_div_pos(num._re(), d, p)
        i = _r_div_pos(num._im(), d, p)
        return IntervalComplex(r[0], r[1], i[0], i[1])

    def scale_exact(self, fr: Fraction, ctx):
        return self.mul(IntervalComplex.from_exact(ExactComplex(Fraction(fr), Fraction(0)), ctx), ctx)

    def abs2_bounds_exact(self):
        """Certified (lower, upper) bounds of |z|^2 as exact Fractions."""
        rl, rh, il, ih = self.to_fractions()

        def _sq_bounds(lo, hi):
            if lo <= 0 <= hi:
                lo2 = Fraction(0)
            else:
                lo2 = min(lo * lo, hi * hi)
            return lo2, max(lo * lo, hi * hi)

        rlo2, rhi2 = _sq_bounds(rl, rh)
        ilo2, ihi2 = _sq_bounds(il, ih)
        return rlo2 + ilo2, rhi2 + ihi2


def classify_disk(value: IntervalComplex, radius) -> Inclusion:
    """Certified position of the interval against the disk of given radius.

    Exact rational comparison on |value|^2 versus radius^2, so the answer
    carries no rounding assumptions at all.
    """
    r = Fraction(radius)
    if r <= 0:
        raise ValueError("radius must be positive")
    lo2, hi2 = value.abs2_bounds_exact()
    r2 = r * r
    if hi2 < r2:
        return Inclusion.INSIDE
    if lo2 > r2:
        return Inclusion.OUTSIDE
    return Inclusion.UNKNOWN


# ---------------------------------------------------------------------------
# Square-root branches.

def _half_interval(prec):
    h = Fraction(1, 2)
    return (B.from_fraction(h, prec, "f"), B.from_fraction(h, prec, "c"))


def _rhp_principal_sqrt(x: IntervalComplex, ctx) -> IntervalComplex:
    """Principal sqrt enclosure over a rectangle with re_lo > 0.

    Uses p = sqrt((|x|+a)/2), q = sign(b) sqrt((|x|-a)/2) with directed
    endpoint evaluation; p is monotone increasing in a and |b|, the magnitude
    of q is increasing in |b| and decreasing in a.
    """
    p = ctx.bits
    a_lo, a_hi = x.re_lo, x.re_hi
    b_lo, b_hi = x.im_lo, x.im_hi
    if B.sign(b_lo) <= 0 <= B.sign(b_hi):
        babs_lo = B.from_int(0, p, "n")
    else:
        c1, c2 = B.abs(b_lo), B.abs(b_hi)
        babs_lo = c1 if B.cmp(c1, c2) <= 0 else c2
    babs_hi = B.abs(b_lo) if B.cmp(B.abs(b_lo), B.abs(b_hi)) >= 0 else B.abs(b_hi)

    def mod_dir(a, babs, rnd):
        a2 = B.mul(a, a, p, rnd)
        b2 = B.mul(babs, babs, p, rnd)
        return B.sqrt(B.add(a2, b2, p, rnd), p, rnd)

    half_f, half_c = _half_interval(p)
    # real part bounds
    m_hi = mod_dir(a_hi, babs_hi, "c")
    p_hi = B.sqrt(B.mul(B.add(m_hi, a_hi, p, "c"), half_c, p, "c"), p, "c")
    m_lo = mod_dir(a_lo, babs_lo, "f")
    s = B.add(m_lo, a_lo, p, "f")
    if B.sign(s) < 0:
        s = B.from_int(0, p, "n")
    p_lo = B.sqrt(B.mul(s, half_f, p, "f"), p, "f")

    def qmag_hi(babs):
        # max of sqrt((m-a)/2) on the box for this |b| bound: at a = a_lo
        m = mod_dir(a_lo, babs, "c")
        d = B.sub(m, a_lo, p, "c")
        if B.sign(d) < 0:
            d = B.from_int(0, p, "n")
        return B.sqrt(B.mul(d, half_c, p, "c"), p, "c")

    def qmag_lo(babs):
        # min of sqrt((m-a)/2) on the box for this |b| bound: at a = a_hi
        m = mod_dir(a_hi, babs, "f")
        d = B.sub(m, a_hi, p, "f")
        if B.sign(d) < 0:
            d = B.from_int(0, p, "n")
        return B.sqrt(B.mul(d, half_f, p, "f"), p, "f")

    sb_lo, sb_hi = B.sign(b_lo), B.sign(b_hi)
    if sb_lo >= 0:
        q_lo = qmag_lo(b_lo)
        q_hi = qmag_hi(b_hi)
    elif sb_hi <= 0:
        q_lo = B.neg(qmag_hi(B.abs(b_lo)))
        q_hi = B.neg(qmag_lo(B.abs(b_hi)))
    else:
        q_lo = B.neg(qmag_hi(B.abs(b_lo)))
        q_hi = qmag_hi(b_hi)
    return IntervalComplex(p_lo, p_hi, q_lo, q_hi)


_INV_SQRT2_CACHE = {}


def _inv_sqrt2_interval(ctx):
    p = ctx.bits
    cached = _INV_SQRT2_CACHE.get(p)
    if cached is None:
        half_f, half_c = _half_interval(p)
        cached = (B.sqrt(half_f, p, "f"), B.sqrt(half_c, p, "c"))
        _INV_SQRT2_CACHE[p] = cached
    return cached


def _rot90(x: IntervalComplex) -> IntervalComplex:
    # multiply by i, exact
    r = _r_neg(x._im())
    return IntervalComplex(r[0], r[1], x.re_lo, x.re_hi)


def _rot270(x: IntervalComplex) -> IntervalComplex:
    # multiply by -i, exact
    i = _r_neg(x._re())
    return IntervalComplex(x.im_lo, x.im_hi, i[0], i[1])


def interval_sqrt_branches(x: IntervalComplex, ctx):
    """Two disjoint enclosures of the square-root branches over x.

    The rectangle must exclude the origin with positive distance; a rectangle
    that avoids 0 lies strictly in one of the four half-planes, and each case
    reduces to the right-half-plane formula by an exact rotation (the two
    diagonal cases pick up a multiplication by an enclosure of (1 +/- i)/sqrt2,
    which only widens outward). The second branch is the exact negation of the
    first.
    """
    if B.sign(x.re_lo) > 0:
        principal = _rhp_principal_sqrt(x, ctx)
    elif B.sign(x.re_hi) < 0:
        # x = -y with y in RHP; sqrt(x) = +/- i sqrt(y)
        principal = _rot90(_rhp_principal_sqrt(x.neg(), ctx))
    elif B.sign(x.im_lo) > 0:
        # x = i y with y in RHP; sqrt(x) = +/- (1+i)/sqrt2 * sqrt(y)
        y = _rot270(x)
        s = _rhp_principal_sqrt(y, ctx)
        c_lo, c_hi = _inv_sqrt2_interval(ctx)
        rot = IntervalComplex(c_lo, c_hi, c_lo, c_hi)
        principal = s.mul(rot, ctx)
    elif B.sign(x.im_hi) < 0:
        # x = -i y with y in RHP; sqrt(x) = +/- (1-i)/sqrt2 * sqrt(y)
        y = _rot90(x)
        s = _rhp_principal_sqrt(y, ctx)
        c_lo, c_hi = _inv_sqrt2_interval(ctx)
        rot = IntervalComplex(c_lo, c_hi, B.neg(c_hi), B.neg(c_lo))
        principal = s.mul(rot, ctx)
    else:
        raise ContainsZero("rectangle may contain the origin; branches cannot separate")
    other = principal.neg()
    if principal.overlaps(other):
        raise ContainsZero("branches fail to separate at this precision")
    return principal, other
