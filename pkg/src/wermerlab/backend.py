"""Directed-rounding real arithmetic on a pluggable backend.

Two implementations of the same small contract: gmpy2 (MPFR, compiled, all
operations correctly rounded in the requested direction) and mpmath.libmp
(pure Python fallback). The backend is chosen once at import, gmpy2 preferred;
set WERMERLAB_BACKEND=gmpy2 or =libmp to force one.

Values are opaque to callers: create them with from_fraction/from_int/
from_float, combine them with the arithmetic methods, and convert out with
to_fraction/to_float. Rounding direction is one of "n" (nearest), "f" (toward
-inf), "c" (toward +inf) and is passed per call together with the target
precision in bits, so a single backend instance serves every precision in the
process and is safe for concurrent use.
"""

from __future__ import annotations

import os
from fractions import Fraction

from .errors import BackendUnavailable

_ROUNDINGS = ("n", "f", "c")


class _Gmpy2Real:
    name = "gmpy2"

    def __init__(self):
        import gmpy2

        self._g = gmpy2
        self._mpz = gmpy2.mpz
        self._round = {
            "n": gmpy2.RoundToNearest,
            "f": gmpy2.RoundDown,
            "c": gmpy2.RoundUp,
        }
        self._ctxs = {}

    def _ctx(self, prec, rnd):
        key = (prec, rnd)
        ctx = self._ctxs.get(key)
        if ctx is None:
            ctx = self._g.context(precision=prec, round=self._round[rnd])
            self._ctxs[key] = ctx
        return ctx

    def from_fraction(self, fr, prec, rnd):
        # One correctly rounded division of exact integers.
        return self._ctx(prec, rnd).div(self._mpz(fr.numerator), self._mpz(fr.denominator))

    def from_int(self, n, prec, rnd):
        return self._ctx(prec, rnd).div(self._mpz(n), self._mpz(1))

    def from_float(self, x, prec, rnd):
        return self.from_fraction(Fraction(x), prec, rnd)

    def add(self, a, b, prec, rnd):
        return self._ctx(prec, rnd).add(a, b)

    def sub(self, a, b, prec, rnd):
        return self._ctx(prec, rnd).sub(a, b)

    def mul(self, a, b, prec, rnd):
        return self._ctx(prec, rnd).mul(a, b)

    def div(self, a, b, prec, rnd):
        return self._ctx(prec, rnd).div(a, b)

    def sqrt(self, a, prec, rnd):
        return self._ctx(prec, rnd).sqrt(a)

    def log(self, a, prec, rnd):
        return self._ctx(prec, rnd).log(a)

    def exp(self, a, prec, rnd):
        return self._ctx(prec, rnd).exp(a)

    def neg(self, a):
        # Exact: never route unary minus through the ambient 53-bit context.
        return self._ctx(max(a.precision, 2), "n").sub(0, a)

    def abs(self, a):
        return self.neg(a) if a < 0 else a

    def cmp(self, a, b):
        if a < b:
            return -1
        if a > b:
            return 1
        return 0

    def sign(self, a):
        return self._g.sign(a)

    def to_fraction(self, a):
        p, q = a.as_integer_ratio()
        return Fraction(int(p), int(q))

    def to_float(self, a):
        return float(a)

    def is_finite(self, a):
        return bool(self._g.is_finite(a))


class _LibmpReal:
    name = "libmp"

    def __init__(self):
        from mpmath import libmp

        self._L = libmp

    def from_fraction(self, fr, prec, rnd):
        return self._L.from_rational(fr.numerator, fr.denominator, prec, rnd)

    def from_int(self, n, prec, rnd):
        return self._L.from_int(n, prec, rnd)

    def from_float(self, x, prec, rnd):
        return self._L.from_float(x, prec, rnd)

    def add(self, a, b, prec, rnd):
        return self._L.mpf_add(a, b, prec, rnd)

    def sub(self, a, b, prec, rnd):
        return self._L.mpf_sub(a, b, prec, rnd)

    def mul(self, a, b, prec, rnd):
        return self._L.mpf_mul(a, b, prec, rnd)

    def div(self, a, b, prec, rnd):
        return self._L.mpf_div(a, b, prec, rnd)

    def sqrt(self, a, prec, rnd):
        return self._L.mpf_sqrt(a, prec, rnd)

    def _pad_out(self, y, prec, rnd):
        # libmp transcendentals are accurate but not guaranteed correctly
        # rounded; push 4 ulps (of the prec+8 result) outward before rounding
        # to the requested direction. Nearest mode keeps the raw result.
        L = self._L
        if rnd == "n":
            return L.mpf_pos(y, prec, rnd)
        if y[1]:
            pad_exp = y[2] + y[3] - (prec + 8) + 2
        else:
            pad_exp = -(prec + 2)
        pad = L.from_man_exp(1, pad_exp)
        if rnd == "f":
            return L.mpf_sub(y, pad, prec, rnd)
        return L.mpf_add(y, pad, prec, rnd)

    def log(self, a, prec, rnd):
        if a == self._L.fone:
            return self._L.fzero
        y = self._L.mpf_log(a, prec + 8, rnd)
        return self._pad_out(y, prec, rnd)

    def exp(self, a, prec, rnd):
        if a == self._L.fzero:
            return self._L.fone
        y = self._L.mpf_exp(a, prec + 8, rnd)
        return self._pad_out(y, prec, rnd)

    def neg(self, a):
        return self._L.mpf_neg(a)

    def abs(self, a):
        return self._L.mpf_abs(a)

    def cmp(self, a, b):
        return self._L.mpf_cmp(a, b)

    def sign(self, a):
        return self._L.mpf_sign(a)

    def to_fraction(self, a):
        sign, man, exp, _bc = a
        if man == 0:
            if a == self._L.fzero:
                return Fraction(0)
            raise ValueError("cannot convert non-finite value to Fraction")
        v = Fraction(int(man) if sign == 0 else -int(man))
        return v * Fraction(2) ** exp

    def to_float(self, a):
        return self._L.to_float(a)

    def is_finite(self, a):
        return a[1] != 0 or a == self._L.fzero


def _select():
    forced = os.environ.get("WERMERLAB_BACKEND", "").strip().lower()
    if forced == "libmp":
        return _LibmpReal()
    if forced == "gmpy2":
        try:
            return _Gmpy2Real()
        except ImportError as exc:
            raise BackendUnavailable("WERMERLAB_BACKEND=gmpy2 but gmpy2 is not importable") from exc
    if forced:
        raise BackendUnavailable(f"unknown WERMERLAB_BACKEND={forced!r} (use gmpy2 or libmp)")
    try:
        return _Gmpy2Real()
    except ImportError:
        return _LibmpReal()


active = _select()


def backend_name():
    return active.name
