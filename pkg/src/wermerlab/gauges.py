"""Monotone gauges and the calculus that turns density bounds into moduli.

Three roles share one type. Density gauges h (increasing, with finite
integral of h/s^2 at 0) feed modulus_from_h; moduli psi (increasing) feed
tame_gauge; decay gauges theta (decreasing, divergent at 0) feed the
m-selection search. The closed-form family

    value(x) = c * x^a * |log x|^b * (log|log x|)^d

covers every case the checks exercise; sampled tables and the staircase
gauges produced by tame_gauge fill in the rest. Gauges are consulted in
log-argument form throughout, so arguments far beyond floating range (the
m-selection regime) stay representable.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Optional

from .errors import DivergentGauge, GaugeTooWeak

_QUAD_TARGET = 1e-10


@dataclass(frozen=True)
class GaugeFunction:
    kind: str
    params: tuple = ()
    domain_hi: float = 1.0
    table: Optional[tuple] = None
    pieces: Optional[tuple] = None
    inner: Optional["GaugeFunction"] = None
    monotone: str = "increasing"
    label: str = ""

    # Constructors for the closed-form tags.

    @classmethod
    def power(cls, a, c=1.0, domain_hi=1.0):
        return cls(kind="power_log", params=(float(a), 0.0, 0.0, float(c)),
                   domain_hi=domain_hi,
                   monotone="increasing" if a > 0 else "decreasing",
                   label=f"s^{a}")

    @classmethod
    def power_log(cls, a, b=0.0, d=0.0, c=1.0, domain_hi=1.0):
        mono = "increasing" if a > 0 else "decreasing"
        return cls(kind="power_log", params=(float(a), float(b), float(d), float(c)),
                   domain_hi=domain_hi, monotone=mono,
                   label=f"s^{a}*|log s|^{b}" + (f"*(loglog)^{d}" if d else ""))

    @classmethod
    def r2_log(cls, c=1.0):
        return cls.power_log(2.0, 1.0, c=c)

    @classmethod
    def r2_loglog(cls, c=1.0):
        return cls.power_log(2.0, 0.0, 1.0, c=c, domain_hi=math.exp(-1.01))

    @classmethod
    def abs_log(cls):
        return cls(kind="power_log", params=(0.0, 1.0, 0.0, 1.0),
                   domain_hi=1 / math.e, monotone="decreasing", label="|log s|")

    @classmethod
    def constant(cls, c=1.0):
        return cls(kind="power_log", params=(0.0, 0.0, 0.0, float(c)),
                   monotone="decreasing", label=f"const {c}")

    @classmethod
    def from_table(cls, rows, monotone="increasing"):
        """rows: (r, value) pairs, r in (0, 1]; interpolated log-log."""
        rows = tuple(sorted((float(r), float(v)) for r, v in rows))
        if len(rows) < 2:
            raise ValueError("table gauge needs at least two rows")
        if any(r <= 0 or v <= 0 for r, v in rows):
            raise ValueError("table gauge must be positive")
        vals = [v for _, v in rows]
        ordered = all(x <= y for x, y in zip(vals, vals[1:])) if monotone == "increasing" \
            else all(x >= y for x, y in zip(vals, vals[1:]))
        if not ordered:
            raise ValueError(f"table is not {monotone}")
        return cls(kind="table", table=rows, domain_hi=rows[-1][0], monotone=monotone)

    # Evaluation.

    def log_value_at_log_arg(self, lx: float) -> float:
        if self.kind == "power_log":
            a, b, d, c = self.params
            acc = math.log(c) + a * lx
            if b or d:
                al = abs(lx)
                if al <= 0:
                    raise ValueError("log factor undefined at x = 1")
                if b:
                    acc += b * math.log(al)
                if d:
                    if al <= 1:
                        raise ValueError("loglog factor needs |log x| > 1")
                    acc += d * math.log(math.log(al))
            return acc
        if self.kind == "table":
            return self._table_log_value(lx)
        if self.kind == "staircase":
            return math.log(self._staircase_value_at_u(-lx))
        if self.kind == "r2_inner":
            return 2.0 * lx + self.inner.log_value_at_log_arg(lx)
        raise ValueError(f"unknown gauge kind {self.kind!r}")

    def value(self, r: float) -> float:
        if r <= 0:
            raise ValueError("gauge argument must be positive")
        return math.exp(self.log_value_at_log_arg(math.log(r)))

    def _table_log_value(self, lx: float) -> float:
        # log-log interpolation, clamped at the ends
        logs = [math.log(r) for r, _ in self.table]
        i = bisect.bisect_left(logs, lx)
        if i <= 0:
            lo = 0
        elif i >= len(logs):
            lo = len(logs) - 2
        else:
            lo = i - 1
        x0, x1 = logs[lo], logs[lo + 1]
        y0, y1 = (math.log(v) for _, v in (self.table[lo], self.table[lo + 1]))
        t = (lx - x0) / (x1 - x0)
        return y0 + t * (y1 - y0)

    def _staircase_value_at_u(self, u: float) -> float:
        """Value in the x = 1/r variable with u = log x."""
        starts = [p[0] for p in self.pieces]
        i = bisect.bisect_right(starts, u) - 1
        if i < 0:
            i = 0
        u_start, v, mode, u_ref = self.pieces[i]
        if mode == "plateau" or u <= u_ref:
            return v
        return v + math.log(math.log(u)) - math.log(math.log(u_ref))

    def integral_finite(self) -> bool:
        """Whether the density integral int_0 value(s)/s^2 ds converges."""
        if self.kind == "power_log":
            a, b, d, _ = self.params
            if a > 1:
                return True
            if a < 1:
                return False
            if b < -1:
                return True
            if b > -1:
                return False
            return d < -1
        if self.kind == "r2_inner":
            return True
        # Sampled dyadic tail probe: the bracket h(2^-k) * 2^k must decay.
        terms = []
        for k in range(8, 48, 4):
            lx = -k * math.log(2.0)
            try:
                terms.append(math.exp(self.log_value_at_log_arg(lx) - lx))
            except (OverflowError, ValueError):
                return False
        head, tail = terms[0], terms[-1]
        return tail < 0.05 * head


def modulus_from_h(h: GaugeFunction, r: float) -> float:
    """psi(r) = int_0^{2r} h(s)/s^2 ds + r * int_r^1 h(s)/s^3 ds.

    Closed forms for the power and s^2|log s| tags; adaptive quadrature to
    1e-10 relative otherwise. Raises DivergentGauge when the defining
    integral already diverges at 0, which the power family detects exactly.
    """
    if not 0 < r <= 1:
        raise ValueError("modulus is evaluated on (0, 1]")
    if not h.integral_finite():
        raise DivergentGauge(f"int_0 h/s^2 diverges for {h.label or h.kind}")

    if h.kind == "power_log":
        a, b, d, c = h.params
        if b == 0.0 and d == 0.0 and a > 1:
            first = (2 * r) ** (a - 1) / (a - 1)
            if a == 2.0:
                second = r * abs(math.log(r))
            else:
                second = r * (1 - r ** (a - 2)) / (a - 2)
            return c * (first + second)
        if a == 2.0 and b == 1.0 and d == 0.0:
            if 2 * r <= 1:
                first = 2 * r * (1 - math.log(2 * r))
            else:
                first = 2 + 2 * r * (math.log(2 * r) - 1)
            second = r * math.log(r) ** 2 / 2
            return c * (first + second)

    return _modulus_quadrature(h, r)


def _modulus_quadrature(h: GaugeFunction, r: float) -> float:
    from mpmath import mp, mpf, quad

    old = mp.prec
    mp.prec = 80
    try:
        def f1(u):
            # substitution s = e^u makes the endpoint integrable cleanly
            return math.exp(h.log_value_at_log_arg(float(u)) - float(u))

        def f2(s):
            ls = math.log(float(s))
            return math.exp(h.log_value_at_log_arg(ls) - 3.0 * ls)

        i1 = quad(f1, [mp.ninf, mp.log(mpf(2) * mpf(r))])
        i2 = quad(f2, [mpf(r), mpf(1)]) if r < 1 else mpf(0)
        return float(i1 + r * i2)
    finally:
        mp.prec = old


_TAME_X1_CANDIDATES = (20.0, 100.0, 1e4, 1e8, 1e16)
_TAME_MAX_PIECES = 64


def _theta0_log(psi: GaugeFunction, u: float) -> float:
    """log of psi(r)/(r|log r|) at r = e^{-u}.

    The power_log family is expanded symbolically: the generic route computes
    (a*(-u) + ...) + u, which for a = 1 cancels catastrophically once u is so
    large that the log terms fall below one ulp of u.
    """
    if u <= 1.0:
        raise ValueError("theta0 needs x > e")
    if psi.kind == "power_log":
        a, b, d, c = psi.params
        acc = math.log(c) + (1.0 - a) * u + (b - 1.0) * math.log(u)
        if d:
            acc += d * math.log(math.log(u))
        return acc
    return psi.log_value_at_log_arg(-u) + u - math.log(u)


def tame_gauge(psi: GaugeFunction) -> GaugeFunction:
    """Staircase minorant of theta0 = psi(r)/(r|log r|), built in x = 1/r.

    Alternates constant plateaus with log log log x climbs: each plateau at
    level v holds until theta0 reaches 2v, each climb rises by v (doubling
    the level) at triple-log speed. theta0 need not be monotone near the
    desk end, so the staircase is pinned to the sampled nondecreasing
    envelope inf_{x' >= x} theta0(x'), which keeps theta2 <= theta0
    pointwise. The result is decreasing in r, diverges at 0, and
    r^2 * theta2(r) has a modulus within a bounded factor of psi on samples,
    which the companion assertion checks.
    """
    # Divergence precondition, sampled on a deep decreasing grid.
    probes = [10.0 * math.log(10), 25 * math.log(10), 50 * math.log(10), 100 * math.log(10)]
    try:
        vals = [_theta0_log(psi, u) for u in probes]
    except (ValueError, OverflowError) as exc:
        raise GaugeTooWeak(f"theta0 not evaluable on the probe grid: {exc}") from None
    if not (all(b >= a for a, b in zip(vals[1:], vals[2:]))
            and vals[-1] >= vals[0] + 0.5 * math.log(10)):
        raise GaugeTooWeak("psi(r)/(r|log r|) does not diverge (sampled check)")

    u1 = None
    for x1 in _TAME_X1_CANDIDATES:
        u = math.log(x1)
        try:
            if _theta0_log(psi, u) > -700:
                u1 = u
                break
        except ValueError:
            continue
    if u1 is None:
        raise GaugeTooWeak("no usable starting point for the staircase")

    # Stop the sampling grid well before u ~ 2^52, where even a correct
    # generic theta0 loses its log-size terms to rounding. Deeper than
    # u = 1e10 means r = e^{-1e10}, far past any float-representable radius.
    us = []
    u = u1
    while u < 1e10:
        us.append(u)
        u *= 1.05
    th = [_theta0_log(psi, x) for x in us]
    env = th[:]
    for i in range(len(env) - 2, -1, -1):
        env[i] = min(env[i], env[i + 1])

    v = math.exp(env[0])
    pieces = [(us[0], v, "plateau", us[0])]
    idx = 0
    while len(pieces) < _TAME_MAX_PIECES:
        # plateau until the envelope reaches 2v (env is nondecreasing)
        j = bisect.bisect_left(env, math.log(2.0 * v), lo=idx)
        if j >= len(us):
            break
        hit = us[j]
        pieces.append((hit, v, "climb", hit))
        # climb ends where log log log x has risen by v
        exponent = v + math.log(math.log(hit))
        if exponent > 700:
            break
        u_end = math.exp(math.exp(exponent))
        if u_end >= us[-1]:
            break
        v = 2.0 * v
        pieces.append((u_end, v, "plateau", u_end))
        idx = bisect.bisect_left(us, u_end)

    theta2 = GaugeFunction(kind="staircase", pieces=tuple(pieces),
                           domain_hi=math.exp(-u1), monotone="decreasing",
                           label="staircase minorant")

    _tame_companion_check(psi, theta2)
    return theta2


def _tame_companion_check(psi: GaugeFunction, theta2: GaugeFunction):
    """modulus_from_h(r^2 theta2) must stay O(psi) on desk samples."""
    h2 = GaugeFunction(kind="r2_inner", inner=theta2, monotone="increasing",
                       label="r^2 * staircase")
    ratios = []
    for k in (2, 3, 4, 6, 8):
        r = 10.0 ** -k
        ratios.append(_modulus_quadrature(h2, r) / psi.value(r))
    if max(ratios) > 40.0 * max(ratios[0], 1e-300):
        raise GaugeTooWeak(
            f"companion modulus not O(psi): ratios {ratios[0]:.3g} -> {max(ratios):.3g}")
