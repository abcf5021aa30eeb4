"""Parameter sequences of the tower recursion, kept in log-space.

A schedule stores the radius sequence r_n, the subdivision counts m_n and the
derived scales delta_n, eps_n, R_n = prod r_k, M_n = prod m_k, D_n = 4^n
delta_n M_n / R_n. Logs are first-class: schedules produced by the gauge-driven
m-selection have M_n far beyond any floating exponent range, so only the log
sequences are guaranteed to exist. Exact Fractions for delta_n and eps_n are
retained alongside while they stay below a size cap, which is what makes the
desk-scale acceptance checks exact.

All log sequences are stored as certified (lo, hi) pairs of backend reals at
160 bits, maintained with directed rounding through the affine recurrences

    log delta_{n+1} = 2 log delta_n + log r_{n+1} - log 4 - 2 log m_{n+1}
    log eps_{n+1}   = 2 log delta_n - log 2       - 2 log m_{n+1}

with delta_0 = 1/2. The consistency estimates checked at build time are

    est1: delta_{n+1} + eps_{n+1} < delta_n^2 / m_{n+1}^2
    est2: delta_{n+1} < eps_{n+1} * r_{n+1}

which hold automatically for the exact recurrences; the checks exist to guard
user-overridden delta sequences (and the deliberately corrupted negative
controls).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .backend import active as B
from .errors import GaugeTooWeak, InvalidSchedule, NotOrdinary

SCHED_PREC = 160
_FRACTION_BIT_CAP = 1 << 20
_CHOOSE_M_KCAP = 24


def _pair_from_fraction(fr: Fraction):
    return (B.from_fraction(fr, SCHED_PREC, "f"), B.from_fraction(fr, SCHED_PREC, "c"))


def _log_pair(fr: Fraction):
    if fr <= 0:
        raise ValueError("log of a nonpositive rational")
    return (B.log(B.from_fraction(fr, SCHED_PREC, "f"), SCHED_PREC, "f"),
            B.log(B.from_fraction(fr, SCHED_PREC, "c"), SCHED_PREC, "c"))


def _log_pair_int(n: int):
    return (B.log(B.from_int(n, SCHED_PREC, "f"), SCHED_PREC, "f"),
            B.log(B.from_int(n, SCHED_PREC, "c"), SCHED_PREC, "c"))


def _padd(x, y):
    return (B.add(x[0], y[0], SCHED_PREC, "f"), B.add(x[1], y[1], SCHED_PREC, "c"))


def _psub(x, y):
    return (B.sub(x[0], y[1], SCHED_PREC, "f"), B.sub(x[1], y[0], SCHED_PREC, "c"))


def _pdouble(x):
    return _padd(x, x)


def _pair_zero():
    z = B.from_int(0, SCHED_PREC, "n")
    return (z, z)


def _pmid_float(x) -> float:
    return 0.5 * (B.to_float(x[0]) + B.to_float(x[1]))


def _certainly_less(x, y) -> bool:
    """x < y certified from the interval endpoints."""
    return B.cmp(x[1], y[0]) < 0


@dataclass(frozen=True)
class ParameterSchedule:
    r_seq: tuple
    m_seq: tuple
    depth: int
    delta_frac: tuple
    eps_frac: tuple
    log_delta: tuple
    log_eps: tuple
    log_R: tuple
    log_M: tuple
    log_D: tuple
    corrupted: bool = False

    def delta_float(self, n) -> float:
        fr = self.delta_frac[n]
        if fr is not None:
            return float(fr)
        return math.exp(_pmid_float(self.log_delta[n]))

    def eps_float(self, n) -> float:
        fr = self.eps_frac[n]
        if fr is not None:
            return float(fr)
        return math.exp(_pmid_float(self.log_eps[n]))

    def log_delta_float(self, n) -> float:
        return _pmid_float(self.log_delta[n])

    def log_eps_float(self, n) -> float:
        return _pmid_float(self.log_eps[n])

    def log_R_float(self, n) -> float:
        return _pmid_float(self.log_R[n])

    def log_M_float(self, n) -> float:
        return _pmid_float(self.log_M[n])

    def log_D_float(self, n) -> float:
        return _pmid_float(self.log_D[n])

    def with_corrupted_delta(self, n, factor):
        """Scale delta_n by an arbitrary factor, skipping every consistency check.

        Negative-control helper: the resulting object is marked corrupted and
        downstream certificates are expected to reject it.
        """
        if not 0 < n <= self.depth:
            raise ValueError("corruption index out of range")
        factor = Fraction(factor)
        if factor <= 0:
            raise ValueError("factor must be positive")
        dfr = list(self.delta_frac)
        if dfr[n] is not None:
            dfr[n] = dfr[n] * factor
        lg = list(self.log_delta)
        lg[n] = _padd(lg[n], _log_pair(factor))
        return replace(self, delta_frac=tuple(dfr), log_delta=tuple(lg), corrupted=True)


def _normalize_r(r_seq, depth):
    if isinstance(r_seq, (int, float, str, Fraction)):
        rs = [Fraction(r_seq)] * depth
    else:
        rs = [Fraction(x) for x in r_seq]
        if len(rs) < depth:
            if not rs:
                raise ValueError("empty r sequence for positive depth")
            rs = rs + [rs[-1]] * (depth - len(rs))
        rs = rs[:depth]
    for i, r in enumerate(rs):
        if not 0 < r <= Fraction(1, 10):
            raise ValueError(f"r_{i + 1}={r} outside (0, 1/10]")
        if i and r > rs[i - 1]:
            raise ValueError("r sequence must be nonincreasing")
    return rs


def _normalize_m(m_seq, depth):
    if isinstance(m_seq, int):
        ms = [m_seq] * depth
    else:
        ms = list(m_seq)
        if len(ms) < depth:
            ms = ms + [1] * (depth - len(ms))
        ms = ms[:depth]
    for i, m in enumerate(ms):
        if not isinstance(m, int) or m < 1:
            raise ValueError(f"m_{i + 1}={m} is not a positive integer")
    return ms


def build_schedule(r_seq, m_seq, depth, check=True) -> ParameterSchedule:
    """Populate all log sequences from the recurrences, verifying est1/est2.

    r_seq and m_seq may be scalars (constant sequences) or sequences shorter
    than depth; r extends by repeating its last value, m pads with 1 (no
    subdivision). Raises InvalidSchedule(n) if a consistency estimate fails at
    step n, which cannot happen for the exact recurrences.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    rs = _normalize_r(r_seq, depth)
    ms = _normalize_m(m_seq, depth)

    half = Fraction(1, 2)
    delta_frac = [half]
    eps_frac: list[Optional[Fraction]] = [None]
    log_delta = [_log_pair(half)]
    log_eps: list = [None]
    log_R = [_pair_zero()]
    log_M = [_pair_zero()]
    log_D = [log_delta[0]]

    log4 = _log_pair_int(4)
    log2 = _log_pair_int(2)

    for n in range(depth):
        r, m = rs[n], ms[n]
        log_r = _log_pair(r)
        log_m = _log_pair_int(m)
        two_log_m = _pdouble(log_m)
        prev = log_delta[n]
        ld = _psub(_padd(_pdouble(prev), log_r), _padd(log4, two_log_m))
        le = _psub(_pdouble(prev), _padd(log2, two_log_m))
        log_delta.append(ld)
        log_eps.append(le)
        log_R.append(_padd(log_R[n], log_r))
        log_M.append(_padd(log_M[n], log_m))
        # log D_{n+1} = (n+1) log4 + log delta_{n+1} + log M_{n+1} - log R_{n+1}
        nlog4 = log4
        for _ in range(n):
            nlog4 = _padd(nlog4, log4)
        log_D.append(_psub(_padd(_padd(nlog4, ld), log_M[n + 1]), log_R[n + 1]))

        d_prev = delta_frac[n]
        if d_prev is not None:
            d_new = d_prev * d_prev * r / (4 * m * m)
            e_new = d_prev * d_prev / (2 * m * m)
            if max(d_new.denominator.bit_length(), e_new.denominator.bit_length()) > _FRACTION_BIT_CAP:
                d_new = e_new = None
        else:
            d_new = e_new = None
        delta_frac.append(d_new)
        eps_frac.append(e_new)

        if check:
            _check_step(n + 1, r, m, delta_frac[n], d_new, e_new,
                        prev, ld, le, log_r, two_log_m)

    return ParameterSchedule(
        r_seq=tuple(rs), m_seq=tuple(ms), depth=depth,
        delta_frac=tuple(delta_frac), eps_frac=tuple(eps_frac),
        log_delta=tuple(log_delta), log_eps=tuple(log_eps),
        log_R=tuple(log_R), log_M=tuple(log_M), log_D=tuple(log_D))


def _check_step(n, r, m, d_prev_fr, d_fr, e_fr, log_d_prev, ld, le, log_r, two_log_m):
    if d_prev_fr is not None and d_fr is not None and e_fr is not None:
        rhs = d_prev_fr * d_prev_fr / (m * m)
        if not d_fr + e_fr < rhs:
            raise InvalidSchedule(n, "est1", measured=float(d_fr + e_fr), bound=float(rhs))
        if not d_fr < e_fr * r:
            raise InvalidSchedule(n, "est2", measured=float(d_fr), bound=float(e_fr * r))
        return
    # Log-space certified fallback. est2 guarantees delta < eps*r, so
    # log(delta + eps) <= log eps + log(1 + r); compare against
    # log(delta_n^2/m^2) from below.
    log_1p_r = _log_pair(1 + r)
    lhs_hi = _padd(le, log_1p_r)
    rhs_lo = _psub(_pdouble(log_d_prev), two_log_m)
    if not _certainly_less(lhs_hi, rhs_lo):
        raise InvalidSchedule(n, "est1",
                              measured=_pmid_float(lhs_hi), bound=_pmid_float(rhs_lo))
    if not _certainly_less(ld, _padd(le, log_r)):
        raise InvalidSchedule(n, "est2",
                              measured=_pmid_float(ld), bound=_pmid_float(_padd(le, log_r)))


def recheck_estimates(s: ParameterSchedule, upto=None):
    """Re-run est1/est2 on an existing schedule (used by certificates).

    Unlike build-time checking this works purely from the stored sequences, so
    it catches post-hoc corruption of delta.
    """
    upto = s.depth if upto is None else upto
    for n in range(1, upto + 1):
        r, m = s.r_seq[n - 1], s.m_seq[n - 1]
        d_prev, d_fr, e_fr = s.delta_frac[n - 1], s.delta_frac[n], s.eps_frac[n]
        if d_prev is not None and d_fr is not None and e_fr is not None:
            rhs = d_prev * d_prev / (m * m)
            if not d_fr + e_fr < rhs:
                raise InvalidSchedule(n, "est1", measured=float(d_fr + e_fr), bound=float(rhs))
            if not d_fr < e_fr * r:
                raise InvalidSchedule(n, "est2", measured=float(d_fr), bound=float(e_fr * r))
        else:
            log_1p_r = _log_pair(1 + r)
            lhs_hi = _padd(s.log_eps[n], log_1p_r)
            rhs_lo = _psub(_pdouble(s.log_delta[n - 1]), _pdouble(_log_pair_int(m)))
            if not _certainly_less(lhs_hi, rhs_lo):
                raise InvalidSchedule(n, "est1", measured=_pmid_float(lhs_hi),
                                      bound=_pmid_float(rhs_lo))
            if not _certainly_less(s.log_delta[n], _padd(s.log_eps[n], _log_pair(r))):
                raise InvalidSchedule(n, "est2", measured=_pmid_float(s.log_delta[n]),
                                      bound=_pmid_float(_padd(s.log_eps[n], _log_pair(r))))


@dataclass(frozen=True)
class ScheduleReport:
    tail_sums: tuple
    increments: tuple
    tail_converges: bool
    tail_bound: float
    super_exponential_m: bool
    scales_separate: tuple


def validate_schedule(s: ParameterSchedule) -> ScheduleReport:
    """Convergence, growth and scale-separation diagnostics.

    tail_converges applies the sufficient prefix test "increment ratios stay
    <= 0.95"; when it passes, tail_bound is the geometric extrapolation of the
    partial sums, otherwise inf. super_exponential_m uses the concrete
    sufficient condition m_{k+1} >= m_k^2 with m_k >= 2 from some index on.
    scales_separate[n] reports whether the C=3 component-radius brackets at
    depths n and n+1 certify max radius at n+1 < min radius at n.
    """
    incs = []
    sums = []
    total = 0.0
    for n in range(1, s.depth + 1):
        inc = abs(_pmid_float(_log_pair(s.r_seq[n - 1]))) / 2.0 ** n
        incs.append(inc)
        total += inc
        sums.append(total)

    converges = True
    bound = sums[-1] if sums else 0.0
    worst = 0.0
    for a, b in zip(incs, incs[1:]):
        if a > 0:
            worst = max(worst, b / a)
    if incs:
        if worst > 0.95:
            converges = False
            bound = math.inf
        elif len(incs) > 1:
            q = max(worst, 0.5)
            bound = sums[-1] + incs[-1] * q / (1 - q)

    superexp = False
    ms = s.m_seq
    for start in range(len(ms)):
        run = ms[start:]
        if run and all(m >= 2 for m in run) and all(b >= a * a for a, b in zip(run, run[1:])):
            superexp = True
            break

    log3 = _log_pair_int(3)
    log4 = _log_pair_int(4)
    separate = []
    for n in range(s.depth):
        # upper bracket at depth n+1: (n+1)(log3 - log4) + log R_{n+1} - log M_{n+1}
        up = s.log_R[n + 1]
        lo = s.log_R[n]
        for _ in range(n + 1):
            up = _padd(up, _psub(log3, log4))
        up = _psub(up, s.log_M[n + 1])
        for _ in range(n):
            lo = _psub(lo, _padd(log3, log4))
        lo = _psub(lo, s.log_M[n])
        separate.append(_certainly_less(up, lo))

    return ScheduleReport(tail_sums=tuple(sums), increments=tuple(incs),
                          tail_converges=converges, tail_bound=bound,
                          super_exponential_m=superexp, scales_separate=tuple(separate))


def capacity_drift(s: ParameterSchedule, n) -> float:
    """(1/2^n) log delta_n + sum_{k<=n} |log r_k| / 2^k for ordinary schedules.

    The printed source formula equates the two terms up to O(1) with a sign
    that cannot hold (log delta_n < 0); this combination is the one that stays
    bounded, and the acceptance values (-1.386, -1.733, ... -> -2.0794 for
    r = 1/10) confirm it.
    """
    if any(m != 1 for m in s.m_seq):
        raise NotOrdinary("capacity drift is defined for m identically 1")
    if not 0 <= n <= s.depth:
        raise ValueError("depth out of range")
    p = SCHED_PREC
    acc = B.mul(_mid(s.log_delta[n]), B.from_fraction(Fraction(1, 2 ** n), p, "n"), p, "n")
    for k in range(1, n + 1):
        term = B.abs(_mid(_log_pair(s.r_seq[k - 1])))
        acc = B.add(acc, B.mul(term, B.from_fraction(Fraction(1, 2 ** k), p, "n"), p, "n"), p, "n")
    return B.to_float(acc)


def _mid(pair):
    return B.mul(B.add(pair[0], pair[1], SCHED_PREC, "n"),
                 B.from_fraction(Fraction(1, 2), SCHED_PREC, "n"), SCHED_PREC, "n")


def choose_m(theta, A, C, depth, r_seq=Fraction(1, 10)):
    """Smallest lattice m-sequence making theta beat the growth requirement.

    Searches m_n = 2^(2^k_n) with k_1 < k_2 < ... (every lattice sequence is
    super-exponential) and picks the lexicographically smallest one with

        log theta(A^n R_n / M_n) >= n log(C A) - 2 log R_n      for n <= depth,

    consulted entirely in log-space through the gauge's log-argument form.
    The spec-level signature omits the radius sequence although the condition
    references R_n; it enters as a keyword with the documented default 1/10.

    Raises GaugeTooWeak if theta fails the divergence precondition or no
    exponent <= 24 works at some step.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth == 0:
        return []
    A = Fraction(A)
    C = Fraction(C)
    if A < 1 or C < 3:
        raise ValueError("need A >= 1 and C >= 3")
    rs = _normalize_r(r_seq, depth)

    # Divergence precondition, sampled: theta(x) -> +inf as x -> 0, i.e. the
    # log-form must grow without bound along log x -> -inf.
    samples = [theta.log_value_at_log_arg(lx) for lx in (-2.0, -50.0, -1e4, -1e7)]
    if not all(b > a for a, b in zip(samples, samples[1:])) or samples[-1] < samples[0] + 2.0:
        raise GaugeTooWeak("gauge does not diverge at 0 (sampled check)")

    log_A = math.log(A)
    log_CA = math.log(C * A)
    log_R = 0.0
    log_M = 0.0
    ks = []
    out = []
    k_min = 0
    LOG2 = math.log(2.0)
    for n in range(1, depth + 1):
        log_R += math.log(rs[n - 1])
        rhs = n * log_CA - 2.0 * log_R
        chosen = None
        for k in range(k_min, _CHOOSE_M_KCAP + 1):
            log_m = (1 << k) * LOG2
            arg = n * log_A + log_R - (log_M + log_m)
            if theta.log_value_at_log_arg(arg) >= rhs:
                chosen = k
                break
        if chosen is None:
            raise GaugeTooWeak(f"no lattice m with k <= {_CHOOSE_M_KCAP} works at n={n}")
        ks.append(chosen)
        log_M += (1 << chosen) * LOG2
        out.append(1 << (1 << chosen))
        k_min = chosen + 1
    return out


def verify_m_choice(theta, A, C, m_seq, r_seq=Fraction(1, 10), log_theta=None) -> bool:
    """Independent re-check of the m-selection inequality.

    Recomputes every quantity from scratch with mpmath at 300 bits, sharing no
    arithmetic with the search above. For closed-form gauges the log-form is
    rebuilt from the symbolic parameters; a custom log_theta callable can be
    supplied for table gauges.
    """
    from mpmath import mp, mpf

    depth = len(m_seq)
    rs = _normalize_r(r_seq, depth)
    A = Fraction(A)
    C = Fraction(C)
    old = mp.prec
    mp.prec = 300
    try:
        if log_theta is None:
            kind = getattr(theta, "kind", None)
            if kind == "power_log":
                a, b, d, c = theta.params
                def log_theta(lx):  # noqa: E731 shadows on purpose
                    lx = mpf(lx)
                    acc = mp.log(c) + a * lx
                    if b:
                        acc += b * mp.log(abs(lx))
                    if d:
                        acc += d * mp.log(mp.log(abs(lx)))
                    return acc
            else:
                log_theta = theta.log_value_at_log_arg

        def mplog_frac(fr):
            return mp.log(mpf(fr.numerator)) - mp.log(mpf(fr.denominator))

        log_A = mplog_frac(A)
        log_CA = mplog_frac(A * C)
        logR = mpf(0)
        logM = mpf(0)
        for n in range(1, depth + 1):
            logR += mplog_frac(rs[n - 1])
            m = m_seq[n - 1]
            if m == 1 << (m.bit_length() - 1):
                logM += (m.bit_length() - 1) * mp.log(2)
            else:
                logM += mp.log(mpf(m))
            arg = n * log_A + logR - logM
            rhs = n * log_CA - 2 * logR
            if log_theta(float(arg)) < rhs - mpf(10) ** -20:
                return False
        return True
    finally:
        mp.prec = old


def schedule_records(s: ParameterSchedule):
    """Serialization records: one per n with r as p/q, m, and decimal logs."""
    from .artifacts import format_backend_sig30

    ln10 = B.log(B.from_int(10, SCHED_PREC, "n"), SCHED_PREC, "n")
    rows = []
    for n in range(s.depth + 1):
        row = {"n": n}
        if n == 0:
            row["r"] = ""
            row["m"] = ""
        else:
            r = s.r_seq[n - 1]
            row["r"] = f"{r.numerator}/{r.denominator}"
            row["m"] = str(s.m_seq[n - 1])
        row["log10_delta"] = format_backend_sig30(
            B.div(_mid(s.log_delta[n]), ln10, SCHED_PREC, "n"))
        row["log10_eps"] = "" if n == 0 else format_backend_sig30(
            B.div(_mid(s.log_eps[n]), ln10, SCHED_PREC, "n"))
        rows.append(row)
    return rows
