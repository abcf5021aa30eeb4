"""Command-line front end: a flat key=value config in, CSV/PGM artifacts out.

Every artifact embeds the sha256 of the canonical config text, so a run is
reproducible from its own header comments. Worker count is deliberately
excluded from the canonical text: identical configs must produce identical
bytes at any parallelism.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction

from . import artifacts
from .analysis import (
    box_dimension_slice,
    convergence_report,
    harmonic_gap_check,
    jensen_cross_check,
    two_regime_check,
)
from .errors import CertificationFailure, InvalidSchedule, WermerlabError
from .gauges import GaugeFunction, modulus_from_h, tame_gauge
from .numeric import PrecisionContext, precision_for_depth
from .schedule import build_schedule, capacity_drift, schedule_records, validate_schedule
from .slicer import (
    SlicePlane,
    nesting_certificate,
    render_escape,
    slice_measure,
    slice_roots,
)
from .tower import TowerModel, all_signatures


class ConfigError(ValueError):
    pass


_DEFAULTS = {
    "schedule.r": "1/10",
    "schedule.m": "1,4",
    "schedule.depth": "2",
    "schedule.corrupt_level": "",
    "schedule.corrupt_factor": "1000000",
    "anchors.seed": "0",
    "precision.max_bits": "4096",
    "plane.z0_re": "2/5",
    "plane.z0_im": "0",
    "plane.gamma_re": "0",
    "plane.gamma_im": "0",
    "grids.slice": "12",
    "roots.depth": "",
    "roots.alpha_re": "0",
    "roots.alpha_im": "0",
    "measure.depth": "",
    "profile.samples": "4",
    "converge.n_max": "",
    "gauge.points": "12",
    "jensen.depth": "1",
    "jensen.radii": "3/100,2/25",
    "capacity.depth": "12",
    "dimension.depths": "0,1,2",
    "render.resolution": "32",
    "render.n_max": "",
}


class RunConfig:
    """Validated key=value map plus the canonical text it hashes to."""

    def __init__(self, text: str):
        values = dict(_DEFAULTS)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _DEFAULTS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = val
        self.values = values

    def override(self, key: str, value) -> None:
        self.values[key] = str(value)

    @property
    def canonical_text(self) -> str:
        return "".join(f"{k}={self.values[k]}\n" for k in sorted(self.values))

    @property
    def sha(self) -> str:
        return artifacts.config_hash(self.canonical_text)

    # -- typed getters ------------------------------------------------------

    def _get(self, key: str) -> str:
        return self.values[key]

    def fraction(self, key: str) -> Fraction:
        try:
            return Fraction(self._get(key))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: not a rational: {self._get(key)!r}") from exc

    def fraction_list(self, key: str):
        try:
            return [Fraction(part) for part in self._get(key).split(",") if part.strip()]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: not a rational list: {self._get(key)!r}") from exc

    def int(self, key: str, default=None) -> int:
        raw = self._get(key)
        if raw == "" and default is not None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: not an integer: {raw!r}") from exc

    def int_list(self, key: str):
        try:
            return [int(part) for part in self._get(key).split(",") if part.strip()]
        except ValueError as exc:
            raise ConfigError(f"{key}: not an integer list: {self._get(key)!r}") from exc


def _make_schedule(cfg: RunConfig):
    depth = cfg.int("schedule.depth")
    if depth < 0:
        raise ConfigError("schedule.depth must be >= 0")
    try:
        s = build_schedule(cfg.fraction_list("schedule.r"),
                           cfg.int_list("schedule.m"), depth)
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from exc
    if cfg.values["schedule.corrupt_level"]:
        s = s.with_corrupted_delta(cfg.int("schedule.corrupt_level"),
                                   cfg.fraction("schedule.corrupt_factor"))
    return s


def _make_tower(cfg: RunConfig) -> TowerModel:
    return TowerModel.make(_make_schedule(cfg), seed=cfg.int("anchors.seed"))


def _make_plane(cfg: RunConfig) -> SlicePlane:
    from .numeric import ExactComplex

    z0 = ExactComplex(cfg.fraction("plane.z0_re"), cfg.fraction("plane.z0_im"))
    gamma = ExactComplex(cfg.fraction("plane.gamma_re"), cfg.fraction("plane.gamma_im"))
    return SlicePlane.make(z0, gamma)


def _make_ctx(cfg: RunConfig, schedule, n: int) -> PrecisionContext:
    max_bits = cfg.int("precision.max_bits")
    return PrecisionContext(bits=precision_for_depth(schedule, n, max_bits=max_bits),
                            max_bits=max_bits)


def _comments(cfg: RunConfig, command: str, extra=()):
    return [f"wermerlab {command}", f"config_sha256={cfg.sha}", *extra]


def _sig30_float(v: float) -> str:
    """Exact decimal rendering (30 significant digits) of a float's dyadic value."""
    return artifacts.fraction_sig30(Fraction(float(v)))


def _sig30_fraction(fr: Fraction) -> str:
    return artifacts.fraction_sig30(fr)


def _write_csv(out_dir, name, columns, rows, comments):
    path = os.path.join(out_dir, name)
    artifacts.write_text(path, artifacts.csv_text(columns, rows, comments))
    return path


# -- commands ----------------------------------------------------------------


def _cmd_schedule(cfg, out_dir, workers):
    del workers
    s = _make_schedule(cfg)
    rows = [(rec["n"], rec["r"], rec["m"], rec["log10_delta"], rec["log10_eps"])
            for rec in schedule_records(s)]
    paths = [_write_csv(out_dir, "schedule.csv",
                        ("n", "r", "m", "log10_delta", "log10_eps"), rows,
                        _comments(cfg, "schedule", (f"corrupted={str(s.corrupted).lower()}",)))]
    report = validate_schedule(s)
    warning = "" if report.tail_converges else "divergent_tail"
    rep_rows = []
    for n in range(1, s.depth + 1):
        sep = report.scales_separate[n - 1] if n - 1 < len(report.scales_separate) else ""
        rep_rows.append((n, report.increments[n - 1], report.tail_sums[n - 1],
                         sep, warning))
    paths.append(_write_csv(
        out_dir, "schedule_report.csv",
        ("n", "increment", "tail_sum", "scales_separate", "warning"), rep_rows,
        _comments(cfg, "schedule", (
            f"tail_converges={str(report.tail_converges).lower()}",
            f"tail_bound={artifacts.format_float17(report.tail_bound)}",
            f"super_exponential_m={str(report.super_exponential_m).lower()}"))))
    return paths


def _cmd_certify(cfg, out_dir, workers):
    del workers
    t = _make_tower(cfg)
    plane = _make_plane(cfg)
    rows, extra = [], []
    for n in range(t.depth):
        cert = nesting_certificate(t, n, plane, _make_ctx(cfg, t.schedule, n + 1))
        extra.append(f"min_margin_n{n}={artifacts.format_float17(cert.min_margin)}")
        for row in cert.rows:
            rows.append((n, "/".join(str(i) for i in row.child_signature),
                         _sig30_float(row.child_center.real),
                         _sig30_float(row.child_center.imag),
                         _sig30_float(row.margin_intermediate),
                         _sig30_float(row.margin_sublevel),
                         _sig30_float(row.margin_disk)))
    return [_write_csv(out_dir, "certify.csv",
                       ("parent_depth", "child_signature", "center_re", "center_im",
                        "margin_intermediate", "margin_sublevel", "margin_disk"),
                       rows, _comments(cfg, "certify", extra))]


def _cmd_roots(cfg, out_dir, workers):
    del workers
    t = _make_tower(cfg)
    plane = _make_plane(cfg)
    n = cfg.int("roots.depth", default=t.depth)
    from .numeric import ExactComplex

    alpha = ExactComplex(cfg.fraction("roots.alpha_re"), cfg.fraction("roots.alpha_im"))
    ctx = _make_ctx(cfg, t.schedule, n)
    rows = []
    for sig in all_signatures(t, n):
        rs = slice_roots(t, sig, plane, alpha, ctx)
        for i, box in enumerate(rs.boxes):
            rl, rh, il, ih = box.to_fractions()
            rows.append((n, sig.index_int(t), i,
                         _sig30_fraction((rl + rh) / 2), _sig30_fraction((il + ih) / 2),
                         _sig30_fraction(max(rh - rl, ih - il) / 2),
                         _sig30_float(rs.sep_radii[i])))
    return [_write_csv(out_dir, "roots.csv",
                       ("depth", "signature", "root", "re", "im",
                        "box_halfwidth", "sep_radius"),
                       rows, _comments(cfg, "roots", (f"alpha_re={cfg.values['roots.alpha_re']}",
                                                      f"alpha_im={cfg.values['roots.alpha_im']}")))]


def _cmd_measure(cfg, out_dir, workers):
    del workers
    t = _make_tower(cfg)
    plane = _make_plane(cfg)
    n = cfg.int("measure.depth", default=t.depth)
    mu = slice_measure(t, n, plane, _make_ctx(cfg, t.schedule, n))
    rows = [(n, i, c.real, c.imag, w) for i, (c, w) in enumerate(mu.atoms)]
    total = mu.total_mass()
    return [_write_csv(out_dir, "measure.csv",
                       ("depth", "atom", "re", "im", "weight"), rows,
                       _comments(cfg, "measure",
                                 (f"total_mass={total.numerator}/{total.denominator}",)))]


def _cmd_profile(cfg, out_dir, workers):
    del workers
    t = _make_tower(cfg)
    plane = _make_plane(cfg)
    reg = two_regime_check(t, t.depth - 1, plane, samples=cfg.int("profile.samples"),
                           ctx=_make_ctx(cfg, t.schedule, t.depth))
    rows = [(p.real, p.imag, r, mass, regime) for p, r, mass, regime in reg.rows]
    extra = (f"depth={reg.depth}",
             f"c_plateau={artifacts.format_float17(reg.c_plateau)}",
             f"c_quadratic={artifacts.format_float17(reg.c_quadratic)}",
             f"c_quadratic_atlas={artifacts.format_float17(reg.c_quadratic_atlas)}",
             f"rad_child={artifacts.format_float17(reg.rad_child)}",
             f"rad_int={artifacts.format_float17(reg.rad_int)}",
             f"rad_parent={artifacts.format_float17(reg.rad_parent)}")
    return [_write_csv(out_dir, "profile.csv",
                       ("p_re", "p_im", "r", "mass", "regime"), rows,
                       _comments(cfg, "profile", extra))]


def _cmd_converge(cfg, out_dir, workers):
    del workers
    t = _make_tower(cfg)
    plane = _make_plane(cfg)
    grid = cfg.int("grids.slice")
    n_max = cfg.int("converge.n_max", default=t.depth)
    rep = convergence_report(t, n_max, grid)
    rows = []
    for n in range(n_max):
        ratio = rep.ratios[n - 1] if n >= 1 else ""
        rows.append((n, rep.gaps_u[n], rep.gaps_v[n], rep.bounds[n], ratio))
    paths = [_write_csv(out_dir, "converge.csv",
                        ("n", "gap_u", "gap_v", "bound", "ratio"), rows,
                        _comments(cfg, "converge",
                                  (f"fitted_B={artifacts.format_float17(rep.fitted_B)}",
                                   f"points={rep.points}")))]
    hrows = []
    bound = None
    for n in range(t.depth):
        gap = harmonic_gap_check(t, n, plane, grid)
        bound = abs(math.log(float(t.schedule.r_seq[n]))) + math.log(2.0)
        hrows.append((n, gap, bound))
    paths.append(_write_csv(out_dir, "harmonic.csv",
                            ("n", "max_gap", "bound"), hrows,
                            _comments(cfg, "converge")))
    return paths


def _cmd_gauge(cfg, out_dir, workers):
    del workers
    count = cfg.int("gauge.points")
    if count < 2:
        raise ConfigError("gauge.points must be >= 2")
    lo, hi = 1e-4, 0.5
    radii = [lo * (hi / lo) ** (i / (count - 1)) for i in range(count)]
    h = GaugeFunction.power(2)
    rows = [(r, modulus_from_h(h, r)) for r in radii]
    paths = [_write_csv(out_dir, "gauge_modulus.csv", ("r", "value"), rows,
                        _comments(cfg, "gauge", ("h=s^2",)))]
    theta = tame_gauge(GaugeFunction.power_log(1, 2))
    rows = [(r, theta.value(r)) for r in radii]
    paths.append(_write_csv(out_dir, "gauge_tame.csv", ("r", "value"), rows,
                            _comments(cfg, "gauge", ("psi=s|log s|^2",))))
    return paths


def _cmd_jensen(cfg, out_dir, workers):
    del workers
    t = _make_tower(cfg)
    plane = _make_plane(cfg)
    n = cfg.int("jensen.depth")
    if not 0 <= n <= t.depth:
        raise ConfigError("jensen.depth out of range")
    radii = [float(f) for f in cfg.fraction_list("jensen.radii")]
    ctx = _make_ctx(cfg, t.schedule, n)
    mu = slice_measure(t, n, plane, ctx)
    z0 = complex(plane.z0.to_complex())
    rows = []
    for c, _ in mu.atoms:
        for r in radii:
            quad, mass = jensen_cross_check(t, n, (z0, c), (0.0, 1.0), r, ctx=ctx)
            rows.append((n, c.real, c.imag, r, quad, mass, abs(quad - mass)))
    return [_write_csv(out_dir, "jensen.csv",
                       ("n", "p_re", "p_im", "r", "quadrature", "mass", "diff"),
                       rows, _comments(cfg, "jensen"))]


def _cmd_capacity(cfg, out_dir, workers):
    del workers
    depth = cfg.int("capacity.depth")
    ms = cfg.int_list("schedule.m")
    extra = []
    if any(m != 1 for m in ms):
        extra.append("ordinary_twin=true (m normalized to 1; drift needs m identically 1)")
    s = build_schedule(cfg.fraction_list("schedule.r"), 1, depth)
    rows = [(n, capacity_drift(s, n)) for n in range(depth + 1)]
    return [_write_csv(out_dir, "capacity.csv", ("n", "drift"), rows,
                       _comments(cfg, "capacity", extra))]


def _cmd_dimension(cfg, out_dir, workers):
    del workers
    t = _make_tower(cfg)
    plane = _make_plane(cfg)
    depths = cfg.int_list("dimension.depths")
    if any(d > t.depth for d in depths):
        raise ConfigError("dimension.depths exceeds schedule.depth")
    rows = [(e.depth, e.count, e.median_radius, e.estimate)
            for e in box_dimension_slice(t, plane, depths)]
    return [_write_csv(out_dir, "dimension.csv",
                       ("depth", "count", "median_radius", "estimate"), rows,
                       _comments(cfg, "dimension"))]


def _cmd_render(cfg, out_dir, workers):
    t = _make_tower(cfg)
    plane = _make_plane(cfg)
    res = cfg.int("render.resolution")
    n_max = cfg.int("render.n_max", default=t.depth)
    ctx = _make_ctx(cfg, t.schedule, n_max)
    raster = render_escape(t, plane, res, n_max, ctx, workers=workers)
    path = os.path.join(out_dir, "render.pgm")
    artifacts.write_pgm(path, raster.width, raster.height, raster.pixels,
                        comment=f"config_sha256={cfg.sha} {raster.comment}")
    return [path]


def _cmd_suite(cfg, out_dir, workers):
    from . import acceptance

    failures = 0
    for name in ("schedule", "certify", "roots", "measure", "profile", "converge",
                 "gauge", "jensen", "capacity", "dimension", "render"):
        rc = _run_one(name, cfg, out_dir, workers)
        if rc != 0:
            failures += 1
    results = acceptance.run_all()
    for res in results:
        print(res.line())
    rows = [(r.number, r.title, r.passed, r.detail.replace(",", ";")) for r in results]
    _write_csv(out_dir, "suite.csv", ("criterion", "title", "passed", "detail"),
               rows, _comments(cfg, "suite"))
    print(os.path.join(out_dir, "suite.csv"))
    if failures or not all(r.passed for r in results):
        return 1
    return 0


_COMMANDS = {
    "schedule": (_cmd_schedule, "schedule"),
    "certify": (_cmd_certify, "slicer"),
    "roots": (_cmd_roots, "slicer"),
    "measure": (_cmd_measure, "slicer"),
    "profile": (_cmd_profile, "analysis"),
    "converge": (_cmd_converge, "analysis"),
    "gauge": (_cmd_gauge, "gauges"),
    "jensen": (_cmd_jensen, "analysis"),
    "capacity": (_cmd_capacity, "schedule"),
    "dimension": (_cmd_dimension, "analysis"),
    "render": (_cmd_render, "slicer"),
    "suite": (_cmd_suite, "acceptance"),
}


def _failure_line(exc: WermerlabError, module: str) -> str:
    if isinstance(exc, CertificationFailure):
        return artifacts.failure_record(exc.reason, module, exc.location,
                                        exc.measured, exc.bound)
    if isinstance(exc, InvalidSchedule):
        return artifacts.failure_record(exc.which, "schedule", f"step {exc.n}",
                                        exc.measured, exc.bound)
    return artifacts.failure_record(type(exc).__name__, module, str(exc),
                                    math.nan, math.nan)


def _run_one(command: str, cfg: RunConfig, out_dir: str, workers: int) -> int:
    fn, module = _COMMANDS[command]
    if command == "suite":
        return fn(cfg, out_dir, workers)
    try:
        paths = fn(cfg, out_dir, workers)
    except WermerlabError as exc:
        print(_failure_line(exc, module))
        return 1
    for path in paths:
        print(path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wermerlab",
        description="Recursive polynomial tower laboratory: schedules, certified "
                    "slice geometry, potentials, slice measures.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="key=value config file (defaults apply when omitted)")
    parser.add_argument("--out", metavar="DIR", default="artifacts",
                        help="output directory (WERMERLAB_OUT overrides)")
    parser.add_argument("--workers", metavar="N", type=int, default=1)
    parser.add_argument("--max-bits", metavar="B", type=int, default=None,
                        help="override precision.max_bits")
    parser.add_argument("--seed", metavar="S", type=int, default=None,
                        help="override anchors.seed")
    args = parser.parse_args(argv)

    text = ""
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    try:
        cfg = RunConfig(text)
        if args.seed is not None:
            cfg.override("anchors.seed", args.seed)
        if args.max_bits is not None:
            cfg.override("precision.max_bits", args.max_bits)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        out_dir = os.environ.get("WERMERLAB_OUT") or args.out
        os.makedirs(out_dir, exist_ok=True)
        return _run_one(args.command, cfg, out_dir, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
