"""Deterministic artifact encoding: CSV tables, decimal strings, PGM rasters.

Everything that leaves the process goes through this module so byte-identical
reruns are a property of the encoders, not of call sites. Floats print at 17
significant digits (round-trip exact for binary64), exact rationals print
through a 30-digit decimal context, and rasters are 16-bit big-endian
portable graymaps.
"""

from __future__ import annotations

import hashlib
import struct
import sys
from decimal import Context, ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Iterable, Sequence

from .backend import active as B

# Subdivision counts reach 2^(2^24); their decimal form must stay printable.
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(max(sys.get_int_max_str_digits(), 6_000_000))

_SIG30 = Context(prec=30, rounding=ROUND_HALF_EVEN)


def fraction_sig30(fr: Fraction) -> str:
    """fr rounded to 30 significant decimal digits, half-even."""
    return str(_SIG30.divide(Decimal(fr.numerator), Decimal(fr.denominator)))


def format_backend_sig30(x) -> str:
    """Backend real -> 30 significant digits via its exact dyadic value."""
    return fraction_sig30(B.to_fraction(x))


def format_float17(v: float) -> str:
    return f"{float(v):.17g}"


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float17(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, str):
        if "," in v or "\n" in v:
            raise ValueError(f"cell value may not contain separators: {v!r}")
        return v
    raise TypeError(f"unsupported CSV cell type {type(v).__name__}")


def csv_text(columns: Sequence[str], rows: Iterable[Sequence],
             comments: Sequence[str] = ()) -> str:
    """CSV with '#'-prefixed header comments, then a header row, then data."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        cells = [_cell(v) for v in row]
        if len(cells) != len(columns):
            raise ValueError("row width does not match the header")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def pgm_bytes(width: int, height: int, pixels: Sequence[int],
              comment: str = "") -> bytes:
    """P5 portable graymap, 16 bit, big-endian sample order."""
    if len(pixels) != width * height:
        raise ValueError("pixel count does not match dimensions")
    if comment and ("\n" in comment):
        raise ValueError("comment must be a single line")
    head = f"P5\n# {comment}\n{width} {height}\n65535\n" if comment \
        else f"P5\n{width} {height}\n65535\n"
    body = struct.pack(f">{len(pixels)}H", *pixels)
    return head.encode("ascii") + body


def write_pgm(path, width: int, height: int, pixels: Sequence[int],
              comment: str = "") -> None:
    with open(path, "wb") as handle:
        handle.write(pgm_bytes(width, height, pixels, comment))


def failure_record(invariant: str, module: str, location: str,
                   measured, bound) -> str:
    """Single-line machine-readable failure description."""
    def squash(text: str) -> str:
        return "_".join(str(text).split()) or "-"

    return (f"invariant={squash(invariant)} module={squash(module)} "
            f"location={squash(location)} measured={format_float17(float(measured))} "
            f"bound={format_float17(float(bound))}")
