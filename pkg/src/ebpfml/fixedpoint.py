"""Q47.16 signed fixed-point arithmetic.

Values are signed 64-bit integers interpreted as value * 2^-16.  Every
operation saturates to [FX_MIN, FX_MAX] instead of wrapping, and every
operation is a pure function of its raw integer inputs, so results are
identical in this library, in the generated restricted C, and in the
generated-code interpreter.

Rounding conventions: conversion rounds half away from zero; multiplication
truncates (arithmetic shift of the 128-bit product), matching what the
generated code does with its 64-bit emulation.
"""

import math
from fractions import Fraction

from . import _kernels
from ._kernels import FX_MAX, FX_MIN, FX_ONE, FX_SHIFT, LOG2_LUT

__all__ = [
    "FX_SHIFT",
    "FX_ONE",
    "FX_MIN",
    "FX_MAX",
    "FxDomainError",
    "to_fixed",
    "from_fixed",
    "from_fixed_exact",
    "fx_add",
    "fx_sub",
    "fx_mul",
    "fx_log2",
    "LOG2_LUT",
    "log2_lut_c_block",
]


class FxDomainError(ValueError):
    """Raised for operations outside their mathematical domain (e.g. log2 of 0)."""


def _sat(raw):
    if raw > FX_MAX:
        return FX_MAX
    if raw < FX_MIN:
        return FX_MIN
    return raw


def to_fixed(x):
    """Convert a real number to raw Q47.16, rounding half away from zero.

    Accepts int, float, or Fraction.  The conversion is exact (no float
    round-off beyond the input's own representation): the scaled value is
    formed as a rational and rounded once.
    """
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("to_fixed requires a finite value")
        q = Fraction(x) * FX_ONE
    elif isinstance(x, Fraction):
        q = x * FX_ONE
    else:
        return _sat(int(x) * FX_ONE)
    n, d = q.numerator, q.denominator
    if n >= 0:
        raw = (2 * n + d) // (2 * d)
    else:
        raw = -((-2 * n + d) // (2 * d))
    return _sat(raw)


def from_fixed(raw):
    """Raw Q47.16 to float.  Exact for |raw| <= 2^53; see from_fixed_exact."""
    return raw / float(FX_ONE)


def from_fixed_exact(raw):
    """Raw Q47.16 to an exact Fraction (lossless over the full raw range)."""
    return Fraction(int(raw), FX_ONE)


def fx_add(a, b):
    return int(_kernels.add_raw(a, b))


def fx_sub(a, b):
    return int(_kernels.sub_raw(a, b))


def fx_mul(a, b):
    return int(_kernels.mul_raw(a, b))


def fx_log2(x):
    """Fixed-point log2.  Absolute error <= 2^-8; exact at powers of two."""
    if x <= 0:
        raise FxDomainError("fx_log2 requires a positive input")
    return int(_kernels.log2_raw(x))


def log2_lut_c_block(name="fx_log2_lut", per_line=8):
    """The mantissa table as a deterministic C constant-array block.

    The compiler module embeds this text into generated translation units
    that need entropy support.
    """
    vals = [str(int(v)) for v in LOG2_LUT]
    lines = [f"static const s64 {name}[256] = {{"]
    for i in range(0, 256, per_line):
        lines.append("    " + ", ".join(vals[i : i + per_line]) + ",")
    lines.append("};")
    return "\n".join(lines) + "\n"
