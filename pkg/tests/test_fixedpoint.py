import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ebpfml.fixedpoint import (
    FX_MAX,
    FX_MIN,
    FX_ONE,
    FX_SHIFT,
    FxDomainError,
    from_fixed,
    from_fixed_exact,
    fx_add,
    fx_log2,
    fx_mul,
    fx_sub,
    log2_lut_c_block,
    to_fixed,
)

raws = st.integers(min_value=FX_MIN, max_value=FX_MAX)
small_raws = st.integers(min_value=-(1 << 40), max_value=1 << 40)


def test_format_constants():
    assert FX_SHIFT == 16
    assert FX_ONE == 1 << 16
    assert FX_MIN == -(1 << 63)
    assert FX_MAX == (1 << 63) - 1


def test_to_fixed_basics():
    assert to_fixed(0) == 0
    assert to_fixed(1) == FX_ONE
    assert to_fixed(-1) == -FX_ONE
    assert to_fixed(0.5) == 1 << 15
    assert to_fixed(42) == 42 << 16


def test_to_fixed_rounds_half_away_from_zero():
    half_step = 1.0 / (1 << 17)  # exactly representable in binary
    assert to_fixed(half_step) == 1
    assert to_fixed(-half_step) == -1
    assert to_fixed(1.0 + half_step) == FX_ONE + 1
    assert to_fixed(-1.0 - half_step) == -FX_ONE - 1


def test_to_fixed_saturates():
    assert to_fixed(1e30) == FX_MAX
    assert to_fixed(-1e30) == FX_MIN


def test_to_fixed_rejects_non_finite():
    for bad in (float("nan"), float("inf"), float("-inf")):
        with pytest.raises(ValueError):
            to_fixed(bad)


@given(raws)
def test_round_trip_exact_path(raw):
    # from_fixed_exact is a Fraction, so the round trip is lossless
    assert to_fixed(from_fixed_exact(raw)) == raw


@given(small_raws)
def test_round_trip_float_path(raw):
    # below 2^40 the float64 mantissa holds raw/2^16 exactly
    assert to_fixed(from_fixed(raw)) == raw


@given(raws, raws)
def test_add_matches_big_int_with_saturation(a, b):
    want = max(FX_MIN, min(FX_MAX, a + b))
    assert fx_add(a, b) == want


@given(raws, raws)
def test_sub_matches_big_int_with_saturation(a, b):
    want = max(FX_MIN, min(FX_MAX, a - b))
    assert fx_sub(a, b) == want


@given(raws, raws)
def test_mul_matches_big_int_with_saturation(a, b):
    want = max(FX_MIN, min(FX_MAX, (a * b) >> FX_SHIFT))
    assert fx_mul(a, b) == want


def test_mul_edge_cases():
    assert fx_mul(FX_ONE, FX_ONE) == FX_ONE
    assert fx_mul(-FX_ONE, FX_ONE) == -FX_ONE
    assert fx_mul(FX_MIN, FX_ONE) == FX_MIN
    assert fx_mul(FX_MIN, FX_MIN) == FX_MAX  # saturates positive
    assert fx_mul(FX_MAX, FX_MAX) == FX_MAX
    assert fx_mul(FX_MIN, -FX_ONE) == FX_MAX
    # floor semantics on the truncated product
    assert fx_mul(1, -1) == -1
    assert fx_mul(1, 1) == 0


@given(raws)
def test_mul_identity(a):
    assert fx_mul(a, FX_ONE) == a
    assert fx_mul(a, 0) == 0


def test_log2_exact_at_powers_of_two():
    for k in range(-16, 47):
        v = to_fixed(2.0**k) if k < 0 else (1 << (16 + k))
        assert fx_log2(v) == k * FX_ONE, f"2^{k}"


def test_log2_known_points():
    assert abs(fx_log2(to_fixed(2.0)) - to_fixed(1.0)) <= FX_ONE >> 8
    assert abs(fx_log2(to_fixed(0.5)) - to_fixed(-1.0)) <= FX_ONE >> 8


def test_log2_domain_error():
    with pytest.raises(FxDomainError):
        fx_log2(0)
    with pytest.raises(FxDomainError):
        fx_log2(-1)


def test_log2_error_bound_random(rng):
    # absolute error <= 2^-8 over the whole positive range
    raws_pos = rng.integers(1, FX_MAX, size=1000, dtype=np.int64)
    bound = 2.0**-8
    for raw in raws_pos:
        got = fx_log2(int(raw)) / FX_ONE
        want = math.log2(raw / FX_ONE)
        assert abs(got - want) <= bound


@given(st.integers(min_value=1, max_value=FX_MAX // 2))
def test_log2_monotone_non_decreasing(v):
    assert fx_log2(2 * v) >= fx_log2(v)


def test_lut_c_block_shape():
    block = log2_lut_c_block()
    assert block.startswith("static const s64 fx_log2_lut[256]")
    assert block.rstrip().endswith("};")
    # spot anchors: log2(1) = 0, log2(1.5), log2(255/256 + 1)
    assert " 0," in block
    assert "38336" in block
    assert "65351" in block


def test_exact_fraction_round_trip_randoms(rng):
    for _ in range(200):
        raw = int(rng.integers(FX_MIN, FX_MAX, dtype=np.int64))
        f = from_fixed_exact(raw)
        assert isinstance(f, Fraction)
        assert to_fixed(f) == raw
