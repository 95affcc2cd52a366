"""Tests for float formats and quantization."""

import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nondetlab.errors import UsageError
from nondetlab.fpemu import BF16, EXACT, FP16, FP32, get_format, quantize, round_to_format, ulp

finite_doubles = st.floats(allow_nan=False, allow_infinity=False, width=64)


def bf16_from_float32_bits(x: float) -> float:
    """Bit-level BF16 rounding of a float32 value."""
    bits = struct.unpack("<I", struct.pack("<f", x))[0]
    bits = (bits + 0x7FFF + ((bits >> 16) & 1)) & 0xFFFF0000
    return struct.unpack("<f", struct.pack("<I", bits))[0]


def test_format_parameters():
    assert (BF16.exponent_bits, BF16.significand_bits) == (8, 7)
    assert (FP16.exponent_bits, FP16.significand_bits) == (5, 10)
    assert (FP32.exponent_bits, FP32.significand_bits) == (8, 23)
    assert FP16.max_finite == 65504.0
    assert FP16.min_normal == 2.0 ** -14
    assert FP16.min_subnormal == 2.0 ** -24
    assert BF16.max_finite == (2 - 2 ** -7) * 2.0 ** 127


def test_get_format_is_case_insensitive():
    assert get_format("bf16") is BF16
    assert get_format("Exact") is EXACT
    with pytest.raises(UsageError):
        get_format("fp8")


def test_bf16_ties_round_to_even():
    assert round_to_format(1.0 + 2 ** -9, BF16) == 1.0
    assert round_to_format(1.0 + 2 ** -8, BF16) == 1.0
    assert round_to_format(1.0 + 3 * 2 ** -8, BF16) == 1.0 + 2 ** -6
    assert round_to_format(1.0 + 2 ** -7, BF16) == 1.0 + 2 ** -7


def test_overflow_goes_to_signed_infinity():
    assert round_to_format(3.5e38, BF16) == math.inf
    assert round_to_format(-70000.0, FP16) == -math.inf
    # halfway above max_finite rounds to even, which overflows
    assert round_to_format(65520.0, FP16) == math.inf
    assert round_to_format(65519.0, FP16) == 65504.0


def test_signed_zero_and_nan():
    z = quantize([-0.0, -(2.0 ** -26)], FP16)
    assert np.all(z == 0.0)
    assert np.all(np.signbit(z))
    assert math.isnan(round_to_format(math.nan, BF16))
    assert round_to_format(math.inf, FP16) == math.inf


def test_subnormals():
    assert round_to_format(2.0 ** -25, FP16) == 0.0
    assert round_to_format(3 * 2.0 ** -26, FP16) == 2.0 ** -24
    assert round_to_format(5 * 2.0 ** -24, FP16) == 5 * 2.0 ** -24


def test_flush_subnormals():
    flush = FP16.with_flush()
    assert flush.flush_subnormals
    assert round_to_format(2.0 ** -20, flush) == 0.0
    assert round_to_format(2.0 ** -14, flush) == 2.0 ** -14
    assert np.signbit(quantize(-(2.0 ** -20), flush))


def test_exact_format_is_identity():
    x = np.array([0.1, -1e300, 5e-324])
    assert np.array_equal(quantize(x, EXACT), x)


def test_ulp():
    assert ulp(1.0, BF16) == 2.0 ** -7
    assert ulp(1.0, FP32) == 2.0 ** -23
    assert ulp(0.0, FP16) == 2.0 ** -24
    assert ulp(1.0, EXACT) == np.spacing(1.0)


def test_fp16_matches_numpy_cast(rng):
    x = np.concatenate([
        rng.normal(0, 1, 5000),
        rng.normal(0, 1e-6, 2000),
        rng.normal(0, 3e4, 2000),
        rng.uniform(-7e4, 7e4, 1000),
    ])
    expected = x.astype(np.float16).astype(np.float64)
    assert np.array_equal(quantize(x, FP16), expected)


def test_fp32_matches_numpy_cast(rng):
    x = np.concatenate([rng.normal(0, 1, 5000), rng.normal(0, 1e-40, 1000), rng.normal(0, 1e38, 1000)])
    with np.errstate(over="ignore"):
        expected = x.astype(np.float32).astype(np.float64)
    assert np.array_equal(quantize(x, FP32), expected)


def test_bf16_matches_bit_level_rounding(rng):
    x = rng.normal(0, 10, 5000).astype(np.float32).astype(np.float64)
    expected = np.array([bf16_from_float32_bits(v) for v in x])
    assert np.array_equal(quantize(x, BF16), expected)


def test_bf16_matches_ml_dtypes(rng):
    ml_dtypes = pytest.importorskip("ml_dtypes")
    x = np.concatenate([rng.normal(0, 1, 5000), rng.normal(0, 1e-39, 500)]).astype(np.float32)
    expected = x.astype(ml_dtypes.bfloat16).astype(np.float64)
    assert np.array_equal(quantize(x.astype(np.float64), BF16), expected)


@given(finite_doubles)
@settings(max_examples=300)
def test_quantize_is_idempotent(x):
    for fmt in (BF16, FP16, FP32):
        once = quantize(x, fmt)
        assert np.array_equal(quantize(once, fmt), once)


@given(finite_doubles, finite_doubles)
@settings(max_examples=300)
def test_quantize_is_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    for fmt in (BF16, FP16, FP32):
        assert quantize(lo, fmt) <= quantize(hi, fmt)
