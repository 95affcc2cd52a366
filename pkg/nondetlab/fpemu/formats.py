"""Floating-point formats and round-to-nearest-even quantization.

Values of every emulated format live inside float64. A value is "in" a
format when quantizing it to that format leaves it unchanged. Rounding
scales the value so the format's ulp becomes 1, rounds to an integer
(ties to even) and scales back; both scalings are exact powers of two.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import UsageError


@dataclass(frozen=True)
class FloatFormat:
    """A binary floating-point format.

    Attributes:
        name: Label (BF16, FP16, FP32, or EXACT for the oracle path)
        exponent_bits: Exponent field width
        significand_bits: Explicit significand bits (hidden bit excluded)
        flush_subnormals: Flush subnormal results and inputs to signed zero
    """

    name: str
    exponent_bits: int
    significand_bits: int
    flush_subnormals: bool = False

    @property
    def is_exact(self) -> bool:
        """True for the oracle path, where no emulated rounding happens."""
        return self.name == "EXACT"

    @property
    def bias(self) -> int:
        return (1 << (self.exponent_bits - 1)) - 1

    @property
    def emax(self) -> int:
        return self.bias

    @property
    def emin(self) -> int:
        return 1 - self.bias

    @property
    def max_finite(self) -> float:
        return float(np.ldexp(2.0 - 2.0 ** -self.significand_bits, self.emax))

    @property
    def min_normal(self) -> float:
        return float(np.ldexp(1.0, self.emin))

    @property
    def min_subnormal(self) -> float:
        return float(np.ldexp(1.0, self.emin - self.significand_bits))

    @property
    def native_dtype(self) -> np.dtype | None:
        """numpy dtype whose IEEE arithmetic rounds exactly like this format, if any."""
        if (self.exponent_bits, self.significand_bits, self.flush_subnormals) == (8, 23, False):
            return np.dtype(np.float32)
        return None

    def with_flush(self, flush: bool = True) -> "FloatFormat":
        """Copy of this format with flush-to-zero switched on or off."""
        return FloatFormat(self.name, self.exponent_bits, self.significand_bits, flush)


BF16 = FloatFormat("BF16", 8, 7)
FP16 = FloatFormat("FP16", 5, 10)
FP32 = FloatFormat("FP32", 8, 23)
# Oracle path: the float64 working real itself, sums taken exactly.
EXACT = FloatFormat("EXACT", 11, 52)

_FORMATS = {f.name: f for f in (BF16, FP16, FP32, EXACT)}


def get_format(name: str) -> FloatFormat:
    """Look up a format by name (case-insensitive).

    Args:
        name: One of BF16, FP16, FP32, EXACT

    Returns:
        The matching FloatFormat
    """
    try:
        return _FORMATS[name.upper()]
    except KeyError:
        raise UsageError(f"unknown float format '{name}' (expected one of {', '.join(_FORMATS)})") from None


def quantize(x: ArrayLike, fmt: FloatFormat) -> np.ndarray:
    """Round every element of ``x`` to the nearest value of ``fmt``.

    Round-to-nearest, ties-to-even. Overflow goes to signed infinity, the
    sign of zero is kept, subnormals are produced unless the format
    flushes them, and NaN stays NaN.

    Args:
        x: Values in the float64 working real
        fmt: Target format

    Returns:
        New float64 array of representable values
    """
    x = np.array(x, dtype=np.float64, copy=True)
    if fmt.is_exact:
        return x

    p = fmt.significand_bits
    with np.errstate(all="ignore"):
        if fmt.flush_subnormals:
            x = np.where(np.abs(x) < fmt.min_normal, np.copysign(0.0, x), x)
        _, e = np.frexp(x)
        # exponent of the ulp; subnormals share the emin spacing
        q = np.maximum(e - 1, fmt.emin) - p
        r = np.ldexp(np.rint(np.ldexp(x, -q)), q)
        r = np.where(np.isfinite(x) & (np.abs(r) > fmt.max_finite), np.copysign(np.inf, x), r)
        if fmt.flush_subnormals:
            r = np.where(np.abs(r) < fmt.min_normal, np.copysign(0.0, r), r)
    return r


def round_to_format(x: float, fmt: FloatFormat) -> float:
    """Round a single value to ``fmt``.

    Example:
        >>> round_to_format(1.0 + 2**-9, BF16)
        1.0
    """
    return float(quantize(x, fmt))


def ulp(x: ArrayLike, fmt: FloatFormat) -> np.ndarray:
    """Spacing of ``fmt`` values at the magnitude of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if fmt.is_exact:
        return np.spacing(np.abs(x))
    _, e = np.frexp(x)
    # zero has the subnormal spacing
    e = np.where(x == 0, fmt.emin, e)
    q = np.maximum(e - 1, fmt.emin) - fmt.significand_bits
    return np.ldexp(1.0, q)
