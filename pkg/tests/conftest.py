"""Shared fixtures and exact-arithmetic reference helpers."""

import logging
import math
from fractions import Fraction

import numpy as np
import pytest

from nondetlab.fpemu import FloatFormat


def round_fraction(value: Fraction, fmt: FloatFormat) -> float:
    """Round an exact rational to ``fmt`` (nearest, ties to even)."""
    if value == 0:
        return 0.0
    sign = -1 if value < 0 else 1
    a = abs(value)
    e = a.numerator.bit_length() - a.denominator.bit_length()
    if Fraction(2) ** e > a:
        e -= 1
    elif Fraction(2) ** (e + 1) <= a:
        e += 1
    q = max(e, fmt.emin) - fmt.significand_bits
    n = round(a / Fraction(2) ** q)
    result = Fraction(n) * Fraction(2) ** q
    if result > Fraction(fmt.max_finite):
        return math.copysign(math.inf, sign)
    return sign * float(result)


def fold_reference(values, order, fmt: FloatFormat) -> float:
    """Left fold of ``values`` in ``order`` with one exact rounding per addition."""
    acc = None
    for i in order:
        v = round_fraction(Fraction(values[i]), fmt)
        acc = v if acc is None else round_fraction(Fraction(acc) + Fraction(v), fmt)
    return acc


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _reset_package_logger():
    """Drop handlers the command line attaches to the package logger."""
    yield
    root = logging.getLogger("nondetlab")
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.setLevel(logging.NOTSET)
