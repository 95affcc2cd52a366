"""Reduced-precision arithmetic emulation."""

from nondetlab.fpemu.formats import BF16, EXACT, FP16, FP32, FloatFormat, get_format, quantize, round_to_format, ulp
from nondetlab.fpemu.reduction import (
    AccumulationOrder,
    AccumulationPolicy,
    Spread,
    dot_ordered,
    exact_sum,
    matvec_ordered,
    permutation_spread,
    sum_ordered,
)

__all__ = [
    "BF16",
    "EXACT",
    "FP16",
    "FP32",
    "AccumulationOrder",
    "AccumulationPolicy",
    "FloatFormat",
    "Spread",
    "dot_ordered",
    "exact_sum",
    "get_format",
    "matvec_ordered",
    "permutation_spread",
    "quantize",
    "round_to_format",
    "sum_ordered",
    "ulp",
]
