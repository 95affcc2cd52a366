"""Order-dependent reductions under emulated rounding.

Every addition is correctly rounded into the accumulation format: the
float64 sum is computed together with its exact error (TwoSum), then
rounded to odd before the final quantization, so no double rounding can
creep in through the float64 intermediate.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import DataError, UsageError
from nondetlab.fpemu.formats import FloatFormat, quantize
from nondetlab.log import get_logger

logger = get_logger(__name__)

# Orders gathered per fold pass; bounds the (rows x orders) working set.
_ORDER_CHUNK = 256
# Elements of permuted addends materialized at once by the native fold.
_NATIVE_BLOCK = 1 << 22


class AccumulationPolicy(str, Enum):
    """How a permuted sequence is reduced."""

    SEQUENTIAL = "sequential"
    RANDOM_PERMUTATION = "random_permutation"
    PAIRWISE_TREE = "pairwise_tree"


@dataclass(frozen=True)
class AccumulationOrder:
    """A reduction order over indices ``0..D-1``.

    Sequential and random_permutation orders are both left folds over
    ``permutation``; the label records where the permutation came from.
    pairwise_tree reduces the permuted sequence with a left-balanced binary
    tree (the left half gets the extra element when the length is odd).
    """

    permutation: tuple[int, ...]
    policy: AccumulationPolicy = AccumulationPolicy.SEQUENTIAL
    _indices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise UsageError("permutation must be a bijection on 0..D-1")
        object.__setattr__(self, "permutation", tuple(int(i) for i in perm))
        object.__setattr__(self, "policy", AccumulationPolicy(self.policy))
        perm.setflags(write=False)
        object.__setattr__(self, "_indices", perm)

    def __len__(self) -> int:
        return len(self.permutation)

    @property
    def indices(self) -> np.ndarray:
        """Read-only index array of the permutation."""
        return self._indices

    @property
    def is_tree(self) -> bool:
        return self.policy is AccumulationPolicy.PAIRWISE_TREE

    @classmethod
    def identity(cls, n: int, policy: AccumulationPolicy = AccumulationPolicy.SEQUENTIAL) -> "AccumulationOrder":
        """Natural order ``0, 1, ..., n-1``."""
        return cls(tuple(range(n)), policy)

    @classmethod
    def random(
        cls,
        n: int,
        rng: np.random.Generator | int,
        policy: AccumulationPolicy = AccumulationPolicy.RANDOM_PERMUTATION,
    ) -> "AccumulationOrder":
        """Uniformly random order drawn from ``rng`` (a Generator or a seed)."""
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        return cls(tuple(rng.permutation(n).tolist()), policy)


class Spread(NamedTuple):
    """Extremes of an ordered sum over sampled permutations."""

    min: float
    max: float
    range: float


def _two_sum_round(a: np.ndarray, b: np.ndarray, fmt: FloatFormat) -> np.ndarray:
    """Correctly rounded ``a + b`` in ``fmt``."""
    with np.errstate(invalid="ignore", over="ignore"):
        s = a + b
        if fmt.is_exact:
            return s
        bb = s - a
        err = (a - (s - bb)) + (b - bb)
        return _round_odd_then(s, err, fmt)


def _fma_round(a: np.ndarray, b: np.ndarray, c: np.ndarray, fmt: FloatFormat) -> np.ndarray:
    """Correctly rounded ``a * b + c`` with a single rounding.

    ``a * b`` must be exact in float64, which holds for inputs of any
    format up to FP32 (at most 48 significant bits).
    """
    return _two_sum_round(a * b, c, fmt)


def _round_odd_then(s: np.ndarray, err: np.ndarray, fmt: FloatFormat) -> np.ndarray:
    # An inexact float64 sum is moved to the odd neighbour on the side of
    # the true value; odd float64 values are never ties of a narrower format.
    finite = np.isfinite(s)
    err = np.where(finite, err, 0.0)
    even = (s.view(np.int64) & 1) == 0
    nudge = (err != 0.0) & even & finite
    if nudge.any():
        s = np.where(nudge, np.nextafter(s, np.where(err > 0, np.inf, -np.inf)), s)
    return quantize(s, fmt)


def _fold_rows(products: np.ndarray, perms: np.ndarray, acc: FloatFormat) -> np.ndarray:
    """Left fold of every row of ``products`` in each order of ``perms``.

    Args:
        products: (R, D) addends already in ``acc``
        perms: (k, D) index orders

    Returns:
        (R, k) sums
    """
    s = products[:, perms[:, 0]]
    for t in range(1, perms.shape[1]):
        s = _two_sum_round(s, products[:, perms[:, t]], acc)
    return s


def _fold_rows_native(products: np.ndarray, perms: np.ndarray, dtype: np.dtype) -> np.ndarray:
    """:func:`_fold_rows` on hardware arithmetic of a format with a native dtype.

    ``np.add.accumulate`` adds strictly left to right, each step correctly
    rounded, so the sums are bitwise those of the emulated fold.
    """
    R, D = products.shape
    k = perms.shape[0]
    out = np.empty((R, k))
    block = max(1, _NATIVE_BLOCK // (k * D))
    with np.errstate(over="ignore", invalid="ignore"):
        for lo in range(0, R, block):
            addends = products[lo:lo + block].astype(dtype)[:, perms]
            out[lo:lo + block] = np.add.accumulate(addends, axis=2, dtype=dtype)[:, :, -1]
    return out


def _fold_rows_fused(W: np.ndarray, x: np.ndarray, perms: np.ndarray, acc: FloatFormat) -> np.ndarray:
    """Fused multiply-add chain: one rounding per multiply-add pair."""
    first = perms[:, 0]
    s = quantize(W[:, first] * x[first], acc)
    for t in range(1, perms.shape[1]):
        cols = perms[:, t]
        s = _fma_round(W[:, cols], x[cols], s, acc)
    return s


def _tree_reduce(addends: np.ndarray, acc: FloatFormat) -> np.ndarray:
    """Left-balanced pairwise reduction along axis 0."""
    n = addends.shape[0]
    if n == 1:
        return addends[0]
    mid = (n + 1) // 2
    return _two_sum_round(_tree_reduce(addends[:mid], acc), _tree_reduce(addends[mid:], acc), acc)


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise DataError(f"{what} must be finite")


def _report_overflow(result: np.ndarray, acc: FloatFormat) -> bool:
    # inputs are finite, so a NaN result comes from inf + -inf after an overflow
    overflow = not bool(np.isfinite(result).all())
    if overflow:
        logger.warning("overflow to infinity during %s accumulation", acc.name)
    return overflow


def exact_sum(values: Sequence[float] | ArrayLike) -> float:
    """Exact sum with one final rounding to float64.

    Bitwise identical for every permutation of the input.
    """
    return float(math.fsum(np.asarray(values, dtype=np.float64).ravel().tolist()))


def matvec_ordered(
    W: ArrayLike,
    x: ArrayLike,
    orders: Sequence[AccumulationOrder],
    fmt: FloatFormat,
    fused: bool = False,
    acc_fmt: FloatFormat | None = None,
) -> tuple[np.ndarray, bool]:
    """Ordered dot products of every row of ``W`` with ``x``, once per order.

    Inputs are rounded to ``fmt``. Products and running sums are rounded to
    ``acc_fmt`` (defaults to ``fmt``). Unfused: each product is rounded,
    then added. Fused: each multiply-add pair is rounded once. Under the
    pairwise_tree policy the leaves are rounded products and ``fused`` has
    no effect. An EXACT accumulation format sums the products exactly, so
    every order gives the same result.

    Args:
        W: (R, D) matrix
        x: (D,) vector
        orders: Orders to evaluate, each covering ``0..D-1``
        fmt: Storage format of ``W`` and ``x``
        fused: Use fused multiply-add
        acc_fmt: Arithmetic format (None means ``fmt``)

    Returns:
        ((k, R) results, overflow flag)
    """
    acc = acc_fmt or fmt
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64)
    if W.shape[1] != x.shape[0]:
        raise UsageError(f"length mismatch: {W.shape[1]} vs {x.shape[0]}")
    if not orders:
        raise UsageError("at least one order is required")
    for order in orders:
        if len(order) != x.shape[0]:
            raise UsageError(f"order covers {len(order)} indices, expected {x.shape[0]}")
    _check_finite(W, "matrix entries")
    _check_finite(x, "vector entries")

    Wq = quantize(W, fmt)
    xq = quantize(x, fmt)
    k, R = len(orders), W.shape[0]

    if acc.is_exact:
        products = Wq * xq
        row_sums = np.array([exact_sum(row) for row in products])
        out = np.tile(row_sums, (k, 1))
        return out, _report_overflow(out, acc)

    out = np.empty((k, R))
    products = None if fused else quantize(Wq * xq, acc)
    seq = [i for i, o in enumerate(orders) if not o.is_tree]
    tree = [i for i, o in enumerate(orders) if o.is_tree]

    for start in range(0, len(seq), _ORDER_CHUNK):
        chunk = seq[start:start + _ORDER_CHUNK]
        perms = np.stack([orders[i].indices for i in chunk])
        if fused:
            sums = _fold_rows_fused(Wq, xq, perms, acc)
        elif acc.native_dtype is not None:
            sums = _fold_rows_native(products, perms, acc.native_dtype)
        else:
            sums = _fold_rows(products, perms, acc)
        out[chunk] = sums.T

    if tree:
        leaves = products if products is not None else quantize(Wq * xq, acc)
        for i in tree:
            out[i] = _tree_reduce(leaves[:, orders[i].indices].T, acc)

    return out, _report_overflow(out, acc)


def dot_ordered(
    a: ArrayLike,
    b: ArrayLike,
    order: AccumulationOrder,
    fmt: FloatFormat,
    fused: bool = False,
    acc_fmt: FloatFormat | None = None,
) -> float:
    """Dot product of ``a`` and ``b`` accumulated in ``order``.

    See :func:`matvec_ordered` for the rounding model.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError("dot_ordered needs two vectors of equal length")
    result, _ = matvec_ordered(a[None, :], b, [order], fmt, fused, acc_fmt)
    return float(result[0, 0])


def sum_ordered(
    values: Sequence[float] | ArrayLike,
    order: AccumulationOrder,
    fmt: FloatFormat,
    acc_fmt: FloatFormat | None = None,
) -> float:
    """Sum ``values`` in ``order``, rounding after every addition.

    Inputs are rounded to ``fmt`` first; the running sum is rounded to
    ``acc_fmt`` (defaults to ``fmt``).

    Example:
        >>> vals = [1.0] + [2**-9] * 4
        >>> sum_ordered(vals, AccumulationOrder.identity(5), BF16)
        1.0
        >>> sum_ordered(vals, AccumulationOrder((1, 2, 3, 4, 0)), BF16)
        1.0078125
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise UsageError("sum_ordered needs a non-empty sequence")
    return dot_ordered(values, np.ones_like(values), order, fmt, False, acc_fmt)


def permutation_spread(
    values: Sequence[float] | ArrayLike,
    fmt: FloatFormat,
    trials: int,
    seed: int,
    acc_fmt: FloatFormat | None = None,
) -> Spread:
    """Sample ``trials`` random orders and report the extremes of the sum.

    Args:
        values: Addends
        fmt: Storage format
        trials: Number of sampled permutations (>= 1)
        seed: Seed of the permutation stream
        acc_fmt: Arithmetic format (None means ``fmt``)

    Returns:
        Spread(min, max, range)
    """
    if trials < 1:
        raise UsageError("trials must be at least 1")
    values = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng(seed)
    orders = [AccumulationOrder.random(values.size, rng) for _ in range(trials)]
    sums, _ = matvec_ordered(values[None, :], np.ones_like(values), orders, fmt, False, acc_fmt)
    lo, hi = float(sums.min()), float(sums.max())
    return Spread(lo, hi, hi - lo)
