"""Expected range of N independent standard-normal draws."""

import math
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from nondetlab.errors import UsageError

D2 = 2.0 / math.sqrt(math.pi)

# Rows drawn per Monte Carlo pass.
_MC_CHUNK = 10_000


def _range_integrand(x: float, n: int) -> float:
    # 1 - Phi(x)^n - (1 - Phi(x))^n, in log space to keep the tails accurate.
    return -math.expm1(n * special.log_ndtr(x)) - math.exp(n * special.log_ndtr(-x))


@lru_cache(maxsize=None)
def range_factor(n: int) -> float:
    """d_N = E[max - min] of N standard normals.

    Computed by quadrature of ``1 - Phi^N - (1 - Phi)^N`` over the real
    line, which is symmetric about 0.

    Example:
        >>> round(range_factor(2), 10)
        1.1283791671
    """
    n = int(n)
    if n < 2:
        raise UsageError(f"range factor needs n >= 2, got {n}")
    if n == 2:
        return D2
    half, _ = integrate.quad(_range_integrand, 0.0, np.inf, args=(n,), epsabs=1e-13, epsrel=1e-12, limit=200)
    return 2.0 * half


def range_factor_mc(n: int, samples: int = 1_000_000, seed: int = 0) -> float:
    """Monte Carlo estimate of d_N from ``samples`` seeded draws of N normals."""
    if n < 2:
        raise UsageError(f"range factor needs n >= 2, got {n}")
    if samples < 1:
        raise UsageError("samples must be positive")
    rng = np.random.default_rng(seed)
    total = 0.0
    remaining = samples
    while remaining:
        rows = min(remaining, _MC_CHUNK)
        draws = rng.standard_normal((rows, n))
        total += float(np.ptp(draws, axis=1).sum())
        remaining -= rows
    return total / samples


class RangeFactorTable:
    """Read-only mapping N -> d_N, precomputed for ``2..max_n``.

    Lookups outside the precomputed span are computed on demand.
    """

    def __init__(self, max_n: int = 200):
        if max_n < 2:
            raise UsageError("max_n must be at least 2")
        self.max_n = max_n
        self._values = {n: range_factor(n) for n in range(2, max_n + 1)}

    def __getitem__(self, n: int) -> float:
        value = self._values.get(int(n))
        return value if value is not None else range_factor(n)

    def __contains__(self, n: int) -> bool:
        return int(n) in self._values

    def __len__(self) -> int:
        return len(self._values)

    def items(self) -> list[tuple[int, float]]:
        return sorted(self._values.items())


@lru_cache(maxsize=1)
def default_table() -> RangeFactorTable:
    """Shared table for N in 2..200."""
    return RangeFactorTable()
