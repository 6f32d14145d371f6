# src/core/exact.py

"""Exact finite-n probabilities for gcd events via Mobius floor sums.

Counts are kept as Python integers and probabilities as ``Fraction`` until a
caller asks for a float, so oracle comparisons are exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from src.core.errors import DomainError, UnsupportedCombinationError
from src.core.primes import COPRIME_PAIR, TRIPLE, PrimeTable, euler_product

logger = logging.getLogger(__name__)

# Largest value for which int64 sums of k-th powers cannot overflow.
_INT64_SAFE = 2 ** 62


@dataclass(frozen=True)
class ExactStats:
    n: int
    ell: int
    alpha_count: int   # ordered pairs (i, j) in {1..n}^2 with gcd = ell
    beta_count: int    # ordered triples with gcd(x1, x2) = gcd(x1, x3) = ell
    sigma_n_sq: Fraction

    @property
    def alpha_n(self) -> Fraction:
        return Fraction(self.alpha_count, self.n ** 2)

    @property
    def beta_n(self) -> Fraction:
        return Fraction(self.beta_count, self.n ** 3)

    @property
    def sigma_n(self) -> float:
        return math.sqrt(float(self.sigma_n_sq))


@dataclass(frozen=True)
class VarianceLimit:
    value: float
    cutoff: int
    tail_bound: float


def _require_table(n: int, table: PrimeTable) -> None:
    if n > table.limit:
        raise DomainError(f"n = {n} exceeds prime table limit {table.limit}.")


def _mobius_power_sum(size: int, exponent: int, mobius: np.ndarray) -> int:
    """sum_{m <= size} mu(m) * floor(size / m) ** exponent, exactly."""
    if size < 1:
        return 0
    m = np.arange(1, size + 1, dtype=np.int64)
    q = size // m
    mu = mobius[1 : size + 1].astype(np.int64)
    if float(size) ** exponent * 2.0 < _INT64_SAFE:
        return int(np.sum(mu * q ** exponent))
    nz = np.nonzero(mu)[0]
    return sum(int(mu[i]) * int(q[i]) ** exponent for i in nz)


def exact_pair_count(n: int, ell: int, table: PrimeTable) -> int:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    if ell < 1:
        raise DomainError(f"ell must be >= 1, got {ell}.")
    _require_table(n, table)
    return _mobius_power_sum(n // ell, 2, table.mobius)


def exact_pair_prob(n: int, ell: int, table: PrimeTable) -> Fraction:
    return Fraction(exact_pair_count(n, ell, table), n * n)


def _coprime_row_counts(size: int, mobius: np.ndarray) -> np.ndarray:
    """C[x] = #{y <= size : gcd(x, y) = 1} for x = 0..size (C[0] unused)."""
    counts = np.zeros(size + 1, dtype=np.int64)
    for d in np.nonzero(mobius[1 : size + 1])[0] + 1:
        counts[d::d] += int(mobius[d]) * (size // int(d))
    return counts


def exact_triple_count(n: int, ell: int, table: PrimeTable) -> int:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    if ell < 1:
        raise DomainError(f"ell must be >= 1, got {ell}.")
    _require_table(n, table)
    size = n // ell
    if size == 0:
        return 0
    counts = _coprime_row_counts(size, table.mobius)[1:]
    if float(size) ** 3 < _INT64_SAFE:
        return int(np.dot(counts, counts))
    return sum(int(c) * int(c) for c in counts)


def exact_triple_prob(n: int, ell: int, table: PrimeTable) -> Fraction:
    return Fraction(exact_triple_count(n, ell, table), n ** 3)


def exact_variance(n: int, ell: int, table: PrimeTable) -> ExactStats:
    """Variance of the off-diagonal pair sum over i < j.

    The ordered statistic including i = j is roughly twice this sum; callers
    that normalize the ordered sum use 2 * sigma_n.
    """
    if n < 3:
        raise DomainError(f"exact_variance needs n >= 3 (three distinct indices), got {n}.")
    alpha_count = exact_pair_count(n, ell, table)
    beta_count = exact_triple_count(n, ell, table)
    alpha = Fraction(alpha_count, n * n)
    beta = Fraction(beta_count, n ** 3)
    sigma_sq = math.comb(n, 2) * (alpha - alpha * alpha) + 6 * math.comb(n, 3) * (beta - alpha * alpha)
    return ExactStats(n=n, ell=ell, alpha_count=alpha_count, beta_count=beta_count, sigma_n_sq=sigma_sq)


def exact_statistic_mean(n: int, ell: int, table: PrimeTable, count: int | None = None) -> Fraction:
    """Mean of sum_{i,j} 1{gcd(X_i, X_j) = ell} over ``count`` uniform draws, diagonal included."""
    count = n if count is None else count
    alpha = exact_pair_prob(n, ell, table)
    p_diag = Fraction(1, n) if ell <= n else Fraction(0)
    return count * (count - 1) * alpha + count * p_diag


def limit_variance_result(ell: int, d: int, table: PrimeTable, cutoff: int | None = None) -> VarianceLimit:
    if ell < 1:
        raise DomainError(f"ell must be >= 1, got {ell}.")
    if d < 2:
        raise DomainError(f"d must be >= 2, got {d}.")
    if d >= 3 and ell > 1:
        raise UnsupportedCombinationError(f"No variance formula for d = {d} with ell = {ell} > 1.")
    cutoff = table.limit if cutoff is None else cutoff

    triple = euler_product(TRIPLE, d, cutoff, table)
    if d == 2:
        value = triple.value / ell ** 3 - 36.0 / (ell ** 4 * math.pi ** 4)
        tail = triple.tail_bound * triple.value / ell ** 3
    else:
        pair = euler_product(COPRIME_PAIR, d, cutoff, table)
        value = triple.value - pair.value ** 2
        tail = triple.tail_bound * triple.value + 2.0 * pair.tail_bound * pair.value ** 2
    logger.debug("limit variance ell=%d d=%d cutoff=%d -> %.12g (tail <= %.3g)", ell, d, cutoff, value, tail)
    return VarianceLimit(value=value, cutoff=cutoff, tail_bound=tail)


def limit_variance(ell: int, d: int, table: PrimeTable, cutoff: int | None = None) -> float:
    return limit_variance_result(ell, d, table, cutoff).value


def squarefree_count(n: int, table: PrimeTable) -> int:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    root = math.isqrt(n)
    _require_table(root, table)
    d = np.arange(1, root + 1, dtype=np.int64)
    mu = table.mobius[1 : root + 1].astype(np.int64)
    return int(np.sum(mu * (n // (d * d))))


def squarefree_limit_variance() -> float:
    return 6.0 / math.pi ** 2 - 36.0 / math.pi ** 4


def dgcd_exact_prob(n: int, d: int, table: PrimeTable) -> Fraction:
    """P(gcd of d independent uniform draws on {1..n} is 1)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    if d < 2:
        raise DomainError(f"d must be >= 2, got {d}.")
    _require_table(n, table)
    return Fraction(_mobius_power_sum(n, d, table.mobius), n ** d)


# ── brute-force oracles ─────────────────────────────────

def enumerate_pair_count(n: int, ell: int) -> int:
    v = np.arange(1, n + 1, dtype=np.int64)
    return int(np.count_nonzero(np.gcd.outer(v, v) == ell))


def enumerate_triple_count(n: int, ell: int) -> int:
    v = np.arange(1, n + 1, dtype=np.int64)
    hit = np.gcd.outer(v, v) == ell
    return int(np.count_nonzero(hit[:, :, None] & hit[:, None, :]))


def enumerate_squarefree_count(n: int) -> int:
    count = 0
    for x in range(1, n + 1):
        q = 2
        ok = True
        while q * q <= x:
            if x % (q * q) == 0:
                ok = False
                break
            q += 1
        count += ok
    return count
