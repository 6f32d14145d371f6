# src/core/sampler.py

"""Seeded sampling under the uniform measure and the independent-divisibility
measure, plus fast empirical gcd densities.

Randomness comes from a counter-based Philox generator keyed by
(seed, stream_id): replica ``r`` of a run always sees the same stream no
matter which thread draws it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy.stats import chisquare

from src.core.errors import DomainError, InfeasibleCouplingError
from src.core.primes import PrimeTable, window_primes

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1

# Flat divisor-sum plans above this many entries fall back to a per-divisor loop.
_PLAN_MAX_ENTRIES = 16_000_000
# Cached plans per process; each flat plan holds two index arrays.
_PLAN_CACHE_SIZE = 2


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    key = np.array([int(seed) & _MASK64, int(stream_id) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SampleBatch:
    n: int
    values: np.ndarray = field(repr=False)
    seed: int = 0
    stream_id: int = 0

    @property
    def count(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class DivisorCountProfile:
    window: Tuple[int, int]
    counts: Dict[int, int]

    def sum_squares(self) -> int:
        return sum(y * y for y in self.counts.values())


@dataclass(frozen=True)
class TildeBatch:
    """Divisor patterns drawn from the independent product law on a prime window."""

    window: Tuple[int, int]
    primes: np.ndarray = field(repr=False)
    patterns: np.ndarray = field(repr=False)  # count x len(primes), bool
    seed: int = 0
    stream_id: int = 0

    @property
    def count(self) -> int:
        return int(self.patterns.shape[0])

    def products(self) -> np.ndarray:
        return encode_patterns(self.patterns, self.primes)


@dataclass(frozen=True)
class CoupledBatch:
    n: int
    window: Tuple[int, int]
    primes: np.ndarray = field(repr=False)
    m: int
    x: np.ndarray = field(repr=False)
    x_patterns: np.ndarray = field(repr=False)
    tilde_patterns: np.ndarray = field(repr=False)
    mismatch: np.ndarray = field(repr=False)
    seed: int = 0

    @property
    def threshold(self) -> int:
        return self.m * math.prod(int(p) for p in self.primes)

    @property
    def count(self) -> int:
        return int(self.x.size)

    def x_tilde(self) -> np.ndarray:
        return encode_patterns(self.tilde_patterns, self.primes)

    @property
    def pairs(self):
        return list(zip(self.x.tolist(), self.x_tilde().tolist()))


def encode_patterns(patterns: np.ndarray, primes: np.ndarray) -> np.ndarray:
    """Squarefree product of the window primes selected by each pattern row."""
    full = math.prod(int(p) for p in primes)
    if full < 2 ** 63:
        logs = np.where(patterns, primes.astype(np.int64)[None, :], 1)
        return np.prod(logs, axis=1, dtype=np.int64)
    out = np.empty(patterns.shape[0], dtype=object)
    plist = [int(p) for p in primes]
    for i, row in enumerate(patterns):
        out[i] = math.prod(p for p, b in zip(plist, row) if b)
    return out


def sample_uniform(n: int, count: int, seed: int, stream_id: int = 0) -> SampleBatch:
    if n < 1:
        raise DomainError(f"Sample range n must be >= 1, got {n}.")
    if count < 1:
        raise DomainError(f"Sample count must be >= 1, got {count}.")
    rng = make_rng(seed, stream_id)
    values = rng.integers(1, n, size=count, endpoint=True, dtype=np.int64)
    return SampleBatch(n=n, values=values, seed=seed, stream_id=stream_id)


# ── divisor-sum plans ───────────────────────────────────

@dataclass(frozen=True)
class _MultiplesPlan:
    """Flat index of every multiple of ell*m (m squarefree) up to n."""

    n: int
    ell: int
    mu: np.ndarray      # mobius(m) for the planned m
    divisors: np.ndarray  # ell * m
    owner: np.ndarray   # index into divisors for each flat entry
    positions: np.ndarray  # the multiple itself

    def count_multiples(self, multiplicity: np.ndarray) -> np.ndarray:
        """c_d = #{i : d | X_i} for every planned d."""
        if self.owner.size == 0:
            return np.zeros(self.divisors.size, dtype=np.int64)
        sums = np.bincount(self.owner, weights=multiplicity[self.positions], minlength=self.divisors.size)
        return np.rint(sums).astype(np.int64)


def _build_plan(n: int, ell: int, table: PrimeTable) -> _MultiplesPlan:
    size = n // ell
    m = np.nonzero(table.mobius[1 : size + 1])[0].astype(np.int64) + 1
    mu = table.mobius[m].astype(np.int64)
    divisors = ell * m
    per = n // divisors
    total = int(per.sum())
    index = np.int32 if n < 2 ** 31 else np.int64
    if total > _PLAN_MAX_ENTRIES:
        return _MultiplesPlan(n, ell, mu, divisors, np.empty(0, index), np.empty(0, index))
    owner = np.repeat(np.arange(divisors.size, dtype=index), per)
    starts = np.cumsum(per) - per
    step = np.arange(total, dtype=np.int64) - starts[owner] + 1
    positions = (divisors[owner] * step).astype(index)
    return _MultiplesPlan(n, ell, mu, divisors, owner, positions)


@lru_cache(maxsize=_PLAN_CACHE_SIZE)
def _plan(n: int, ell: int, table: PrimeTable) -> _MultiplesPlan:
    return _build_plan(n, ell, table)


def _divisor_counts(batch: SampleBatch, ell: int, table: PrimeTable) -> Tuple[np.ndarray, np.ndarray]:
    if batch.n > table.limit:
        raise DomainError(f"Batch range n = {batch.n} exceeds prime table limit {table.limit}.")
    plan = _plan(batch.n, ell, table)
    multiplicity = np.bincount(batch.values, minlength=batch.n + 1).astype(np.float64)
    if plan.owner.size or plan.divisors.size == 0:
        return plan.mu, plan.count_multiples(multiplicity)
    # Too large to flatten: one strided sum per divisor.
    counts = np.fromiter(
        (int(multiplicity[d::d].sum()) for d in plan.divisors), dtype=np.int64, count=plan.divisors.size
    )
    return plan.mu, counts


def gcd_pair_count(batch: SampleBatch, ell: int, table: PrimeTable) -> int:
    """#{ordered (i, j), i = j included : gcd(X_i, X_j) = ell}."""
    if ell < 1:
        raise DomainError(f"ell must be >= 1, got {ell}.")
    if ell > batch.n:
        return 0
    mu, c = _divisor_counts(batch, ell, table)
    return int(np.sum(mu * c * c))


def empirical_gcd_density(batch: SampleBatch, ell: int, table: PrimeTable) -> float:
    return gcd_pair_count(batch, ell, table) / float(batch.count) ** 2


def dgcd_tuple_count(batch: SampleBatch, d: int, table: PrimeTable) -> int:
    """#{ordered d-tuples of draws whose gcd is 1}."""
    if d < 2:
        raise DomainError(f"d must be >= 2, got {d}.")
    mu, c = _divisor_counts(batch, 1, table)
    nz = np.nonzero(c)[0]
    return sum(int(mu[i]) * int(c[i]) ** d for i in nz)


def empirical_dgcd_density(batch: SampleBatch, d: int, table: PrimeTable) -> float:
    return dgcd_tuple_count(batch, d, table) / float(batch.count) ** d


def naive_gcd_pair_count(values: np.ndarray, ell: int) -> int:
    v = np.asarray(values, dtype=np.int64)
    return int(np.count_nonzero(np.gcd.outer(v, v) == ell))


def squarefree_frequency(batch: SampleBatch, table: PrimeTable) -> float:
    if batch.n > table.limit:
        raise DomainError(f"Batch range n = {batch.n} exceeds prime table limit {table.limit}.")
    return float(np.count_nonzero(table.mobius[batch.values])) / batch.count


# ── divisibility statistics ─────────────────────────────

def distinct_prime_factors(values: np.ndarray, table: PrimeTable):
    """Yield (row index, prime) arrays, one distinct prime per value per round."""
    cur = np.asarray(values, dtype=np.int64).copy()
    rows = np.arange(cur.size)
    while True:
        active = cur > 1
        if not active.any():
            return
        idx = rows[active]
        p = table.spf[cur[idx]]
        yield idx, p
        # Strip every power of p before the next round.
        while True:
            hit = cur[idx] % p == 0
            if not hit.any():
                break
            cur[idx[hit]] //= p[hit]


def divisor_counts(batch: SampleBatch, window: Tuple[int, int], table: PrimeTable) -> DivisorCountProfile:
    k1, k2 = window
    primes = window_primes(k1, k2, table)
    if batch.values.size and int(batch.values.max()) > table.limit:
        raise DomainError(f"Values exceed prime table limit {table.limit}.")
    totals = np.zeros(primes.size, dtype=np.int64)
    for _, p in distinct_prime_factors(batch.values, table):
        inside = (p > k1) & (p <= k2)
        if inside.any():
            pos = np.searchsorted(primes, p[inside])
            totals += np.bincount(pos, minlength=primes.size)
    return DivisorCountProfile(window=(k1, k2), counts={int(q): int(y) for q, y in zip(primes, totals)})


def naive_divisor_counts(values: np.ndarray, primes: np.ndarray) -> Dict[int, int]:
    v = np.asarray(values, dtype=np.int64)
    return {int(p): int(np.count_nonzero(v % p == 0)) for p in primes}


def _bernoulli_patterns(rng: np.random.Generator, primes: np.ndarray, count: int) -> np.ndarray:
    probs = 1.0 / primes.astype(np.float64)
    return rng.random((count, primes.size)) < probs[None, :]


def sample_tilde(window: Tuple[int, int], count: int, seed: int, table: PrimeTable, stream_id: int = 0) -> TildeBatch:
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}.")
    k1, k2 = window
    primes = window_primes(k1, k2, table)
    rng = make_rng(seed, stream_id)
    patterns = _bernoulli_patterns(rng, primes, count)
    return TildeBatch(window=(k1, k2), primes=primes, patterns=patterns, seed=seed, stream_id=stream_id)


def crt_coupling(
    n: int,
    window: Tuple[int, int],
    count: int,
    seed: int,
    table: PrimeTable,
    stream_id: int = 0,
) -> CoupledBatch:
    """Couple uniform X with a product-law surrogate sharing its window divisors.

    Below the threshold m * prod(p) the surrogate copies X's divisor pattern;
    above it fresh independent Bernoulli(1/p) digits are drawn.
    """
    k1, k2 = window
    if k1 >= k2:
        raise DomainError(f"Empty prime window: need k1 < k2, got ({k1}, {k2}).")
    primes = window_primes(k1, k2, table)
    if primes.size == 0:
        raise DomainError(f"Prime window ({k1}, {k2}] holds no primes.")
    full = math.prod(int(p) for p in primes)
    if full > n:
        raise InfeasibleCouplingError(f"Product of window primes {full} exceeds n = {n}; no CRT multiplier.")
    m = n // full
    threshold = m * full

    rng = make_rng(seed, stream_id)
    x = rng.integers(1, n, size=count, endpoint=True, dtype=np.int64)
    fresh = _bernoulli_patterns(rng, primes, count)
    x_patterns = (x[:, None] % primes[None, :]) == 0
    above = x > threshold
    tilde = np.where(above[:, None], fresh, x_patterns)
    mismatch = np.any(tilde != x_patterns, axis=1)
    logger.debug("CRT coupling n=%d window=%s m=%d: %d above threshold, %d mismatched",
                 n, window, m, int(above.sum()), int(mismatch.sum()))
    return CoupledBatch(
        n=n, window=(k1, k2), primes=primes, m=m, x=x,
        x_patterns=x_patterns, tilde_patterns=tilde, mismatch=mismatch, seed=seed,
    )


def coupling_deviation(coupled: CoupledBatch) -> Tuple[int, int]:
    """(sum Y_q^2 - sum Ytilde_q^2, Lipschitz envelope 2 * k2 * n * #mismatches)."""
    y = coupled.x_patterns.sum(axis=0).astype(np.int64)
    y_tilde = coupled.tilde_patterns.sum(axis=0).astype(np.int64)
    diff = int(np.sum(y * y) - np.sum(y_tilde * y_tilde))
    envelope = 2 * coupled.window[1] * coupled.count * int(coupled.mismatch.sum())
    return diff, envelope


# ── digit map ───────────────────────────────────────────

def psi(x: int, k: int, table: PrimeTable) -> Tuple[int, ...]:
    """First k binary digits: digit i is 1 iff the i-th prime divides x."""
    if k > table.primes.size:
        raise DomainError(f"Prime table holds only {table.primes.size} primes, need {k}.")
    return tuple(int(x % int(p) == 0) for p in table.primes[:k])


def psi_states(values: np.ndarray, k: int, table: PrimeTable) -> np.ndarray:
    """Digit patterns packed into integers; bit i holds the digit of the (i+1)-th prime."""
    if k > table.primes.size:
        raise DomainError(f"Prime table holds only {table.primes.size} primes, need {k}.")
    v = np.asarray(values, dtype=np.int64)
    states = np.zeros(v.size, dtype=np.int64)
    for i, p in enumerate(table.primes[:k]):
        states |= (v % p == 0).astype(np.int64) << i
    return states


def sample_nu(k: int, count: int, seed: int, table: PrimeTable, stream_id: int = 0) -> np.ndarray:
    """count x k digit matrix with independent Bernoulli(1/p_i) columns."""
    if k > table.primes.size:
        raise DomainError(f"Prime table holds only {table.primes.size} primes, need {k}.")
    rng = make_rng(seed, stream_id)
    return _bernoulli_patterns(rng, table.primes[:k], count).astype(np.uint8)


def pack_digits(digits: np.ndarray) -> np.ndarray:
    d = np.asarray(digits, dtype=np.int64)
    weights = np.left_shift(1, np.arange(d.shape[1], dtype=np.int64))
    return d @ weights


def product_law(primes: np.ndarray) -> np.ndarray:
    """Probability of every window pattern (bitmask over ``primes``) under independent Bernoulli(1/p)."""
    probs = np.ones(1)
    for p in primes:
        probs = np.concatenate([probs * (1.0 - 1.0 / p), probs / p])
    return probs


def pattern_pvalue(coupled: CoupledBatch) -> float:
    """Chi-square p-value of the surrogate's window patterns against the product law."""
    observed = np.bincount(pack_digits(coupled.tilde_patterns), minlength=1 << coupled.primes.size)
    return float(chisquare(observed, product_law(coupled.primes) * coupled.count).pvalue)
