# src/core/primes.py

"""Prime sieve, Mobius function and Euler products.

One smallest-prime-factor sieve serves the whole package: the prime list,
the Mobius table and per-value factorization are all read off the same
``spf`` array.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from src.core.errors import DomainError

logger = logging.getLogger(__name__)

COPRIME_PAIR = "coprime-pair"
TRIPLE = "triple"
EULER_FAMILIES = (COPRIME_PAIR, TRIPLE)

# Above this cutoff the product is accumulated as a sum of logs.
_LOG_SPACE_CUTOFF = 10_000

MEISSEL_MERTENS = 0.2614972128476428


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Primes, Mobius values and smallest prime factors up to ``limit``.

    ``mobius`` and ``spf`` are indexed directly by the integer, so both have
    length ``limit + 1``; entries 0 (and ``spf[1]``) are unused.
    """

    limit: int
    primes: np.ndarray = field(repr=False)
    mobius: np.ndarray = field(repr=False)
    spf: np.ndarray = field(repr=False)

    def __len__(self):
        return int(self.primes.size)

    def is_prime(self, x: int) -> bool:
        return 2 <= x <= self.limit and int(self.spf[x]) == x

    def primes_upto(self, bound: int) -> np.ndarray:
        return self.primes[: int(np.searchsorted(self.primes, bound, side="right"))]


@dataclass(frozen=True)
class EulerProductResult:
    value: float
    cutoff: int
    tail_bound: float
    family: str = COPRIME_PAIR
    d: int = 2


def build_prime_table(limit: int) -> PrimeTable:
    if limit < 2:
        raise DomainError(f"Prime table limit must be >= 2, got {limit}.")

    spf = np.zeros(limit + 1, dtype=np.int64)
    for i in range(2, math.isqrt(limit) + 1):
        if spf[i] == 0:
            seg = spf[i * i :: i]
            seg[seg == 0] = i
    idx = np.arange(limit + 1, dtype=np.int64)
    unmarked = spf == 0
    unmarked[:2] = False
    spf[unmarked] = idx[unmarked]
    primes = idx[unmarked]

    # Sign flips once per distinct prime factor, square factors zero it out.
    mobius = np.ones(limit + 1, dtype=np.int8)
    mobius[0] = 0
    for p in primes:
        mobius[p::p] *= -1
    for p in primes:
        sq = int(p) * int(p)
        if sq > limit:
            break
        mobius[sq::sq] = 0

    logger.debug("Built prime table up to %d (%d primes)", limit, primes.size)
    return PrimeTable(limit=limit, primes=primes, mobius=mobius, spf=spf)


@lru_cache(maxsize=4)
def cached_prime_table(limit: int) -> PrimeTable:
    return build_prime_table(limit)


def _check_cutoff(cutoff: int, table: PrimeTable) -> None:
    if cutoff > table.limit:
        raise DomainError(f"cutoff {cutoff} exceeds prime table limit {table.limit}.")


def _euler_terms(family: str, d: int, primes: np.ndarray) -> np.ndarray:
    p = primes.astype(np.float64)
    if family == COPRIME_PAIR:
        return -np.power(p, -d)
    if family == TRIPLE:
        return -2.0 * np.power(p, -d) + np.power(p, -(2 * d - 1))
    raise DomainError(f"Unknown Euler product family '{family}'; expected one of {EULER_FAMILIES}.")


def euler_tail_bound(family: str, d: int, cutoff: int) -> float:
    """Upper bound on |log of the omitted factors| for primes above ``cutoff``.

    Uses -log(1-u) <= u/(1-u) and, by convexity of 1/x^d,
    sum_{m>N} 1/m^d <= 1/((d-1) (N+1/2)^(d-1)).
    """
    c = 1.0 if family == COPRIME_PAIR else 2.0
    n = max(int(cutoff), 1)
    u_max = c / float(n + 1) ** d
    return c / ((d - 1) * (n + 0.5) ** (d - 1)) / (1.0 - u_max)


def euler_product(family: str, d: int, cutoff: int, table: PrimeTable) -> EulerProductResult:
    if family not in EULER_FAMILIES:
        raise DomainError(f"Unknown Euler product family '{family}'; expected one of {EULER_FAMILIES}.")
    if d < 2:
        raise DomainError(f"Euler product exponent d must be >= 2, got {d}.")
    _check_cutoff(cutoff, table)

    primes = table.primes_upto(cutoff)
    terms = _euler_terms(family, d, primes)
    if cutoff > _LOG_SPACE_CUTOFF:
        value = math.exp(math.fsum(np.log1p(terms)))
    else:
        value = 1.0
        for t in terms:
            value *= 1.0 + float(t)
    return EulerProductResult(
        value=value,
        cutoff=int(cutoff),
        tail_bound=euler_tail_bound(family, d, cutoff),
        family=family,
        d=d,
    )


def mertens_sum(k1: int, k2: int, table: PrimeTable) -> float:
    """Sum of 1/q over the prime window S(k1, k2) = {p : k1 < p <= k2}."""
    if k1 < 1:
        raise DomainError(f"k1 must be >= 1, got {k1}.")
    if k1 >= k2:
        raise DomainError(f"Empty prime window: need k1 < k2, got ({k1}, {k2}).")
    _check_cutoff(k2, table)
    window = window_primes(k1, k2, table)
    return math.fsum(1.0 / window.astype(np.float64))


def meissel_mertens_residual(k: int, table: PrimeTable) -> float:
    """sum_{p<=k} 1/p - log log k; tends to the Meissel-Mertens constant."""
    if k < 3:
        raise DomainError(f"log log k needs k >= 3, got {k}.")
    return mertens_sum(1, k, table) - math.log(math.log(k))


def prime_count(x: int, table: PrimeTable) -> int:
    _check_cutoff(x, table)
    return int(np.searchsorted(table.primes, x, side="right"))


def window_primes(k1: int, k2: int, table: PrimeTable) -> np.ndarray:
    _check_cutoff(k2, table)
    lo = int(np.searchsorted(table.primes, k1, side="right"))
    hi = int(np.searchsorted(table.primes, k2, side="right"))
    return table.primes[lo:hi]


def first_primes(k: int, table: PrimeTable, exclude: Sequence[int] = ()) -> np.ndarray:
    """The smallest ``k`` primes not listed in ``exclude``."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}.")
    skip = set(int(q) for q in exclude)
    out = []
    for p in table.primes:
        if len(out) == k:
            break
        if int(p) not in skip:
            out.append(int(p))
    if len(out) < k:
        raise DomainError(f"Prime table up to {table.limit} holds fewer than {k} usable primes.")
    return np.asarray(out, dtype=np.int64)


def factorize(x: int, table: PrimeTable) -> List[Tuple[int, int]]:
    if x < 1:
        raise DomainError(f"Cannot factorize {x}.")
    _check_cutoff(x, table)
    out: List[Tuple[int, int]] = []
    while x > 1:
        p = int(table.spf[x])
        e = 0
        while x % p == 0:
            x //= p
            e += 1
        out.append((p, e))
    return out
