# src/core/tails.py

"""Superexponential tail bounds and their desk-scale checks.

Every analytic bound is returned on the per-n log scale, i.e. as an upper
bound for (1/n) log P(event).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import entr, gammaln, logsumexp, xlogy
from scipy.stats import beta

from src.core.errors import CapacityError, DomainError, PreconditionError
from src.core.primes import PrimeTable, window_primes
from src.core.sampler import divisor_counts, make_rng, product_law, sample_uniform

logger = logging.getLogger(__name__)

UNIFORM = "P"
PRODUCT = "tilde"
MEASURES = (UNIFORM, PRODUCT)

# Exhaustive subset enumeration stops at this many window primes.
_CYLINDER_MAX_PRIMES = 20


@dataclass(frozen=True)
class TailExperiment:
    window: Tuple[int, int]
    n: int
    epsilon: float
    measure: str
    replicas: int
    exceedances: int
    empirical_log_prob: float
    empirical_log_prob_ucb: float
    analytic_bound: Optional[float]
    confidence: float = 0.99
    seed: int = 0
    statistics: np.ndarray = field(default=None, repr=False)
    analytic_note: str = ""

    @property
    def point_estimate(self) -> float:
        return self.exceedances / self.replicas


@dataclass(frozen=True)
class SuperIITerms:
    n: int
    k: int
    epsilon: float
    log_m1: float
    log_m2: float
    k1k2_term: float
    far_term: float
    coupling_term: float
    super_i_term: float
    degenerate: bool

    @property
    def combined(self) -> float:
        # A union of four events decays at the slowest of the four rates.
        return max(self.k1k2_term, self.far_term, self.coupling_term, self.super_i_term)


@dataclass(frozen=True)
class CylinderRatios:
    window: Tuple[int, int]
    n: int
    primes: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)  # indexed by subset bitmask over ``primes``
    envelope: float = 0.0

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))


# ── bound evaluators ────────────────────────────────────

def binomial_mgf_bound(alpha: float, lam: float, n: int) -> float:
    """Upper bound on (1/n) log E exp(lam Y^2 / n) for Y ~ Binomial(n, alpha)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    if lam < 0:
        raise PreconditionError(f"lambda >= 0 fails: lambda = {lam}.")
    lam1 = math.exp(lam)
    if not 2.0 * alpha * lam1 ** 2 < 1.0:
        raise PreconditionError(f"2 * alpha * e^(2 lambda) < 1 fails: {2.0 * alpha * lam1 ** 2:.6g} >= 1.")
    if not 0.0 <= alpha < 0.5:
        raise PreconditionError(f"0 <= alpha < 1/2 fails: alpha = {alpha}.")
    return 4.0 * lam * alpha ** 2 * lam1 ** 4 + math.log(4.0 * (n + 1)) / n


def exact_binomial_log_mgf(alpha: float, lam: float, n: int) -> float:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}.")
    i = np.arange(n + 1, dtype=np.float64)
    log_terms = (
        gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
        + xlogy(i, alpha) + xlogy(n - i, 1.0 - alpha)
        + lam * i * i / n
    )
    return float(logsumexp(log_terms)) / n


def entropy_H(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"Entropy argument must lie in [0, 1], got {x}.")
    return float(entr(x) + entr(1.0 - x))


def super_i_bound(k: int, epsilon: float) -> float:
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}.")
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}.")
    return -(epsilon / 8.0) * math.log(k) + 4.0


def k1k2_bound(k1: int, k2: int, epsilon: float) -> float:
    if k2 <= math.e:
        raise DomainError(f"log log k2 is undefined or negative for k2 = {k2}.")
    if not 2 <= k1 < k2:
        raise PreconditionError(f"k2 > k1 >= 2 fails: k1 = {k1}, k2 = {k2}.")
    if k2 < 16:
        raise PreconditionError(f"k2 >= 16 fails: k2 = {k2}.")
    return 4.0 * math.log(math.log(k2)) + 4.0 - math.log(k1) / 8.0 * epsilon


def coupling_bound(n: int, m: int, epsilon: float, k2: int) -> float:
    """(1/n) log of 2^n (1/m)^(n eps / (2 k2))."""
    if m < 1:
        raise DomainError(f"CRT multiplier m must be >= 1, got {m}.")
    if n < 1 or k2 < 1:
        raise DomainError("n and k2 must be >= 1.")
    return math.log(2.0) - epsilon / (2.0 * k2) * math.log(m)


def stirling_ratio(n: int) -> float:
    """n! / (sqrt(2 pi n) (n/e)^n); lies in [1, e/sqrt(2 pi)]."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    return math.exp(gammaln(n + 1) - 0.5 * math.log(2.0 * math.pi * n) - n * math.log(n) + n)


def binomial_entropy_gap(n: int, i: int) -> float:
    """log C(n, i) - n H(i/n); at most log 4."""
    if not 0 <= i <= n:
        raise DomainError(f"Need 0 <= i <= n, got i = {i}, n = {n}.")
    log_comb = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
    return float(log_comb) - n * entropy_H(i / n)


def clopper_pearson_upper(successes: int, trials: int, confidence: float = 0.99) -> float:
    if trials < 1 or not 0 <= successes <= trials:
        raise DomainError(f"Invalid binomial counts: {successes} of {trials}.")
    if successes == trials:
        return 1.0
    return float(beta.ppf(confidence, successes + 1, trials - successes))


# ── composition ─────────────────────────────────────────

def _log_floor_power(base: float, exponent: float) -> float:
    """log(floor(base) ** exponent), -inf when the floor is 0."""
    b = math.floor(base)
    return exponent * math.log(b) if b >= 1 else -math.inf


def super_ii_terms(n: int, k: int, epsilon: float, table: PrimeTable) -> SuperIITerms:
    """Per-window bounds for the split S(k, n) = S(k, M1) + S(M1, M2) + S(M2, n).

    M1 = floor(log log n)^(120/eps) and M2 = floor(log n)^(120/eps). The
    windows collapse at any n a desk computation reaches; the terms are still
    reported and ``degenerate`` says so.
    """
    if n < 16:
        raise DomainError(f"n must be >= 16 so that log log n > 1, got {n}.")
    if k < 2 or epsilon <= 0:
        raise DomainError("Need k >= 2 and epsilon > 0.")
    power = 120.0 / epsilon
    log_n = math.log(n)
    log_m1 = _log_floor_power(math.log(log_n), power)
    log_m2 = _log_floor_power(log_n, power)

    k1k2_term = 4.0 * math.log(log_m2) + 4.0 - log_m1 / 8.0 * epsilon if log_m2 > 0 else math.inf
    far_term = -math.log(log_n) + 4.0

    # log M0 = log n - theta over S(k, M1), truncated at the prime table.
    upper = min(math.exp(min(log_m1, 700.0)), table.limit)
    theta = float(np.sum(np.log(window_primes(k, int(upper), table).astype(np.float64)))) if upper > k else 0.0
    log_m0 = log_n - theta
    m1 = math.exp(min(log_m1, 700.0))
    coupling_term = math.log(2.0) - epsilon / (12.0 * m1) * log_m0
    super_i_term = -(epsilon / 48.0) * math.log(k) + 4.0

    degenerate = not (k < m1 < math.exp(min(log_m2, 700.0)) < n) or log_m0 < 0
    if degenerate:
        logger.info("Window split degenerate at n=%d eps=%g (log M1=%.3g, log M2=%.3g)", n, epsilon, log_m1, log_m2)
    return SuperIITerms(
        n=n, k=k, epsilon=epsilon, log_m1=log_m1, log_m2=log_m2,
        k1k2_term=k1k2_term, far_term=far_term, coupling_term=coupling_term,
        super_i_term=super_i_term, degenerate=degenerate,
    )


# ── Monte Carlo ─────────────────────────────────────────

def _default_map(fn: Callable, items: Sequence):
    return [fn(item) for item in items]


def window_statistic(
    window: Tuple[int, int],
    n: int,
    measure: str,
    seed: int,
    stream_id: int,
    table: PrimeTable,
) -> int:
    """sum_{p in window} Y_p^2 for one batch of n draws."""
    k1, k2 = window
    if measure == PRODUCT:
        primes = window_primes(k1, k2, table)
        y = make_rng(seed, stream_id).binomial(n, 1.0 / primes.astype(np.float64))
        return int(np.sum(y.astype(np.int64) ** 2))
    if measure == UNIFORM:
        batch = sample_uniform(n, n, seed, stream_id)
        profile = divisor_counts(batch, window, table)
        return profile.sum_squares()
    raise DomainError(f"Unknown measure '{measure}'; expected one of {MEASURES}.")


def analytic_tail_bound(window: Tuple[int, int], epsilon: float, measure: str) -> Tuple[Optional[float], str]:
    """Matching analytic bound for a window, or (None, reason) where its hypotheses fail.

    The product law is bounded by the single-window estimate at k = k1, the
    uniform law by the two-cutoff estimate.
    """
    k1, k2 = window
    try:
        if measure == PRODUCT:
            return super_i_bound(k1, epsilon), ""
        return k1k2_bound(k1, k2, epsilon), ""
    except (DomainError, PreconditionError) as exc:
        return None, str(exc)


def mc_tail_estimate(
    window: Tuple[int, int],
    n: int,
    epsilon: float,
    measure: str,
    replicas: int,
    seed: int,
    table: PrimeTable,
    confidence: float = 0.99,
    map_fn: Optional[Callable] = None,
) -> TailExperiment:
    k1, k2 = window
    if k1 >= k2:
        raise DomainError(f"Empty prime window: need k1 < k2, got ({k1}, {k2}).")
    if replicas < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas}.")
    if measure not in MEASURES:
        raise DomainError(f"Unknown measure '{measure}'; expected one of {MEASURES}.")
    size = window_primes(k1, k2, table).size
    analytic, note = analytic_tail_bound(window, epsilon, measure)
    if analytic is None:
        logger.warning("No analytic bound for window %s under %s: %s", window, measure, note)

    stats = np.asarray(
        (map_fn or _default_map)(lambda r: window_statistic(window, n, measure, seed, r, table), range(replicas)),
        dtype=np.int64,
    )
    ceiling = n * n * size
    if np.any(stats > ceiling):
        raise DomainError(f"Window statistic exceeded its deterministic ceiling n^2 |S| = {ceiling}.")

    exceed = int(np.count_nonzero(stats > n * n * epsilon))
    ucb = clopper_pearson_upper(exceed, replicas, confidence)
    point = math.log(exceed / replicas) / n if exceed else -math.inf
    if exceed == 0:
        logger.info("No exceedances in %d replicas at eps=%g; reporting a one-sided upper bound", replicas, epsilon)
    return TailExperiment(
        window=(k1, k2), n=n, epsilon=epsilon, measure=measure, replicas=replicas,
        exceedances=exceed, empirical_log_prob=point,
        empirical_log_prob_ucb=math.log(ucb) / n, analytic_bound=analytic,
        confidence=confidence, seed=seed, statistics=stats, analytic_note=note,
    )


def cylinder_ratio_table(k1: int, k2: int, n: int, table: PrimeTable) -> CylinderRatios:
    """P(window divisor pattern = E) / product-law P(E) for every subset E of S(k1, k2)."""
    if k2 <= math.e:
        raise DomainError(f"Envelope exp(4 log log k2) needs k2 > e, got {k2}.")
    if n < 1 or n > table.limit:
        raise DomainError(f"n must lie in [1, {table.limit}], got {n}.")
    primes = window_primes(k1, k2, table)
    if primes.size > _CYLINDER_MAX_PRIMES:
        raise CapacityError(f"{primes.size} window primes is too many to enumerate all subsets.")

    x = np.arange(1, n + 1, dtype=np.int64)
    bits = (x[:, None] % primes[None, :] == 0).astype(np.int64)
    masks = bits @ np.left_shift(1, np.arange(primes.size, dtype=np.int64))
    exact = np.bincount(masks, minlength=1 << primes.size) / float(n)

    ratios = exact / product_law(primes)
    return CylinderRatios(
        window=(k1, k2), n=n, primes=primes, ratios=ratios,
        envelope=math.exp(4.0 * math.log(math.log(k2))),
    )
