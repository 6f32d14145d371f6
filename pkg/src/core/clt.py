# src/core/clt.py

"""Replica ensembles of the normalized gcd statistic and their distance to N(0, 1)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr
from scipy.stats import kstwobign

from src.core.errors import DomainError, UnsupportedCombinationError
from src.core.exact import exact_variance, limit_variance, squarefree_limit_variance
from src.core.primes import COPRIME_PAIR, PrimeTable, euler_product
from src.core.sampler import dgcd_tuple_count, gcd_pair_count, sample_uniform

logger = logging.getLogger(__name__)

D_MODES = ("paper", "recount")

GCD = "gcd"
SQUAREFREE = "squarefree"


@dataclass(frozen=True)
class Normalization:
    center: float
    scale: float
    sigma: float
    literal_scale: bool = False


@dataclass(frozen=True)
class ReplicaEnsemble:
    n: int
    ell: int
    d: int
    replicas: int
    values: np.ndarray = field(repr=False)
    normalization: Normalization
    seed: int
    raw: np.ndarray = field(repr=False, default=None)
    statistic: str = GCD

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def variance(self) -> float:
        return float(np.var(self.values, ddof=1))

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.replicas)


@dataclass(frozen=True)
class KSReport:
    n: int
    replicas: int
    d_ks: float
    baldi_bound: float
    dependency_degree: int
    d_mode: str = "recount"
    ell: int = 1
    d: int = 2

    @property
    def vacuous(self) -> bool:
        return self.baldi_bound >= 1.0


@dataclass(frozen=True)
class ConvergenceFit:
    """Log-log fit of d_ks against n, read against the replica noise floor.

    ``excess_slope`` fits log(d_ks - floor) and is only set when every point
    clears the floor by three standard deviations.
    """

    slope: float
    intercept: float
    replicas: int
    floor: float
    floor_sd: float
    resolved: bool
    excess_slope: Optional[float] = None


def _normalization(n: int, ell: int, d: int, table: PrimeTable, literal_scale: bool,
                   cutoff: Optional[int]) -> Normalization:
    sigma = math.sqrt(limit_variance(ell, d, table, cutoff))
    s = sigma ** 2 if literal_scale else sigma
    if d == 2:
        center = n * n * 6.0 / (ell * ell * math.pi ** 2)
        scale = 2.0 * s * n ** 1.5
    else:
        cutoff = table.limit if cutoff is None else cutoff
        center = n ** d * euler_product(COPRIME_PAIR, d, cutoff, table).value
        scale = d * s * n ** ((2 * d - 1) / 2.0)
    return Normalization(center=center, scale=scale, sigma=sigma, literal_scale=literal_scale)


def _default_map(fn: Callable, items: Sequence):
    return [fn(item) for item in items]


def replicate_statistic(
    n: int,
    ell: int,
    d: int,
    replicas: int,
    seed: int,
    table: PrimeTable,
    literal_scale: bool = False,
    cutoff: Optional[int] = None,
    map_fn: Optional[Callable] = None,
) -> ReplicaEnsemble:
    """Draw ``replicas`` batches of n uniform values and normalize the ordered gcd sum.

    Replica r uses stream r of ``seed``; the diagonal i = j stays in the sum.
    """
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}.")
    if replicas < 2:
        raise DomainError(f"replicas must be >= 2, got {replicas}.")
    if d < 2:
        raise DomainError(f"d must be >= 2, got {d}.")
    if d > 2 and ell > 1:
        raise UnsupportedCombinationError(f"No d-tuple ensemble for d = {d} with ell = {ell} > 1.")

    norm = _normalization(n, ell, d, table, literal_scale, cutoff)

    def one(r):
        batch = sample_uniform(n, n, seed, stream_id=r)
        if d == 2:
            return gcd_pair_count(batch, ell, table)
        return dgcd_tuple_count(batch, d, table)

    raw = np.asarray((map_fn or _default_map)(one, range(replicas)), dtype=np.float64)
    values = (raw - norm.center) / norm.scale
    logger.debug("ensemble n=%d ell=%d d=%d: mean %.4g var %.4g", n, ell, d, values.mean(), values.var())
    return ReplicaEnsemble(
        n=n, ell=ell, d=d, replicas=replicas, values=values,
        normalization=norm, seed=seed, raw=raw,
    )


def squarefree_ensemble(
    n: int,
    replicas: int,
    seed: int,
    table: PrimeTable,
    map_fn: Optional[Callable] = None,
) -> ReplicaEnsemble:
    """(#square-free draws - 6n/pi^2) / sqrt(n * (6/pi^2 - 36/pi^4)) per replica."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    if replicas < 2:
        raise DomainError(f"replicas must be >= 2, got {replicas}.")
    if n > table.limit:
        raise DomainError(f"n = {n} exceeds prime table limit {table.limit}.")
    sigma = math.sqrt(squarefree_limit_variance())
    norm = Normalization(center=6.0 * n / math.pi ** 2, scale=sigma * math.sqrt(n), sigma=sigma)

    def one(r):
        batch = sample_uniform(n, n, seed, stream_id=r)
        return int(np.count_nonzero(table.mobius[batch.values]))

    raw = np.asarray((map_fn or _default_map)(one, range(replicas)), dtype=np.float64)
    return ReplicaEnsemble(
        n=n, ell=1, d=1, replicas=replicas, values=(raw - norm.center) / norm.scale,
        normalization=norm, seed=seed, raw=raw, statistic=SQUAREFREE,
    )


def ks_distance(values: Sequence[float]) -> float:
    """One-sample Kolmogorov-Smirnov statistic against the standard normal."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise DomainError("ks_distance needs at least one value.")
    r = v.size
    cdf = ndtr(v)
    i = np.arange(1, r + 1, dtype=np.float64)
    return float(max(np.max(i / r - cdf), np.max(cdf - (i - 1) / r)))


def convergence_fit(points: Sequence[Tuple[int, float]]) -> Tuple[float, float]:
    """Least-squares slope and intercept of log d_ks against log n."""
    pts = list(points)
    if len(pts) < 3:
        raise DomainError(f"convergence_fit needs >= 3 points, got {len(pts)}.")
    ns = np.array([p[0] for p in pts], dtype=np.float64)
    ds = np.array([p[1] for p in pts], dtype=np.float64)
    if np.unique(ns).size != ns.size:
        raise DomainError("convergence_fit needs distinct n values.")
    if np.any(ds <= 0) or np.any(ns <= 0):
        raise DomainError("convergence_fit needs positive n and d_ks (log undefined).")
    slope, intercept = np.polyfit(np.log(ns), np.log(ds), 1)
    return float(slope), float(intercept)


def ks_noise_floor(replicas: int) -> Tuple[float, float]:
    """Mean and standard deviation of d_ks for R exact N(0, 1) draws.

    Kolmogorov limit law with the Stephens finite-R scale sqrt(R) + 0.12 + 0.11/sqrt(R).
    """
    if replicas < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas}.")
    root = math.sqrt(replicas)
    scale = root + 0.12 + 0.11 / root
    return float(kstwobign.mean()) / scale, float(kstwobign.std()) / scale


def floor_aware_fit(points: Sequence[Tuple[int, float]], replicas: int,
                    margin: float = 3.0) -> ConvergenceFit:
    """convergence_fit plus the slope of the excess over the KS noise floor."""
    pts = list(points)
    slope, intercept = convergence_fit(pts)
    floor, floor_sd = ks_noise_floor(replicas)
    ns = np.array([p[0] for p in pts], dtype=np.float64)
    excess = np.array([p[1] for p in pts], dtype=np.float64) - floor
    resolved = bool(np.all(excess > margin * floor_sd))
    excess_slope = None
    if resolved:
        excess_slope = float(np.polyfit(np.log(ns), np.log(excess), 1)[0])
    else:
        logger.warning(
            "some d_ks within %.1f sd of the R=%d noise floor %.4g; convergence rate not resolved",
            margin, replicas, floor,
        )
    return ConvergenceFit(
        slope=slope, intercept=intercept, replicas=replicas, floor=floor,
        floor_sd=floor_sd, resolved=resolved, excess_slope=excess_slope,
    )


def dependency_degree(n: int, d_mode: str = "recount") -> int:
    if d_mode == "paper":
        return 2 * n - 5
    if d_mode == "recount":
        return 2 * n - 3
    raise DomainError(f"Unknown D mode '{d_mode}'; expected one of {D_MODES}.")


def baldi_bound(n: int, sigma_n: float, d_mode: str = "recount") -> float:
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}.")
    if not sigma_n > 0:
        raise DomainError(f"sigma_n must be positive, got {sigma_n}.")
    dep = float(dependency_degree(n, d_mode))
    pairs = math.comb(n, 2)
    return (
        dep ** 2 * pairs / sigma_n ** 3
        + math.sqrt(2.0 * sigma_n / math.pi) * dep ** 1.5 * math.sqrt(pairs) / sigma_n ** 2
    )


def ks_report(ensemble: ReplicaEnsemble, table: PrimeTable, d_mode: str = "recount") -> KSReport:
    """KS distance of the ensemble plus the dependency-graph bound at the exact sigma_n."""
    d_ks = ks_distance(ensemble.values)
    if ensemble.statistic == GCD and ensemble.d == 2:
        sigma_n = exact_variance(ensemble.n, ensemble.ell, table).sigma_n
        bound = baldi_bound(ensemble.n, sigma_n, d_mode)
    else:
        bound = math.inf
    report = KSReport(
        n=ensemble.n, replicas=ensemble.replicas, d_ks=d_ks, baldi_bound=bound,
        dependency_degree=dependency_degree(ensemble.n, d_mode), d_mode=d_mode,
        ell=ensemble.ell, d=ensemble.d,
    )
    if report.vacuous:
        logger.warning("Baldi bound %.4g at n=%d exceeds 1; domination check is vacuous", bound, ensemble.n)
    return report
