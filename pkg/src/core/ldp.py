# src/core/ldp.py

"""Truncated large-deviation rate functions for gcd densities.

A state is a digit pattern over a finite set of primes. In binary mode bit i
records whether the (i+1)-th prime divides the integer. In mixed mode (gcd
level ell > 1) each prime power q^beta of ell contributes a ternary digit
(0: q^beta does not divide, 1: exactly q^beta divides, 2: q^(beta+1) divides)
ahead of a binary tail over the smallest k primes not dividing ell.

Flat state index: ``t * 2**k + b`` where ``t = sum gamma_j 3**j`` is the
ternary block and ``b = sum bit_i 2**i`` the binary tail.

The rate I(x) = inf{KL(mu || nu) : F(mu) = x} is found by a Lagrange sweep:
for fixed lambda the stationary measure has Gibbs form
mu(a) ~ nu(a) exp(2 lambda G(a)), G being the kernel potential of mu. The
value returned is the best feasible KL found, so it bounds the infimum from
above.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import rel_entr, softmax, xlogy

from src.core.errors import CapacityError, DomainError, InfeasibleLevelError, UnsupportedCombinationError
from src.core.primes import PrimeTable, factorize, first_primes
from src.core.sampler import make_rng, product_law

logger = logging.getLogger(__name__)

SQUAREFREE_DENSITY = 6.0 / math.pi ** 2

# Weights must sum to one within this tolerance.
_MASS_TOL = 1e-12

# First nonzero multiplier of the geometric lambda sweep.
_SWEEP_START = 1.0 / 16.0

_MIN_DAMPING = 1.0 / 64.0

# Log-normal spread of the perturbed starting measures used by restarts.
_RESTART_SPREAD = 0.5


@dataclass(frozen=True)
class SolverOptions:
    damping: float = 0.5
    tol: float = 1e-10
    level_tol: float = 1e-9
    max_iter: int = 20000
    lambda_window: Tuple[float, float] = (-50.0, 50.0)
    restarts: int = 8
    seed: int = 0
    max_states: int = 2 ** 24
    mixed_max_states: int = 2 ** 20
    direct_max_states: int = 2 ** 10

    @classmethod
    def from_settings(cls, solver: Dict, **overrides) -> "SolverOptions":
        known = {f for f in cls.__dataclass_fields__}
        values = {key: val for key, val in solver.items() if key in known}
        values.update({key: val for key, val in overrides.items() if val is not None})
        if "lambda_window" in values:
            values["lambda_window"] = tuple(float(v) for v in values["lambda_window"])
        return cls(**values)

    def validate(self) -> None:
        lo, hi = self.lambda_window
        if not lo < 0 < hi:
            raise DomainError(f"lambda_window must straddle 0, got [{lo}, {hi}].")
        if not 0 < self.damping <= 1:
            raise DomainError(f"damping must lie in (0, 1], got {self.damping}.")
        if self.tol <= 0 or self.level_tol <= 0:
            raise DomainError("Solver tolerances must be positive.")
        if self.max_iter < 1 or self.restarts < 1:
            raise DomainError("max_iter and restarts must be >= 1.")


@dataclass(frozen=True)
class StateSpace:
    """Shape of a truncated digit space plus the primes behind each digit."""

    k: int
    tail_primes: Tuple[int, ...]
    moduli: Tuple[int, ...] = ()   # q_j of ell
    exponents: Tuple[int, ...] = ()  # beta_j of ell
    strict: bool = False

    @property
    def m(self) -> int:
        return len(self.moduli)

    @property
    def binary(self) -> bool:
        return self.m == 0

    @property
    def ell(self) -> int:
        return math.prod(q ** b for q, b in zip(self.moduli, self.exponents))

    @property
    def ternary_size(self) -> int:
        return 3 ** self.m

    @property
    def tail_size(self) -> int:
        return 1 << self.k

    @property
    def size(self) -> int:
        return self.ternary_size * self.tail_size

    @property
    def kernel_label(self) -> str:
        if self.binary:
            return "f"
        return "f_ell-strict" if self.strict else "f_ell"

    def describe(self) -> Dict:
        return {
            "k": self.k,
            "ell": self.ell,
            "m": self.m,
            "tail_primes": list(self.tail_primes),
            "moduli": list(self.moduli),
            "exponents": list(self.exponents),
            "kernel": self.kernel_label,
            "states": self.size,
        }


def binary_space(k: int, table: PrimeTable, max_states: int = 2 ** 24) -> StateSpace:
    if k < 1:
        raise DomainError(f"Truncation k must be >= 1, got {k}.")
    if (1 << k) > max_states:
        raise CapacityError(f"2^{k} states exceeds the configured limit of {max_states}.")
    primes = first_primes(k, table)
    return StateSpace(k=k, tail_primes=tuple(int(p) for p in primes))


def mixed_space(
    ell: int,
    k: int,
    table: PrimeTable,
    strict: bool = False,
    max_states: int = 2 ** 20,
) -> StateSpace:
    """State space for gcd level ``ell``; falls back to binary when ell = 1."""
    if ell < 1:
        raise DomainError(f"ell must be >= 1, got {ell}.")
    if k < 0:
        raise DomainError(f"Truncation k must be >= 0, got {k}.")
    if ell == 1:
        return binary_space(k, table, max_states=max_states)
    pairs = factorize(ell, table)
    size = 3 ** len(pairs) * (1 << k)
    if size > max_states:
        raise CapacityError(f"3^{len(pairs)} * 2^{k} = {size} states exceeds the configured limit of {max_states}.")
    moduli = tuple(p for p, _ in pairs)
    primes = first_primes(k, table, exclude=moduli)
    return StateSpace(
        k=k,
        tail_primes=tuple(int(p) for p in primes),
        moduli=moduli,
        exponents=tuple(b for _, b in pairs),
        strict=strict,
    )


@dataclass(frozen=True)
class TruncatedMeasure:
    space: StateSpace
    weights: np.ndarray = field(repr=False)
    reference: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = self.weights
        if w.shape != (self.space.size,) or self.reference.shape != (self.space.size,):
            raise DomainError(
                f"Measure arrays must have shape ({self.space.size},), got {w.shape} and {self.reference.shape}."
            )
        if np.any(w < 0):
            raise DomainError("Measure weights must be nonnegative.")
        if abs(math.fsum(w) - 1.0) > _MASS_TOL:
            raise DomainError(f"Measure weights sum to {math.fsum(w)!r}, not 1.")
        if np.any(self.reference <= 0):
            raise DomainError("Reference measure must be strictly positive on every state.")

    def checksum(self) -> str:
        digest = hashlib.sha256(np.round(self.weights, 12).tobytes())
        return digest.hexdigest()[:16]


@dataclass(frozen=True)
class RateRecord:
    x: float
    rate: float
    lam: float
    iterations: int
    converged: bool
    measure_checksum: str


@dataclass(frozen=True)
class RatePoint:
    x: float
    rate: float
    lam: float
    iterations: int
    converged: bool
    measure: TruncatedMeasure = field(repr=False)
    diagnostics: Dict = field(default_factory=dict, repr=False)

    def record(self) -> RateRecord:
        return RateRecord(self.x, self.rate, self.lam, self.iterations, self.converged, self.measure.checksum())


@dataclass(frozen=True)
class RateCurve:
    space: StateSpace
    grid: Tuple[RateRecord, ...]
    options: SolverOptions
    diagnostics: Tuple[Dict, ...] = field(default=(), repr=False)


# ── state encoding ──────────────────────────────────────

def _ternary_digits(space: StateSpace) -> np.ndarray:
    """3^m x m matrix, row t holding the ternary digits of block index t."""
    t = np.arange(space.ternary_size, dtype=np.int64)
    powers = 3 ** np.arange(space.m, dtype=np.int64)
    return (t[:, None] // powers[None, :]) % 3


def _as_digits(state: Sequence[int]) -> Tuple[int, ...]:
    return tuple(int(v) for v in state)


def kernel_f(a: Sequence[int], b: Sequence[int]) -> int:
    """1 iff the binary patterns share no common 1."""
    a, b = _as_digits(a), _as_digits(b)
    if len(a) != len(b):
        raise DomainError(f"Digit patterns differ in length: {len(a)} vs {len(b)}.")
    return int(not any(x and y for x, y in zip(a, b)))


def kernel_f_ell(a: Sequence[int], b: Sequence[int], m: int, strict: bool = False) -> int:
    """Mixed-state kernel: ternary head of length ``m`` then a binary tail.

    A zero ternary digit on either side gives 0. Otherwise two 2s at the same
    place give 0 (with ``strict`` any equal pair of ternary digits does), and
    the tails must share no common 1.
    """
    a, b = _as_digits(a), _as_digits(b)
    if len(a) != len(b):
        raise DomainError(f"Mixed states differ in length: {len(a)} vs {len(b)}.")
    if not 0 <= m <= len(a):
        raise DomainError(f"Ternary digit count m = {m} does not fit states of length {len(a)}.")
    for x, y in zip(a[:m], b[:m]):
        if x == 0 or y == 0:
            return 0
        if (x == y) if strict else (x == 2 and y == 2):
            return 0
    return kernel_f(a[m:], b[m:])


def compatibility_matrix(space: StateSpace) -> np.ndarray:
    """3^m x 3^m 0/1 matrix of the ternary part of f_ell."""
    digits = _ternary_digits(space)
    if space.m == 0:
        return np.ones((1, 1), dtype=np.float64)
    nonzero = np.all(digits != 0, axis=1)
    a, b = digits[:, None, :], digits[None, :, :]
    if space.strict:
        clash = np.any(a == b, axis=2)
    else:
        clash = np.any((a == 2) & (b == 2), axis=2)
    ok = nonzero[:, None] & nonzero[None, :] & ~clash
    return ok.astype(np.float64)


def kernel_matrix(space: StateSpace) -> np.ndarray:
    """Full size x size kernel; only used on small spaces."""
    b = np.arange(space.tail_size, dtype=np.int64)
    tail = ((b[:, None] & b[None, :]) == 0).astype(np.float64)
    return np.kron(compatibility_matrix(space), tail)


def encode_states(values: np.ndarray, space: StateSpace) -> np.ndarray:
    """Flat state index of each integer under the digit map of ``space``."""
    v = np.asarray(values, dtype=np.int64)
    states = np.zeros(v.size, dtype=np.int64)
    for i, p in enumerate(space.tail_primes):
        states |= (v % p == 0).astype(np.int64) << i
    block = np.zeros(v.size, dtype=np.int64)
    for j, (q, beta) in enumerate(zip(space.moduli, space.exponents)):
        low = q ** beta
        gamma = (v % low == 0).astype(np.int64) + (v % (low * q) == 0).astype(np.int64)
        block += gamma * 3 ** j
    return block * space.tail_size + states


def _digits_to_states(patterns: np.ndarray, space: StateSpace) -> np.ndarray:
    p = np.asarray(patterns, dtype=np.int64)
    if p.ndim == 1:
        return p
    if p.shape[1] != space.m + space.k:
        raise DomainError(f"Patterns have {p.shape[1]} digits, state space expects {space.m + space.k}.")
    tern = p[:, : space.m] @ (3 ** np.arange(space.m, dtype=np.int64)) if space.m else 0
    tail = p[:, space.m :] @ np.left_shift(1, np.arange(space.k, dtype=np.int64))
    return tern * space.tail_size + tail


# ── measures ────────────────────────────────────────────

def reference_measure(space: StateSpace) -> np.ndarray:
    """Product law of the digits: Bernoulli(1/p) per tail bit, g-weights per ternary digit."""
    tern = np.ones(1)
    for q, beta in zip(space.moduli, space.exponents):
        g = np.array([1.0 - q ** -beta, q ** -beta - q ** -(beta + 1), q ** -(beta + 1)])
        tern = np.concatenate([tern * g[0], tern * g[1], tern * g[2]])
    tail = product_law(np.asarray(space.tail_primes, dtype=np.int64))
    return np.outer(tern, tail).ravel()


def reference(space: StateSpace) -> TruncatedMeasure:
    nu = reference_measure(space)
    return TruncatedMeasure(space, nu / math.fsum(nu), nu)


def point_mass(space: StateSpace, state: int) -> TruncatedMeasure:
    w = np.zeros(space.size)
    w[state] = 1.0
    return TruncatedMeasure(space, w, reference_measure(space))


def empirical_measure(patterns: np.ndarray, space: StateSpace) -> TruncatedMeasure:
    """Relative frequencies of a batch of states (flat indices or digit rows)."""
    states = _digits_to_states(patterns, space)
    if states.size == 0:
        raise DomainError("Cannot build an empirical measure from an empty batch.")
    if states.min() < 0 or states.max() >= space.size:
        raise DomainError(f"State index outside [0, {space.size}).")
    weights = np.bincount(states, minlength=space.size) / float(states.size)
    return TruncatedMeasure(space, weights, reference_measure(space))


def kl_divergence(mu: TruncatedMeasure) -> float:
    return float(math.fsum(rel_entr(mu.weights, mu.reference)))


# ── quadratic functional ────────────────────────────────

def _subset_sums(values: np.ndarray, k: int) -> np.ndarray:
    """Zeta transform over the last axis: Z(s) = sum_{b subset of s} values(b)."""
    z = np.array(values, dtype=np.float64, copy=True)
    lead = z.shape[:-1]
    for i in range(k):
        view = z.reshape(*lead, -1, 2, 1 << i)
        view[..., 1, :] += view[..., 0, :]
    return z


class _Potential:
    """G(a) = sum_b f(a, b) mu(b) for every state a."""

    def __init__(self, space: StateSpace, direct_max_states: int = 2 ** 10):
        self.space = space
        self.direct = not space.binary and space.size <= direct_max_states
        self.kernel = kernel_matrix(space) if self.direct else None
        self.compat = None if space.binary or self.direct else compatibility_matrix(space)

    def __call__(self, weights: np.ndarray) -> np.ndarray:
        space = self.space
        if self.direct:
            return self.kernel @ weights
        rows = weights.reshape(space.ternary_size, space.tail_size)
        # Complement subset sum is the subset sum read backwards.
        comp = _subset_sums(rows, space.k)[:, ::-1]
        if space.binary:
            return comp.ravel()
        return (self.compat @ comp).ravel()


def quadratic_functional(
    mu: TruncatedMeasure,
    max_states: int = 2 ** 24,
    direct_max_states: int = 2 ** 10,
) -> float:
    if mu.space.size > max_states:
        raise CapacityError(f"{mu.space.size} states exceeds the configured limit of {max_states}.")
    g = _Potential(mu.space, direct_max_states)(mu.weights)
    return float(np.dot(mu.weights, g))


def naive_quadratic_functional(mu: TruncatedMeasure) -> float:
    w = mu.weights
    return float(w @ kernel_matrix(mu.space) @ w)


def reference_level(space: StateSpace) -> float:
    """F(nu); in binary mode the product of (1 - 1/p^2) over the tail primes."""
    return quadratic_functional(reference(space), max_states=space.size)


def max_level(space: StateSpace) -> float:
    # Under the strict kernel two states must differ at every ternary place.
    return 0.5 if space.strict and space.m else 1.0


def max_level_state(space: StateSpace) -> int:
    """The state a with f(a, a) = 1: all ternary digits 1 and an empty tail."""
    if space.strict and space.m:
        raise UnsupportedCombinationError("The strict kernel has no state with f(a, a) = 1.")
    return sum(3 ** j for j in range(space.m)) * space.tail_size


def max_level_rate(space: StateSpace) -> float:
    return -math.log(float(reference_measure(space)[max_level_state(space)]))


# ── solver ──────────────────────────────────────────────

@dataclass
class _Solve:
    lam: float
    weights: np.ndarray
    level: float
    iterations: int
    converged: bool
    residual: float


class _RateSolver:
    def __init__(self, space: StateSpace, options: SolverOptions):
        options.validate()
        if space.size > (options.max_states if space.binary else options.mixed_max_states):
            raise CapacityError(f"{space.size} states exceeds the configured solver limit.")
        self.space = space
        self.options = options
        self.nu = reference_measure(space)
        self.log_nu = np.log(self.nu)
        self.potential = _Potential(space, options.direct_max_states)

    def starts(self) -> List[np.ndarray]:
        out = [self.nu.copy()]
        rng = make_rng(self.options.seed, 0)
        for _ in range(1, self.options.restarts):
            w = self.nu * np.exp(_RESTART_SPREAD * rng.standard_normal(self.space.size))
            out.append(w / w.sum())
        return out

    def fixed_point(self, lam: float, start: np.ndarray) -> _Solve:
        opts = self.options
        mu = start.copy()
        damping = opts.damping
        prev = math.inf
        residual = math.inf
        for it in range(1, opts.max_iter + 1):
            g = self.potential(mu)
            target = softmax(self.log_nu + 2.0 * lam * g)
            residual = float(np.max(np.abs(target - mu)))
            if residual < opts.tol:
                return _Solve(lam, mu, float(np.dot(mu, g)), it, True, residual)
            if residual > prev:
                damping = max(damping / 2.0, _MIN_DAMPING)
            prev = residual
            mu = (1.0 - damping) * mu + damping * target
        logger.debug("Fixed point at lambda=%.6g stopped after %d iterations (residual %.3g)", lam, opts.max_iter, residual)
        g = self.potential(mu)
        return _Solve(lam, mu, float(np.dot(mu, g)), opts.max_iter, False, residual)

    def sweep(self, x: float, start: np.ndarray) -> Tuple[Optional[_Solve], Optional[_Solve], List[_Solve]]:
        """Walk lambda geometrically away from 0 until F crosses ``x``."""
        lo, hi = self.options.lambda_window
        prev = self.fixed_point(0.0, start)
        history = [prev]
        bound = hi if x > prev.level else lo
        direction = 1.0 if bound > 0 else -1.0
        lam = _SWEEP_START
        while True:
            step = direction * min(lam, abs(bound))
            cur = self.fixed_point(step, start)
            history.append(cur)
            if (cur.level - x) * (prev.level - x) <= 0:
                return prev, cur, history
            if abs(step) >= abs(bound):
                return None, None, history
            prev = cur
            lam *= 2.0

    def bisect(self, x: float, left: _Solve, right: _Solve, start: np.ndarray) -> _Solve:
        if abs(left.level - x) <= self.options.level_tol:
            return left
        if abs(right.level - x) <= self.options.level_tol:
            return right
        cache: Dict[float, _Solve] = {}

        def gap(lam):
            cache[lam] = self.fixed_point(lam, start)
            return cache[lam].level - x

        if gap(left.lam) * gap(right.lam) > 0:
            # Cold start from this measure lands on another branch.
            return min((cache[left.lam], cache[right.lam]), key=lambda s: abs(s.level - x))
        lam = brentq(gap, left.lam, right.lam, xtol=1e-13, maxiter=200)
        return cache.get(lam) or self.fixed_point(lam, start)

    def kl(self, weights: np.ndarray) -> float:
        return float(math.fsum(rel_entr(weights, self.nu)))


def rate_function_point(x: float, space: StateSpace, options: Optional[SolverOptions] = None) -> RatePoint:
    options = options or SolverOptions()
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise InfeasibleLevelError(f"Level x = {x} lies outside [0, 1].")
    top = max_level(space)
    if x > top + options.level_tol:
        raise InfeasibleLevelError(f"Level x = {x} exceeds the attainable maximum {top} of kernel {space.kernel_label}.")

    solver = _RateSolver(space, options)
    nu = reference(space)
    f_nu = quadratic_functional(nu, max_states=space.size, direct_max_states=options.direct_max_states)

    if abs(x - f_nu) <= options.level_tol:
        return RatePoint(x, 0.0, 0.0, 0, True, nu, {"reference_level": f_nu, "closed_form": "reference"})
    if top == 1.0 and x >= 1.0 - options.level_tol:
        state = max_level_state(space)
        return RatePoint(
            x, max_level_rate(space), math.inf, 0, True, point_mass(space, state),
            {"reference_level": f_nu, "closed_form": "max_level_state"},
        )
    if space.binary and x <= options.level_tol:
        # Intersecting families under a product law with p <= 1/2 peak at the star on the prime 2.
        w = np.where(np.arange(space.size) & 1, solver.nu, 0.0)
        w /= w.sum()
        return RatePoint(
            x, math.log(2.0), -math.inf, 0, True, TruncatedMeasure(space, w, solver.nu),
            {"reference_level": f_nu, "closed_form": "star"},
        )

    best: Optional[_Solve] = None
    best_rate = math.inf
    bracket = None
    feasible = 0
    fallback: Optional[_Solve] = None
    for r, start in enumerate(solver.starts()):
        history: List[_Solve] = []
        if bracket is None:
            left, right, history = solver.sweep(x, start)
            if left is not None:
                bracket = (left, right)
        # Without a bracket, sweep solves that already sit on the level still count.
        candidates = [solver.bisect(x, bracket[0], bracket[1], start)] if bracket else history
        for sol in candidates:
            if abs(sol.level - x) > options.level_tol * 10:
                if fallback is None or abs(sol.level - x) < abs(fallback.level - x):
                    fallback = sol
                continue
            feasible += 1
            rate = solver.kl(sol.weights)
            logger.debug("restart %d: lambda=%.8g level=%.12g rate=%.12g", r, sol.lam, sol.level, rate)
            if rate < best_rate:
                best, best_rate = sol, rate

    diagnostics = {
        "reference_level": f_nu,
        "target_gap": x - f_nu,
        "bracket": [bracket[0].lam, bracket[1].lam] if bracket else None,
        "bracketed": bracket is not None,
        "feasible_restarts": feasible,
    }
    if best is None:
        sol = fallback
        logger.warning("No feasible measure found for x=%.6g (closest level %.6g)", x, sol.level)
        diagnostics.update(level_error=abs(sol.level - x), stationarity=sol.residual)
        w = np.clip(sol.weights, 0.0, None)
        return RatePoint(
            x, solver.kl(w / w.sum()), sol.lam, sol.iterations, False,
            TruncatedMeasure(space, w / w.sum(), solver.nu), diagnostics,
        )

    diagnostics.update(level_error=abs(best.level - x), stationarity=best.residual)
    if not best.converged:
        logger.warning("Fixed point for x=%.6g hit max_iter; returning best iterate", x)
    w = best.weights / best.weights.sum()
    return RatePoint(
        x, max(best_rate, 0.0), best.lam, best.iterations, best.converged,
        TruncatedMeasure(space, w, solver.nu), diagnostics,
    )


def _default_map(fn: Callable, items: Sequence) -> List:
    return [fn(item) for item in items]


def rate_curve(
    space: StateSpace,
    grid: Iterable[float],
    options: Optional[SolverOptions] = None,
    map_fn: Optional[Callable] = None,
) -> RateCurve:
    """Rate at every grid level; ``map_fn(fn, items)`` must keep input order."""
    options = options or SolverOptions()
    levels = [float(x) for x in grid]
    if not levels:
        raise DomainError("Rate curve grid is empty.")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError("Rate curve grid must be strictly increasing.")
    points = (map_fn or _default_map)(lambda x: rate_function_point(x, space, options), levels)
    return RateCurve(
        space=space,
        grid=tuple(p.record() for p in points),
        options=options,
        diagnostics=tuple(p.diagnostics for p in points),
    )


def rate_ladder(
    x: float,
    ks: Iterable[int],
    table: PrimeTable,
    options: Optional[SolverOptions] = None,
    ell: int = 1,
    strict: bool = False,
    map_fn: Optional[Callable] = None,
) -> List[Tuple[int, RatePoint]]:
    """I^(k)(x) for each truncation in ``ks``; no extrapolation in k."""
    options = options or SolverOptions()
    ks = list(ks)

    def one(k):
        space = mixed_space(ell, k, table, strict=strict, max_states=options.mixed_max_states) if ell > 1 \
            else binary_space(k, table, max_states=options.max_states)
        return rate_function_point(x, space, options)

    return list(zip(ks, (map_fn or _default_map)(one, ks)))


def squarefree_rate(x: float) -> float:
    """Bernoulli relative entropy against the square-free density."""
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise DomainError(f"Square-free level must lie in [0, 1], got {x}.")
    c = SQUAREFREE_DENSITY
    return float(xlogy(x, x / c) + xlogy(1.0 - x, (1.0 - x) / (1.0 - c)))


# ── serialization ───────────────────────────────────────

CSV_COLUMNS = ("x", "rate", "lambda", "iterations", "converged")


def _fmt(v: float) -> str:
    return repr(float(v)) if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def rate_curve_to_csv(curve: RateCurve) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for rec in curve.grid:
        lines.append(f"{_fmt(rec.x)},{_fmt(rec.rate)},{_fmt(rec.lam)},{rec.iterations},{str(rec.converged).lower()}")
    return "\n".join(lines) + "\n"


def rate_curve_to_json(curve: RateCurve) -> Dict:
    rows = []
    for rec, diag in zip(curve.grid, curve.diagnostics or ({},) * len(curve.grid)):
        row = asdict(rec)
        lam = row.pop("lam")
        row["lambda"] = lam if math.isfinite(lam) else _fmt(lam)
        row["diagnostics"] = dict(diag)
        rows.append(row)
    return {"space": curve.space.describe(), "solver": solver_metadata(curve.options), "grid": rows}


def solver_metadata(options: SolverOptions) -> Dict:
    meta = asdict(options)
    meta["lambda_window"] = list(options.lambda_window)
    return meta
