# src/cli/checks.py

"""Reduced-size brute-force gates run before a command when --check is set."""

import logging
import math
from functools import reduce

import numpy as np

from src.core import exact, ldp, sampler, tails
from src.core.errors import OracleMismatchError

logger = logging.getLogger(__name__)

_CHECK_SEED = 20240601


def _expect(name, fast, oracle):
    if fast != oracle:
        raise OracleMismatchError(f"{name}: fast path gave {fast!r}, brute force gave {oracle!r}.")
    logger.debug("check %s ok (%r)", name, fast)


def check_pair_counts(config, table):
    n = min(max(config.n), 200)
    for ell in config.ell:
        _expect(f"exact_pair_count(n={n}, ell={ell})",
                exact.exact_pair_count(n, ell, table), exact.enumerate_pair_count(n, ell))
    batch = sampler.sample_uniform(min(max(config.n), table.limit), 300, _CHECK_SEED)
    for ell in config.ell:
        _expect(f"gcd_pair_count(ell={ell})",
                sampler.gcd_pair_count(batch, ell, table), sampler.naive_gcd_pair_count(batch.values, ell))


def check_triple_counts(config, table):
    n = 40
    for ell in config.ell:
        _expect(f"exact_triple_count(n={n}, ell={ell})",
                exact.exact_triple_count(n, ell, table), exact.enumerate_triple_count(n, ell))


def check_dgcd(config, table):
    d = config.d
    # Keeps count^d tuples near 60k.
    count = max(2, int(60_000 ** (1.0 / d)))
    batch = sampler.sample_uniform(min(max(config.n), table.limit), count, _CHECK_SEED)
    v = batch.values.tolist()
    idx = np.indices((len(v),) * d).reshape(d, -1).T
    brute = sum(1 for row in idx if reduce(math.gcd, (v[i] for i in row)) == 1)
    _expect(f"dgcd_tuple_count(d={d})", sampler.dgcd_tuple_count(batch, d, table), brute)


def check_squarefree(config, table):
    n = min(max(config.n), 10_000)
    _expect(f"squarefree_count({n})", exact.squarefree_count(n, table), exact.enumerate_squarefree_count(n))


def check_divisor_counts(config, table):
    k1, k2 = config.prime_window()
    batch = sampler.sample_uniform(min(max(config.n), table.limit), 500, _CHECK_SEED)
    fast = sampler.divisor_counts(batch, (k1, k2), table).counts
    _expect(f"divisor_counts{(k1, k2)}", fast,
            sampler.naive_divisor_counts(batch.values, np.array(list(fast), dtype=np.int64)))


def check_quadratic_functional(config, table):
    k = min(max(config.k or [4]), 8)
    space = ldp.binary_space(k, table)
    rng = sampler.make_rng(_CHECK_SEED)
    w = rng.random(space.size)
    mu = ldp.TruncatedMeasure(space, w / w.sum(), ldp.reference_measure(space))
    fast, slow = ldp.quadratic_functional(mu), ldp.naive_quadratic_functional(mu)
    if abs(fast - slow) > 1e-12:
        raise OracleMismatchError(f"quadratic_functional(k={k}): {fast!r} vs naive {slow!r}.")


def check_mgf(config, table):
    for n in (100, 500):
        for alpha in (0.05, 0.1, 0.2):
            for lam in (0.05, 0.2):
                bound = tails.binomial_mgf_bound(alpha, lam, n)
                value = tails.exact_binomial_log_mgf(alpha, lam, n)
                if value > bound:
                    raise OracleMismatchError(f"binomial_mgf_bound({alpha}, {lam}, {n}) = {bound} below exact {value}.")


CHECKS = {
    "lln": (check_pair_counts,),
    "clt": (check_pair_counts, check_triple_counts),
    "ldp": (check_quadratic_functional,),
    "squarefree": (check_squarefree,),
    "dgcd": (check_dgcd,),
    "coupling": (check_divisor_counts,),
    "tails": (check_divisor_counts, check_mgf),
    "exact": (check_pair_counts, check_triple_counts),
}


def run_checks(config, table):
    for fn in CHECKS.get(config.command, ()):
        fn(config, table)
    logger.info("Oracle checks passed for %s", config.command)
