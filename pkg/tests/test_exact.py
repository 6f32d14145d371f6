# tests/test_exact.py

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DomainError, UnsupportedCombinationError
from src.core.exact import (
    dgcd_exact_prob,
    enumerate_pair_count,
    enumerate_squarefree_count,
    enumerate_triple_count,
    exact_pair_count,
    exact_pair_prob,
    exact_statistic_mean,
    exact_triple_count,
    exact_triple_prob,
    exact_variance,
    limit_variance,
    limit_variance_result,
    squarefree_count,
    squarefree_limit_variance,
)


def _gcd_table(n):
    v = np.arange(1, n + 1, dtype=np.int64)
    return np.gcd.outer(v, v)


def test_pair_count_matches_enumeration(small_table):
    for n in range(1, 301):
        hist = np.bincount(_gcd_table(n).ravel(), minlength=n + 1)
        for ell in range(1, n + 1):
            assert exact_pair_count(n, ell, small_table) == hist[ell], (n, ell)


def test_triple_count_matches_enumeration(small_table):
    for n in range(1, 61):
        g = _gcd_table(n)
        for ell in range(1, n + 1):
            rows = np.count_nonzero(g == ell, axis=1)
            assert exact_triple_count(n, ell, small_table) == int(np.sum(rows * rows)), (n, ell)


@pytest.mark.parametrize("n, ell", [(7, 1), (12, 2), (30, 3)])
def test_enumerators_agree_with_gcd_table(n, ell):
    g = _gcd_table(n)
    assert enumerate_pair_count(n, ell) == np.count_nonzero(g == ell)
    assert enumerate_triple_count(n, ell) == int(np.sum(np.count_nonzero(g == ell, axis=1) ** 2))


def test_ell_beyond_n(small_table):
    assert exact_pair_count(5, 6, small_table) == 0
    assert exact_triple_count(5, 6, small_table) == 0


def test_coprime_pair_probability_at_a_million(table):
    assert abs(float(exact_pair_prob(10 ** 6, 1, table)) - 6 / math.pi ** 2) < 1e-3


def test_exact_pair_prob_is_a_fraction(small_table):
    # 1..4: coprime ordered pairs are all but (2,2), (2,4), (4,2), (4,4), (3,3)
    assert exact_pair_prob(4, 1, small_table) == Fraction(11, 16)


def test_variance_needs_three_indices(small_table):
    with pytest.raises(DomainError):
        exact_variance(2, 1, small_table)


def test_variance_ratio_to_limit(table):
    n = 10 ** 4
    stats = exact_variance(n, 1, table)
    assert float(stats.sigma_n_sq) / n ** 3 == pytest.approx(limit_variance(1, 2, table), rel=0.02)


def test_variance_ratio_ell_two(table):
    n = 10 ** 4
    stats = exact_variance(n, 2, table)
    assert float(stats.sigma_n_sq) / n ** 3 == pytest.approx(limit_variance(2, 2, table), rel=0.05)


def test_variance_brute_force_small_n(small_table):
    # Var(sum_{i<j} 1{gcd = 1}) over all 5^5 equally likely batches.
    n = 5
    values = []
    for batch in itertools.product(range(1, n + 1), repeat=n):
        values.append(sum(math.gcd(batch[i], batch[j]) == 1 for i in range(n) for j in range(i + 1, n)))
    mean = Fraction(sum(values), len(values))
    var = Fraction(sum(v * v for v in values), len(values)) - mean * mean
    assert exact_variance(n, 1, small_table).sigma_n_sq == var


def test_statistic_mean_brute_force(small_table):
    n = 4
    total = 0
    batches = list(itertools.product(range(1, n + 1), repeat=n))
    for batch in batches:
        total += sum(math.gcd(a, b) == 2 for a in batch for b in batch)
    assert exact_statistic_mean(n, 2, small_table) == Fraction(total, len(batches))


def test_limit_variance_values(table):
    assert limit_variance(1, 2, table) == pytest.approx(0.0587, abs=3e-4)
    v2 = limit_variance(2, 2, table)
    v1_part = limit_variance(1, 2, table) + 36 / math.pi ** 4
    assert v2 == pytest.approx(v1_part / 8 - 36 / (16 * math.pi ** 4), rel=1e-12)
    assert limit_variance(1, 3, table) > 0


def test_limit_variance_tail_bound(table):
    res = limit_variance_result(1, 2, table, cutoff=10 ** 5)
    assert res.cutoff == 10 ** 5
    assert 0 < res.tail_bound < 1e-4
    assert abs(res.value - limit_variance(1, 2, table)) <= res.tail_bound


def test_limit_variance_unsupported(table):
    with pytest.raises(UnsupportedCombinationError):
        limit_variance(2, 3, table)


def test_squarefree_counts(table, small_table):
    assert squarefree_count(10 ** 4, small_table) == enumerate_squarefree_count(10 ** 4)
    assert squarefree_count(10 ** 6, table) == 607926
    assert squarefree_count(1, small_table) == 1


def test_squarefree_limit_variance():
    c = 6 / math.pi ** 2
    assert squarefree_limit_variance() == pytest.approx(c * (1 - c), rel=1e-15)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_dgcd_exact_prob_brute_force(small_table, d):
    n = 12
    hits = sum(math.gcd(*t) == 1 for t in itertools.product(range(1, n + 1), repeat=d))
    assert dgcd_exact_prob(n, d, small_table) == Fraction(hits, n ** d)


def test_dgcd_rejects_small_d(small_table):
    with pytest.raises(DomainError):
        dgcd_exact_prob(10, 1, small_table)


def test_small_worked_values(small_table):
    assert exact_pair_prob(4, 4, small_table) == Fraction(1, 16)
    assert exact_triple_prob(4, 1, small_table) == Fraction(33, 64)
    assert exact_triple_prob(2, 1, small_table) == Fraction(5, 8)
    assert exact_variance(4, 1, small_table).sigma_n_sq == Fraction(594, 256)
    assert squarefree_count(10, small_table) == 7


def test_pair_probabilities_sum_to_one(small_table):
    for n in range(1, 301):
        assert sum(exact_pair_prob(n, ell, small_table) for ell in range(1, n + 1)) == 1, n


@given(st.integers(3, 2000), st.integers(1, 5))
@settings(max_examples=50, deadline=None)
def test_triple_event_is_rarer(small_table, n, ell):
    stats = exact_variance(n, ell, small_table)
    assert 0 <= stats.beta_n <= stats.alpha_n <= 1
    assert stats.sigma_n_sq >= 0
