# tests/test_primes.py

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DomainError
from src.core.primes import (
    COPRIME_PAIR,
    MEISSEL_MERTENS,
    TRIPLE,
    build_prime_table,
    euler_product,
    euler_tail_bound,
    factorize,
    first_primes,
    meissel_mertens_residual,
    mertens_sum,
    prime_count,
    window_primes,
)


def _mobius_by_trial_division(x):
    sign = 1
    p = 2
    while p * p <= x:
        if x % p == 0:
            x //= p
            if x % p == 0:
                return 0
            sign = -sign
        p += 1
    return -sign if x > 1 else sign


def test_smallest_table():
    t = build_prime_table(2)
    assert t.primes.tolist() == [2]
    assert len(t) == 1


def test_table_limit_below_two():
    with pytest.raises(DomainError):
        build_prime_table(1)


def test_mobius_first_values(small_table):
    assert small_table.mobius[1:11].tolist() == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]


@given(st.integers(1, 10 ** 4))
@settings(max_examples=300, deadline=None)
def test_mobius_matches_trial_division(small_table, x):
    assert small_table.mobius[x] == _mobius_by_trial_division(x)


def test_prime_counts(table):
    assert prime_count(100, table) == 25
    assert prime_count(10 ** 6, table) == 78498
    assert table.is_prime(999983)
    assert not table.is_prime(999981)


@given(st.integers(10 ** 3, 10 ** 6))
@settings(max_examples=50, deadline=None)
def test_prime_count_chebyshev_upper(table, x):
    assert prime_count(x, table) <= 2 * x / math.log(x)


def test_coprime_pair_product_near_six_over_pi_squared(table):
    res = euler_product(COPRIME_PAIR, 2, 10 ** 6, table)
    assert res.tail_bound < 1e-6
    assert abs(res.value - 6 / math.pi ** 2) <= 2 * res.tail_bound


def test_log_space_product_matches_direct_product(table):
    cutoff = 200_000
    res = euler_product(TRIPLE, 2, cutoff, table)
    direct = 1.0
    for p in table.primes_upto(cutoff).tolist():
        direct *= 1.0 - 2.0 / p ** 2 + 1.0 / p ** 3
    assert res.value == pytest.approx(direct, rel=1e-12)


def test_log_space_switch_is_seamless(table):
    # 10001 = 73 * 137, so both cutoffs see the same primes through different accumulations.
    below = euler_product(COPRIME_PAIR, 2, 10_000, table)
    above = euler_product(COPRIME_PAIR, 2, 10_001, table)
    assert above.value == pytest.approx(below.value, rel=1e-13)


def test_zeta_three(table):
    res = euler_product(COPRIME_PAIR, 3, 10 ** 5, table)
    # 1 / zeta(3)
    assert abs(res.value - 0.8319073725807075) <= 2 * res.tail_bound


def test_tail_bound_shrinks_with_cutoff():
    assert euler_tail_bound(COPRIME_PAIR, 2, 10 ** 4) > euler_tail_bound(COPRIME_PAIR, 2, 10 ** 5)
    assert euler_tail_bound(TRIPLE, 2, 10 ** 4) == pytest.approx(2 * euler_tail_bound(COPRIME_PAIR, 2, 10 ** 4))


def test_euler_product_rejects_bad_input(small_table):
    with pytest.raises(DomainError):
        euler_product(COPRIME_PAIR, 2, 10 ** 5, small_table)
    with pytest.raises(DomainError):
        euler_product(COPRIME_PAIR, 1, 100, small_table)
    with pytest.raises(DomainError):
        euler_product("quadruple", 2, 100, small_table)


def test_mertens_sum_small_window(small_table):
    expected = 1 / 2 + 1 / 3 + 1 / 5 + 1 / 7 + 1 / 11
    assert mertens_sum(1, 11, small_table) == pytest.approx(expected, rel=1e-15)
    assert mertens_sum(2, 11, small_table) == pytest.approx(expected - 0.5, rel=1e-15)


def test_mertens_sum_empty_window(small_table):
    with pytest.raises(DomainError):
        mertens_sum(11, 11, small_table)


def test_meissel_mertens_residual(table):
    x = 10 ** 6
    tolerance = 1.0 / (2.0 * math.log(x) ** 2)
    assert abs(meissel_mertens_residual(x, table) - MEISSEL_MERTENS) < tolerance


def test_windows_and_first_primes(small_table):
    assert window_primes(1, 11, small_table).tolist() == [2, 3, 5, 7, 11]
    assert window_primes(3, 20, small_table).tolist() == [5, 7, 11, 13, 17, 19]
    assert first_primes(3, small_table).tolist() == [2, 3, 5]
    assert first_primes(3, small_table, exclude=[2]).tolist() == [3, 5, 7]
    with pytest.raises(DomainError):
        first_primes(5000, small_table)


def test_factorize(small_table):
    assert factorize(360, small_table) == [(2, 3), (3, 2), (5, 1)]
    assert factorize(1, small_table) == []
    assert factorize(9973, small_table) == [(9973, 1)]


@given(st.integers(1, 10 ** 4))
@settings(max_examples=200, deadline=None)
def test_factorize_reassembles(small_table, x):
    parts = factorize(x, small_table)
    assert math.prod(p ** e for p, e in parts) == x
    assert all(small_table.is_prime(p) for p, _ in parts)


def test_spf_is_smallest_prime_factor(small_table):
    x = np.arange(2, 2000)
    spf = small_table.spf[x]
    assert np.all(x % spf == 0)
    assert all(small_table.is_prime(int(p)) for p in np.unique(spf))


def test_table_up_to_ten(small_table):
    t = build_prime_table(10)
    assert t.primes.tolist() == [2, 3, 5, 7]
    assert t.is_prime(7) and not t.is_prime(9)
    assert small_table.mobius[12] == 0
    assert small_table.mobius[30] == -1


def test_euler_product_small_cutoffs(small_table):
    # (3/4)(8/9)(24/25)
    assert euler_product(COPRIME_PAIR, 2, 5, small_table).value == pytest.approx(0.64, rel=1e-15)
    assert euler_product(COPRIME_PAIR, 2, 1, small_table).value == 1.0


def test_mertens_sum_first_three_primes(small_table):
    assert mertens_sum(1, 5, small_table) == pytest.approx(31 / 30, rel=1e-15)
