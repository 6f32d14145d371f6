# tests/test_ldp.py

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.special import rel_entr, softmax

from src.core.errors import CapacityError, DomainError, InfeasibleLevelError, UnsupportedCombinationError
from src.core.ldp import (
    SQUAREFREE_DENSITY,
    SolverOptions,
    TruncatedMeasure,
    binary_space,
    compatibility_matrix,
    empirical_measure,
    encode_states,
    kernel_f,
    kernel_f_ell,
    kernel_matrix,
    kl_divergence,
    max_level,
    max_level_rate,
    max_level_state,
    mixed_space,
    naive_quadratic_functional,
    point_mass,
    quadratic_functional,
    rate_curve,
    rate_curve_to_csv,
    rate_curve_to_json,
    rate_function_point,
    rate_ladder,
    reference,
    reference_level,
    reference_measure,
    squarefree_rate,
)
from src.core.sampler import make_rng, pack_digits, psi_states, sample_nu, sample_uniform

FAST = SolverOptions(restarts=3)


def _random_measure(space, seed):
    w = make_rng(seed).random(space.size)
    return TruncatedMeasure(space, w / w.sum(), reference_measure(space))


def _k1_rate(x):
    t = math.sqrt(1.0 - x)
    return sum(p * math.log(2.0 * p) for p in (t, 1.0 - t) if p > 0)


def _state_digits(space, index):
    t, b = divmod(index, space.tail_size)
    tern = [(t // 3 ** j) % 3 for j in range(space.m)]
    bits = [(b >> i) & 1 for i in range(space.k)]
    return tern + bits


# ── kernels ─────────────────────────────────────────────

def test_kernel_f():
    assert kernel_f((1, 0, 1), (0, 1, 0)) == 1
    assert kernel_f((1, 0, 1), (0, 0, 1)) == 0
    assert kernel_f((), ()) == 1
    with pytest.raises(DomainError):
        kernel_f((1, 0), (1,))


def test_kernel_f_ell():
    assert kernel_f_ell((1, 0, 1), (2, 1, 0), m=1) == 1
    assert kernel_f_ell((2, 0, 1), (2, 1, 0), m=1) == 0
    assert kernel_f_ell((0, 0, 0), (1, 0, 0), m=1) == 0
    assert kernel_f_ell((1, 1, 0), (1, 1, 0), m=1) == 0
    assert kernel_f_ell((1, 0, 0), (1, 0, 0), m=1) == 1
    assert kernel_f_ell((1, 0, 0), (1, 0, 0), m=1, strict=True) == 0
    assert kernel_f_ell((1, 0, 0), (2, 0, 0), m=1, strict=True) == 1


@pytest.mark.parametrize("strict", [False, True])
def test_kernel_matrix_matches_pointwise_kernel(small_table, strict):
    space = mixed_space(6, 2, small_table, strict=strict)
    assert space.m == 2 and space.tail_primes == (5, 7)
    K = kernel_matrix(space)
    np.testing.assert_array_equal(K, K.T)
    for i in range(space.size):
        for j in range(space.size):
            expected = kernel_f_ell(_state_digits(space, i), _state_digits(space, j), space.m, strict)
            assert K[i, j] == expected


@pytest.mark.parametrize("k", range(1, 7))
def test_binary_kernel_matrix_is_symmetric(small_table, k):
    space = binary_space(k, small_table)
    K = kernel_matrix(space)
    np.testing.assert_array_equal(K, K.T)
    for a in range(space.size):
        for b in range(space.size):
            bits_a = [(a >> i) & 1 for i in range(k)]
            bits_b = [(b >> i) & 1 for i in range(k)]
            assert K[a, b] == kernel_f(bits_a, bits_b)


def test_compatibility_matrix_plain_and_strict(small_table):
    plain = compatibility_matrix(mixed_space(2, 1, small_table))
    strict = compatibility_matrix(mixed_space(2, 1, small_table, strict=True))
    # digits 0, 1, 2
    np.testing.assert_array_equal(plain, [[0, 0, 0], [0, 1, 1], [0, 1, 0]])
    np.testing.assert_array_equal(strict, [[0, 0, 0], [0, 0, 1], [0, 1, 0]])


# ── quadratic functional ────────────────────────────────

def test_functional_examples(small_table):
    space = binary_space(3, small_table)
    assert quadratic_functional(point_mass(space, 0)) == 1.0
    assert quadratic_functional(point_mass(space, 7)) == 0.0
    assert reference_level(space) == pytest.approx(0.64, abs=1e-12)


@given(k=st.integers(1, 10), seed=st.integers(0, 2 ** 32))
@settings(max_examples=30, deadline=None)
def test_fast_functional_matches_naive(small_table, k, seed):
    mu = _random_measure(binary_space(k, small_table), seed)
    assert quadratic_functional(mu) == pytest.approx(naive_quadratic_functional(mu), abs=1e-12)


@pytest.mark.parametrize("ell,k", [(2, 3), (6, 3), (12, 2), (30, 2)])
def test_mixed_transform_matches_direct(small_table, ell, k):
    mu = _random_measure(mixed_space(ell, k, small_table), seed=ell)
    slow = naive_quadratic_functional(mu)
    assert quadratic_functional(mu, direct_max_states=0) == pytest.approx(slow, abs=1e-12)
    assert quadratic_functional(mu) == pytest.approx(slow, abs=1e-12)


def test_mixed_reference_level(small_table):
    space = mixed_space(2, 2, small_table)
    assert space.tail_primes == (3, 5)
    assert math.fsum(reference_measure(space)) == pytest.approx(1.0, abs=1e-15)
    assert reference_level(space) == pytest.approx(0.16, abs=1e-12)


def test_encode_states_matches_digit_map(small_table):
    values = sample_uniform(10 ** 4, 500, seed=1).values
    space = binary_space(4, small_table)
    np.testing.assert_array_equal(encode_states(values, space), psi_states(values, 4, small_table))


def test_encode_states_mixed(small_table):
    space = mixed_space(2, 1, small_table)
    # 1: gamma 0; 2: gamma 1; 12: gamma 2 and 3 | 12; 6: gamma 1 and 3 | 6
    assert encode_states(np.array([1, 2, 12, 6]), space).tolist() == [0, 2, 5, 3]


# ── measures and divergence ─────────────────────────────

def test_kl_examples(small_table):
    space = binary_space(1, small_table)
    assert kl_divergence(reference(space)) == 0.0
    assert kl_divergence(point_mass(space, 1)) == pytest.approx(math.log(2.0), rel=1e-15)


@given(st.lists(st.floats(0.0, 1.0), min_size=8, max_size=8))
@settings(max_examples=1000, deadline=None)
def test_kl_nonnegative(small_table, raw):
    w = np.asarray(raw)
    assume(w.sum() > 1e-6)
    space = binary_space(3, small_table)
    mu = TruncatedMeasure(space, w / w.sum(), reference_measure(space))
    assert kl_divergence(mu) >= 0.0


def test_measure_validation(small_table):
    space = binary_space(2, small_table)
    nu = reference_measure(space)
    with pytest.raises(DomainError):
        TruncatedMeasure(space, np.array([0.5, 0.5, 0.5, -0.5]), nu)
    with pytest.raises(DomainError):
        TruncatedMeasure(space, np.array([0.5, 0.5, 0.5, 0.5]), nu)
    with pytest.raises(DomainError):
        TruncatedMeasure(space, np.ones(3) / 3, nu)


def test_empirical_measure(small_table):
    space = binary_space(3, small_table)
    same = empirical_measure(np.array([5, 5, 5]), space)
    np.testing.assert_array_equal(same.weights, point_mass(space, 5).weights)
    with pytest.raises(DomainError):
        empirical_measure(np.array([], dtype=np.int64), space)


def test_empirical_measure_of_product_law_is_close(small_table):
    space = binary_space(3, small_table)
    digits = sample_nu(3, 100_000, seed=12, table=small_table)
    from_rows = empirical_measure(digits, space)
    from_states = empirical_measure(pack_digits(digits), space)
    np.testing.assert_array_equal(from_rows.weights, from_states.weights)
    assert kl_divergence(from_rows) < 0.01


def test_functional_of_empirical_is_pair_fraction(small_table):
    values = sample_uniform(1000, 400, seed=2).values.tolist()
    space = binary_space(3, small_table)
    mu = empirical_measure(psi_states(np.array(values), 3, small_table), space)
    hits = sum(math.gcd(math.gcd(a, b), 30) == 1 for a in values for b in values)
    assert quadratic_functional(mu) == pytest.approx(hits / 400 ** 2, abs=1e-12)


# ── rate function ───────────────────────────────────────

def test_rate_zero_at_reference_level(small_table):
    for k in (1, 3, 5):
        space = binary_space(k, small_table)
        point = rate_function_point(reference_level(space), space, FAST)
        assert point.rate < 1e-8
        assert point.lam == 0.0


@pytest.mark.parametrize("x", [0.3, 0.5, 0.75, 0.9, 0.98])
def test_single_prime_closed_form(small_table, x):
    point = rate_function_point(x, binary_space(1, small_table), FAST)
    assert point.rate == pytest.approx(_k1_rate(x), abs=1e-6)


def test_single_prime_curve(small_table):
    space = binary_space(1, small_table)
    grid = np.linspace(0.3, 0.98, 21)
    curve = rate_curve(space, grid, FAST)
    assert len(curve.grid) == 21
    for rec in curve.grid:
        assert rec.rate == pytest.approx(_k1_rate(rec.x), abs=1e-6)


def test_top_level_closed_form(small_table):
    for k in range(1, 7):
        space = binary_space(k, small_table)
        primes = space.tail_primes
        point = rate_function_point(1.0, space)
        assert point.rate == pytest.approx(sum(math.log(p / (p - 1)) for p in primes), abs=1e-6)
        assert point.lam == math.inf


def test_zero_level_is_star_at_two(small_table):
    space = binary_space(4, small_table)
    point = rate_function_point(0.0, space)
    assert point.rate == pytest.approx(math.log(2.0), abs=1e-12)
    assert quadratic_functional(point.measure) == pytest.approx(0.0, abs=1e-15)


def _two_prime_oracle(x):
    """Minimum KL over (mu1, mu2) on a fine grid, mu3 and mu0 solved from F = x."""
    nu = np.array([1 / 3, 1 / 3, 1 / 6, 1 / 6])

    def evaluate(a, b):
        A, B = np.meshgrid(a, b, indexing="ij")
        s = np.sqrt(1.0 - x + 2.0 * A * B)
        mu3 = s - A - B
        mu0 = 1.0 - s
        ok = (mu3 >= 0) & (mu0 >= 0)
        kl = rel_entr(mu0, nu[0]) + rel_entr(A, nu[1]) + rel_entr(B, nu[2]) + rel_entr(np.clip(mu3, 0, None), nu[3])
        kl = np.where(ok, kl, np.inf)
        i, j = np.unravel_index(np.argmin(kl), kl.shape)
        return kl[i, j], A[i, j], B[i, j]

    coarse = np.arange(0.0, 1.0 + 1e-12, 0.002)
    _, a0, b0 = evaluate(coarse, coarse)
    fine_a = np.clip(np.arange(a0 - 0.004, a0 + 0.004, 0.0001), 0.0, 1.0)
    fine_b = np.clip(np.arange(b0 - 0.004, b0 + 0.004, 0.0001), 0.0, 1.0)
    best, _, _ = evaluate(fine_a, fine_b)
    return float(best)


@pytest.mark.parametrize("x", [0.5, 0.8, 0.9])
def test_two_primes_against_grid_oracle(small_table, x):
    point = rate_function_point(x, binary_space(2, small_table))
    assert abs(point.rate - _two_prime_oracle(x)) < 1e-4


def test_rate_bounds_hand_built_measure(small_table):
    space = binary_space(2, small_table)
    hand = TruncatedMeasure(space, np.array([0.5, 0.1, 0.2, 0.2]), reference_measure(space))
    x = quadratic_functional(hand)
    assert x == pytest.approx(0.79, abs=1e-12)
    assert rate_function_point(x, space).rate <= kl_divergence(hand) + 1e-9


def test_solution_is_stationary(small_table):
    space = binary_space(3, small_table)
    point = rate_function_point(0.85, space, FAST)
    assert point.converged
    assert abs(quadratic_functional(point.measure) - 0.85) < 1e-8
    nu = reference_measure(space)
    g = kernel_matrix(space) @ point.measure.weights
    target = softmax(np.log(nu) + 2.0 * point.lam * g)
    assert np.max(np.abs(target - point.measure.weights)) < 1e-8


def test_four_prime_curve_shape(small_table):
    space = binary_space(4, small_table)
    f_nu = reference_level(space)
    grid = [0.2, 0.35, 0.5, f_nu, 0.75, 0.9]
    rates = [rec.rate for rec in rate_curve(space, grid, FAST).grid]
    assert rates[3] == 0.0
    assert rates[0] >= rates[1] - 1e-6 and rates[1] >= rates[2] - 1e-6
    assert rates[4] <= rates[5] + 1e-6
    assert min(rates[0], rates[5]) > 0


def test_infeasible_levels(small_table):
    space = binary_space(3, small_table)
    for x in (1.2, -0.1, float("nan")):
        with pytest.raises(InfeasibleLevelError):
            rate_function_point(x, space)
    strict = mixed_space(2, 1, small_table, strict=True)
    assert max_level(strict) == 0.5
    with pytest.raises(InfeasibleLevelError):
        rate_function_point(0.8, strict)
    with pytest.raises(UnsupportedCombinationError):
        max_level_state(strict)


def test_mixed_top_level(small_table):
    space = mixed_space(2, 2, small_table)
    assert max_level_rate(space) == pytest.approx(math.log(7.5), rel=1e-12)
    point = rate_function_point(1.0, space)
    assert point.rate == pytest.approx(math.log(7.5), rel=1e-12)


def test_mixed_rate_between_levels(small_table):
    space = mixed_space(2, 2, small_table)
    point = rate_function_point(0.3, space, FAST)
    assert point.rate > 0
    assert abs(quadratic_functional(point.measure) - 0.3) < 1e-8


def test_mixed_zero_level_is_reached_by_the_sweep(small_table):
    # Mass on ternary digits {0, 2}: zeros kill every pair, two 2s clash.
    space = mixed_space(2, 2, small_table)
    point = rate_function_point(0.0, space, FAST)
    assert point.diagnostics["feasible_restarts"] >= 1
    assert point.diagnostics["level_error"] <= 10 * FAST.level_tol
    assert quadratic_functional(point.measure) < 1e-8
    assert point.rate == pytest.approx(math.log(4 / 3), abs=1e-4)


def test_capacity_limits(table):
    with pytest.raises(CapacityError):
        binary_space(25, table)
    with pytest.raises(CapacityError):
        mixed_space(30, 20, table, max_states=2 ** 20)
    with pytest.raises(DomainError):
        binary_space(0, table)


def test_ladder_top_level(small_table):
    ladder = rate_ladder(1.0, [2, 3, 4], small_table)
    assert [k for k, _ in ladder] == [2, 3, 4]
    expected = [sum(math.log(p / (p - 1)) for p in ps) for ps in ((2, 3), (2, 3, 5), (2, 3, 5, 7))]
    assert [p.rate for _, p in ladder] == pytest.approx(expected, abs=1e-9)


def test_curve_grid_must_increase(small_table):
    with pytest.raises(DomainError):
        rate_curve(binary_space(2, small_table), [0.5, 0.4])


def test_curve_serialization(small_table):
    curve = rate_curve(binary_space(1, small_table), [0.5, 0.75, 1.0], FAST)
    lines = rate_curve_to_csv(curve).splitlines()
    assert lines[0] == "x,rate,lambda,iterations,converged"
    assert lines[3].split(",")[2] == "inf"
    doc = rate_curve_to_json(curve)
    assert doc["space"]["kernel"] == "f"
    assert doc["solver"]["restarts"] == 3
    assert doc["grid"][1]["lambda"] == 0.0
    assert doc["grid"][2]["lambda"] == "inf"


def test_checksum_is_deterministic(small_table):
    space = binary_space(3, small_table)
    a = rate_function_point(0.5, space, FAST)
    b = rate_function_point(0.5, space, FAST)
    assert a.record() == b.record()


def test_solver_options_from_settings():
    opts = SolverOptions.from_settings({"damping": 0.3, "bogus": 1, "lambda_window": [-5, 5]}, restarts=None, tol=1e-8)
    assert opts.damping == 0.3 and opts.restarts == 8 and opts.tol == 1e-8
    assert opts.lambda_window == (-5.0, 5.0)
    with pytest.raises(DomainError):
        SolverOptions(lambda_window=(1.0, 2.0)).validate()


# ── square-free ─────────────────────────────────────────

def test_squarefree_rate(small_table):
    assert squarefree_rate(SQUAREFREE_DENSITY) == 0.0
    assert squarefree_rate(1.0) == pytest.approx(math.log(math.pi ** 2 / 6), rel=1e-12)
    space = binary_space(1, small_table)
    c = SQUAREFREE_DENSITY
    for x in (0.1, 0.5, 0.9):
        mu = TruncatedMeasure(space, np.array([1 - x, x]), np.array([1 - c, c]))
        assert squarefree_rate(x) == pytest.approx(kl_divergence(mu), rel=1e-12)
    with pytest.raises(DomainError):
        squarefree_rate(1.5)
