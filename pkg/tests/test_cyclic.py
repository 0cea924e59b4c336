import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap4kit.cyclic import (CyclicFunction, IntervalEmbedding, count_ap4_integers, embed_set,
                           expectation, find_prime, frac, greedy_ap4_free, is_ap4_free, is_prime,
                           lp_norm, signed_frac, torus_norm)
from ap4kit.errors import InputError

from conftest import brute_increasing_ap4, is_prime_slow, random_bounded


@pytest.mark.parametrize("N,p", [(25, 101), (1, 5), (3, 13)])
def test_find_prime_examples(N, p):
    assert find_prime(N) == p


@pytest.mark.parametrize("N", range(1, 120))
def test_find_prime_is_smallest_in_window(N):
    expected = next(q for q in range(4 * N + 1, 8 * N + 1) if is_prime_slow(q))
    assert find_prime(N) == expected


def test_is_prime_matches_slow_check():
    assert [n for n in range(200) if is_prime(n)] == [n for n in range(200) if is_prime_slow(n)]


def test_modulus_validation():
    with pytest.raises(InputError):
        IntervalEmbedding(2, 9)
    with pytest.raises(InputError):
        IntervalEmbedding(25, 97)  # 4N >= p
    IntervalEmbedding(25, 101)


@pytest.mark.parametrize("t,v", [(0.5, 0.5), (0.9, 0.1), (0.0, 0.0)])
def test_torus_norm_examples(t, v):
    assert torus_norm(t) == pytest.approx(v, abs=1e-15)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_torus_norm_symmetry_and_range(t):
    assert abs(torus_norm(t) - torus_norm(1 - t)) <= 1e-9
    assert 0 <= torus_norm(t) <= 0.5
    assert 0 <= frac(t) < 1
    assert -0.5 < signed_frac(t) <= 0.5


def test_frac_of_tiny_negative_is_canonical():
    assert frac(-1e-20) == 0.0


def test_expectation_examples():
    assert expectation(CyclicFunction.constant(7, 3 - 2j), [1, 2]) == pytest.approx(3 - 2j)
    assert expectation(CyclicFunction.indicator(11, [1, 2, 3]), range(6)) == pytest.approx(3 / 6)
    f = CyclicFunction.from_callable(5, lambda x: x / 5)
    assert expectation(f) == pytest.approx(0.4, abs=1e-15)


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1), st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_expectation_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    f, g = random_bounded(rng, 13), random_bounded(rng, 13)
    lhs = expectation(a * f + b * g)
    assert abs(lhs - (a * expectation(f) + b * expectation(g))) <= 1e-12 * (1 + abs(a) + abs(b))


def test_lp_norm_examples(rng):
    assert lp_norm(np.ones(9)) == 1
    assert lp_norm(CyclicFunction.indicator(10, [1, 2, 3]), exponent=1) == pytest.approx(0.3)
    f = random_bounded(rng, 7)
    direct = math.sqrt(sum(abs(z) ** 2 for z in f) / 7)
    assert abs(lp_norm(f) - direct) <= 1e-12
    assert lp_norm(f, exponent=np.inf) == pytest.approx(max(abs(z) for z in f))


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1))
def test_lp_norm_monotone(seed):
    f = random_bounded(np.random.default_rng(seed), 17)
    l1, l2, li = (lp_norm(f, exponent=q) for q in (1, 2, np.inf))
    assert l1 <= l2 + 1e-12 and l2 <= li + 1e-12


def test_embed_set_examples():
    f = embed_set({1, 2}, IntervalEmbedding(2, 11))
    assert list(np.flatnonzero(f.values)) == [1, 2]
    assert not np.any(embed_set([], IntervalEmbedding(2, 11)).values)
    emb = IntervalEmbedding(25, 101)
    g = embed_set(range(1, 26), emb)
    assert np.array_equal(g.values, emb.interval_indicator().values)
    assert expectation(g) == pytest.approx(25 / 101)
    with pytest.raises(InputError):
        embed_set([26], emb)


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(1, 40)))
def test_cyclic_ap4_in_interval_equals_integer_count(A):
    emb = IntervalEmbedding(40, find_prime(40))
    f = embed_set(A, emb).values.real
    p = emb.p
    # count (x, h) with h != 0 and all four points of the cyclic progression in A
    cnt = 0
    for x in np.flatnonzero(f):
        for h in range(1, p):
            if f[(x + h) % p] and f[(x + 2 * h) % p] and f[(x + 3 * h) % p]:
                cnt += 1
    assert cnt == 2 * count_ap4_integers(A)
    assert count_ap4_integers(A) == brute_increasing_ap4(A)


def test_greedy_ap4_free():
    A = greedy_ap4_free(30)
    assert is_ap4_free(A)
    assert brute_increasing_ap4(A) == 0
    assert len(A) / 30 >= 0.25


def test_cyclic_function_ops():
    f = CyclicFunction.from_callable(7, lambda x: x)
    assert f.shift(2).values[0] == 2
    assert (f * 2).values[3] == 6
    with pytest.raises(InputError):
        f + CyclicFunction.constant(5)
    with pytest.raises(ValueError):
        f.values[0] = 1
