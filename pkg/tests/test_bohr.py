import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap4kit.bohr import BohrSpec, build_bohr, find_regular_radius, is_regular
from ap4kit.errors import InputError


def scan(p, S, alpha, rho):
    out = []
    for x in range(p):
        if all(min((xi * x / p - a) % 1, 1 - (xi * x / p - a) % 1) < rho for xi, a in zip(S, alpha)):
            out.append(x)
    return out


def test_empty_frequency_set_is_everything():
    assert len(build_bohr(BohrSpec(31, (), (), 0.2))) == 31


def test_interval_as_uncentred_bohr_set():
    N, p = 25, 101
    B = build_bohr(BohrSpec(p, (1,), ((N + 1) / (2 * p),), N / (2 * p)))
    assert list(B.members) == list(range(1, 26))


def test_centred_rank_one():
    B = build_bohr(BohrSpec.centred(101, [1], 0.1))
    assert list(B.members) == scan(101, [1], [0], 0.1)
    assert list(B.members) == list(range(0, 11)) + list(range(91, 101))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([31, 101, 211]), st.lists(st.integers(1, 210), min_size=1, max_size=3, unique=True),
       st.floats(0.01, 0.95), st.integers(0, 2 ** 31))
def test_membership_matches_rescan(p, S, rho, seed):
    S = [s % p for s in S]
    if len(set(S)) != len(S):
        return
    alpha = list(np.random.default_rng(seed).random(len(S)))
    B = build_bohr(BohrSpec(p, tuple(S), tuple(alpha), rho))
    assert list(B.members) == scan(p, S, alpha, rho)
    bigger = build_bohr(BohrSpec(p, tuple(S), tuple(alpha), min(rho * 1.05, 0.99)))
    assert set(B.members) <= set(bigger.members)
    assert 0 in build_bohr(BohrSpec.centred(p, S, rho))


@settings(max_examples=100)
@given(st.integers(1, 10 ** 4))
def test_rank_one_size_formula(k):
    p = 101
    rho = k / 10 ** 4 * 0.49 + 1e-4  # below 1/2 the set is a proper arc
    n = len(build_bohr(BohrSpec.centred(p, [1], rho)))
    assert n in (2 * math.ceil(rho * p) - 1, 2 * math.floor(rho * p) + 1)


def test_spec_validation():
    with pytest.raises(InputError):
        BohrSpec(31, (1, 32), (0, 0), 0.1)
    with pytest.raises(InputError):
        BohrSpec(31, (1,), (0, 0), 0.1)
    with pytest.raises(InputError):
        BohrSpec(31, (1,), (0,), 1.0)


def test_regular_example():
    r = is_regular(BohrSpec.centred(101, [1], 0.25))
    assert r.regular and r.worst_ratio <= 1


def test_just_below_breakpoint_is_not_regular():
    p = 101
    # breakpoints of |B(r)| for S={1}, alpha=0 are the torus norms k/p
    rho = 3 / p - 1e-9
    spec = BohrSpec.centred(p, [1], rho)
    assert len(build_bohr(spec)) == 5
    assert not is_regular(spec).regular


def test_flat_neighbourhood_is_regular():
    p = 101
    rho = 3.5 / p  # nearest breakpoints 3/p and 4/p lie outside (1 +- 1/100) rho
    r = is_regular(BohrSpec.centred(p, [1], rho))
    assert r.regular and r.worst_ratio == 0


def test_regular_rejects_large_radius():
    with pytest.raises(InputError):
        is_regular(BohrSpec.centred(101, [1], 0.5))


def brute_regular(spec, grid=4001):
    """Dense kappa sampling oracle; can only miss violations, never invent them."""
    d = spec.rank
    n0 = len(build_bohr(spec))
    km = 1 / (100 * d)
    for k in np.linspace(-km, km, grid):
        n = len(scan(spec.p, spec.S, spec.alpha, (1 + k) * spec.rho))
        if not ((1 - 100 * d * abs(k)) * n0 - 1e-9 <= n <= (1 + 100 * d * abs(k)) * n0 + 1e-9):
            return False
    return True


@pytest.mark.parametrize("rho", [0.05, 0.0501, 0.1234, 0.2, 0.3, 3 / 101 - 1e-9, 0.0397])
def test_regularity_agrees_with_sampling_where_sampling_finds_violations(rho):
    spec = BohrSpec.centred(101, [1], rho)
    if not brute_regular(spec, grid=801):
        assert not is_regular(spec).regular


def test_find_regular_radius_examples():
    rho = find_regular_radius(101, [1], [0.0], 0.1)
    assert 0.1 <= rho <= 0.2
    assert is_regular(BohrSpec.centred(101, [1], rho)).regular
    assert find_regular_radius(101, [1], [0.0], 0.1) == rho
    S = list(np.random.default_rng(7).choice(np.arange(1, 1009), 2, replace=False))
    rho2 = find_regular_radius(1009, S, [0.0, 0.0], 0.05)
    assert 0.05 <= rho2 <= 0.1
    assert is_regular(BohrSpec.centred(1009, S, rho2)).regular


def test_find_regular_radius_bad_epsilon():
    with pytest.raises(InputError):
        find_regular_radius(101, [1], [0.0], 0.3)
