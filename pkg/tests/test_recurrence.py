import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap4kit.errors import InputError
from ap4kit.recurrence import (Lattice, a_lambda, check_f_properties, convergent_denominators, descent_step,
                               enumerate_points, f_lattice, f_lattice_fourier, f_lower_bound_trace,
                               is_primitive, kronecker_search, max_norm_at, schmidt_alternative,
                               schmidt_search, schmidt_via_theta, stability_constant, theta, theta_dual,
                               unimodular_completion, weyl_rational_approx)

THETA_Z = sum(math.exp(-math.pi * m * m) for m in range(-10, 11))  # 1.0864348...


def tnorm(x):
    return abs(x - round(x))


def box_theta(B, t, x, box=8):
    """Direct sum over integer coordinates in a box; independent of the enumerator."""
    d = B.shape[0]
    s = 0.0
    for k in itertools.product(range(-box, box + 1), repeat=d):
        v = x - B @ np.array(k, dtype=float)
        s += math.exp(-math.pi * t * float(v @ v))
    return s


def random_lattice(rng, d):
    while True:
        B = rng.normal(size=(d, d)) + 1.5 * np.eye(d)
        if np.linalg.cond(B) < 6 and 0.5 < abs(np.linalg.det(B)) < 4:
            return Lattice(B)


def test_kronecker_examples():
    assert kronecker_search([0.5], 10) == (2, 0.0)
    g = (math.sqrt(5) - 1) / 2
    n, v = kronecker_search([g], 100)
    best = min(range(1, 101), key=lambda m: (tnorm(m * g), m))
    assert n == best and v == pytest.approx(tnorm(best * g), abs=1e-15)
    assert v <= 4 / 100


@pytest.mark.parametrize("d", [1, 2, 3])
def test_kronecker_pigeonhole_bound(d):
    alpha = np.random.default_rng(d).random(d)
    n, v = kronecker_search(alpha, 10 ** 4)
    assert v <= 4 * (10 ** 4) ** (-1 / d)
    assert v == max_norm_at(alpha, n, power=1)


def test_schmidt_examples():
    assert schmidt_search([0.25], 10) == (2, 0.0)
    alpha = np.random.default_rng(11).random(1)
    n, v = schmidt_search(alpha, 10 ** 4)
    assert v <= (10 ** 4) ** -0.25
    vals = [schmidt_search(alpha, N)[1] for N in (10, 100, 1000)]
    assert vals[0] >= vals[1] >= vals[2]
    brute = min(range(1, 1001), key=lambda m: (tnorm(m * m * float(alpha[0])), m))
    assert schmidt_search(alpha, 1000)[0] == brute


def test_theta_examples():
    Z = Lattice.integer(1)
    v = theta(Z, 1, [0.0]).value
    assert abs(v - sum(math.exp(-math.pi * m * m) for m in range(-6, 7))) < 1e-12
    assert abs(theta(Z, 1, [0.5]).value - theta(Z, 1, [-0.5]).value) < 1e-14
    L = Lattice(np.array([[1.3, 0.2], [0.1, 0.9]]))
    x = np.array([0.3, -0.7])
    assert abs(theta(L, 1, x).value - theta(L, 1, x + L.basis @ [2, -3]).value) < 1e-12
    assert abs(theta(L, 0.7, x).value - box_theta(L.basis, 0.7, x)) < 1e-12


def test_poisson_identity_on_random_lattices():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 4))
        L = random_lattice(rng, d)
        t = float(rng.choice([0.5, 1.0, 2.0]))
        x = rng.normal(size=d)
        worst = max(worst, abs(theta(L, t, x).value - theta_dual(L, t, x).value))
    assert worst <= 1e-9


def test_poisson_term_for_term_on_integer_lattice():
    Z2 = Lattice.integer(2)
    x = np.array([0.0, 0.0])
    assert abs(theta(Z2, 1, x).value - theta_dual(Z2, 1, x).value) < 1e-14
    assert theta_dual(Z2, 1, x).value >= 1.0


def test_a_lambda_examples():
    for d in (1, 2, 3):
        assert a_lambda(Lattice.integer(d)) == pytest.approx(THETA_Z ** d, abs=1e-12)
    for R in (3, 5, 7, 10):
        A = a_lambda(Lattice.integer(1, R))
        assert 0.9 * R <= A <= 1.1 * R
    rng = np.random.default_rng(5)
    for _ in range(20):
        L = random_lattice(rng, int(rng.integers(1, 4)))
        A = a_lambda(L)
        assert A >= 1
        assert abs(A - L.det * box_theta(L.basis, 1, np.zeros(L.dim))) < 1e-9


def test_dual_and_determinants():
    rng = np.random.default_rng(9)
    for _ in range(20):
        L = random_lattice(rng, int(rng.integers(1, 5)))
        assert np.max(np.abs(L.dual().dual().basis - L.basis)) < 1e-10
        assert abs(L.det * L.dual().det - 1) < 1e-10


def test_lattice_guards():
    with pytest.raises(InputError):
        Lattice(np.eye(5))
    with pytest.raises(InputError):
        Lattice(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-12]]))


def test_enumeration_is_complete():
    L = Lattice(np.array([[1.1, 0.4], [0.0, 0.8]]))
    pts = enumerate_points(L, 2.5)
    brute = [L.basis @ np.array(k) for k in itertools.product(range(-10, 11), repeat=2)]
    brute = [v for v in brute if np.linalg.norm(v) <= 2.5]
    assert len(pts) == len(brute)


def test_f_examples():
    Z1, Z2 = Lattice.integer(1), Lattice.integer(2)
    L = Lattice(np.array([[1.2, 0.3], [0.0, 1.1]]))
    assert f_lattice(L, [0.3, 0.4], 0) == pytest.approx(L.det * theta(L, 1, [0, 0]).value, abs=1e-14)
    for N in (0, 1, 7, 50):
        assert f_lattice(Z2, [0, 0], N) == pytest.approx(THETA_Z ** 2, abs=1e-12)
    alpha = [math.sqrt(2) - 1]
    direct = sum(box_theta(Z1.basis, 1, np.array([(n * n * alpha[0]) % 1])) for n in range(-20, 21)) / 41
    assert f_lattice(Z1, alpha, 20) == pytest.approx(direct, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 60), st.integers(1, 7))
def test_f_dilation_and_fourier(seed, N, q):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 3))
    L = Lattice(np.eye(d) + 0.2 * rng.random((d, d)))
    alpha = rng.random(d)
    F = f_lattice(L, alpha, N)
    Mq = N // q
    rhs = (2 * Mq + 1) / (2 * N + 1) * f_lattice(L, q * q * alpha, Mq)
    assert F >= rhs - 1e-12
    assert abs(F - f_lattice_fourier(L, alpha, N)) < 1e-12
    assert F >= L.det / (2 * N + 1) - 1e-12


def test_f_properties_examples():
    rng = np.random.default_rng(3)
    Z = Lattice.integer(1)
    alpha = rng.random(1)
    r = check_f_properties(Z, alpha, 100, 0.5, 3, 0.01)
    assert r.contraction_holds and r.dilation_holds and r.stability_holds
    assert r.stability_ratio >= r.stability_c0


def test_stability_constant_is_the_pointwise_infimum():
    for eps in (0.01, 0.1, 0.5):
        X = np.linspace(0, 5, 200001)
        ratio = np.exp(-np.pi * X ** 2) / np.exp(-np.pi * (1 + eps) ** 2 * np.maximum(0, X - eps) ** 2)
        assert stability_constant(eps) <= ratio.min() + 1e-12
        assert ratio.min() - stability_constant(eps) < 1e-8


def test_weyl_rational_approx():
    assert weyl_rational_approx(3 / 7, 100, 10) == (7, 0.0)
    q, res = weyl_rational_approx(math.sqrt(2), 100, 100)
    assert q in {1, 2, 5, 12, 29, 70}
    assert q == min(range(1, 101), key=lambda m: (tnorm(m * math.sqrt(2)), m))
    assert convergent_denominators(math.sqrt(2), 100) == [1, 2, 5, 12, 29, 70]
    for theta_ in np.random.default_rng(1).random(20):
        for qb in (5, 50, 500):
            assert weyl_rational_approx(float(theta_), 100, qb)[1] <= 1 / qb


def test_alternative_F_large():
    for d in (1, 2):
        out = schmidt_alternative(Lattice.integer(d), np.zeros(d), 50)
        assert out.branch == "F_large" and out.F_value >= 1


def test_alternative_relation_and_descent_d1():
    L = Lattice.integer(1, 5)
    alpha = [5 * 3 / 17]
    out = schmidt_alternative(L, alpha, 100)
    assert out.branch == "relation_found" and out.F_value < 0.5
    assert out.q % 17 == 0 and out.residual < 1e-9
    assert is_primitive(L, out.xi)
    step = descent_step(L, alpha, 100, out)
    assert step.lattice is None and step.F_after == 1.0
    assert step.descent_holds


def test_alternative_and_descent_d2():
    L = Lattice(np.array([[5.0, 1.0], [0.3, 5.0]]))
    alpha = L.basis @ np.array([3 / 17, 2 / 5])
    out = schmidt_alternative(L, alpha, 100)
    assert out.branch == "relation_found" and is_primitive(L, out.xi)
    step = descent_step(L, alpha, 100, out)
    assert step.lattice.dim == 1
    assert step.descent_holds and step.descent_lhs >= step.descent_rhs - 1e-10
    assert step.det_identity_error <= 1e-9


@settings(max_examples=50)
@given(st.lists(st.integers(-30, 30), min_size=1, max_size=4))
def test_unimodular_completion(c):
    g = math.gcd(*c) if len(c) > 1 else abs(c[0])
    if g != 1:
        return
    U = unimodular_completion(c)
    assert round(abs(np.linalg.det(U.astype(float)))) == 1
    assert list(np.array(c) @ U) == [0] * (len(c) - 1) + [1]


def test_trace_examples():
    lv = f_lower_bound_trace(Lattice.integer(1), [0.0], 10)
    assert [x.branch for x in lv] == ["F_large"]
    L = Lattice(np.array([[5.0, 1.0], [0.3, 5.0]]))
    lv = f_lower_bound_trace(L, L.basis @ np.array([3 / 17, 2 / 5]), 200)
    assert [x.d for x in lv] == [2, 1, 0] and lv[-1].F == 1.0
    for x in lv:
        assert x.trivial_ok and x.F >= x.trivial_bound - 1e-12
        if x.branch == "relation_found":
            assert x.descent_ok and x.identities_ok
    Z2 = Lattice.integer(2)
    lv = f_lower_bound_trace(Z2, np.random.default_rng(7).random(2), 200)
    assert all(x.trivial_ok for x in lv)
    with pytest.raises(InputError):
        f_lower_bound_trace(Lattice.integer(1, 0.5), [0.1], 10)


def test_schmidt_via_theta():
    r = schmidt_via_theta([0.25], 10, 4)
    assert r.certified and r.n == 2 and r.norms[0] == 0
    alpha = np.random.default_rng(21).random(1)
    r = schmidt_via_theta(alpha, 1000, 25)
    assert r.certified and float(r.norms.max()) <= 0.2
    assert abs(float(r.norms.max()) - tnorm(r.n * r.n * float(alpha[0]))) < 1e-12
    assert schmidt_search(alpha, 1000)[1] <= float(r.norms.max())


def test_integer_lattice_rational_alpha_is_F_large():
    # on Z^1 the squares n^2 * 3/7 land on few residues, so the average theta value stays above 1/2
    F = f_lattice(Lattice.integer(1), [3 / 7], 100)
    direct = sum(box_theta(np.eye(1), 1, np.array([(n * n * 3 / 7) % 1])) for n in range(-100, 101)) / 201
    assert F == pytest.approx(direct, abs=1e-12) and F >= 0.5
    assert schmidt_alternative(Lattice.integer(1), [3 / 7], 100).branch == "F_large"
