import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap4kit.bohr import build_bohr
from ap4kit.cyclic import IntervalEmbedding
from ap4kit.errors import InputError
from ap4kit.factors import (LinearPhase, Partition, QuadraticFactor, QuadraticPhase, cond_expect, energy,
                            factor_from_phase, inner, join, linear_atom_bohr_spec, linear_factor, restrict,
                            trivial_factor, verify_local_quadratic)

from conftest import random_bounded


def random_partition(rng, p, k):
    return Partition(rng.integers(0, k, p))


def atom_sets(B):
    return {frozenset(int(x) for x in a) for a in B.atoms}


@st.composite
def partitions(draw, p=31, kmax=5):
    k = draw(st.integers(1, kmax))
    return Partition(np.array(draw(st.lists(st.integers(0, k - 1), min_size=p, max_size=p))))


def test_factor_from_phase_examples():
    p = 101
    assert factor_from_phase(LinearPhase(1), 1, p).n_atoms == 1
    B = factor_from_phase(LinearPhase(1), 4, p)
    assert B.n_atoms == 4
    assert sum(len(a) for a in B.atoms) == p
    for a in B.atoms:  # arcs: consecutive mod p
        s = sorted(int(x) for x in a)
        gaps = np.diff(s)
        assert np.sum(gaps != 1) <= 1
    assert factor_from_phase(lambda x: np.sqrt(2) + 0 * x, 5, p).n_atoms == 1


def test_factor_cells_direct_scan():
    p, K = 101, 4
    B = factor_from_phase(LinearPhase(1), K, p)
    for x in range(p):
        phi = x / p
        j = [j for j in range(K) if j / K - 1 / (2 * K) <= phi - round(phi - j / K) < j / K + 1 / (2 * K)]
        assert len(j) == 1
    # residues sharing a cell share an atom
    cells = [int(np.floor((x / p) * K + 0.5)) % K for x in range(p)]
    for x in range(p):
        for y in range(p):
            assert (B.labels[x] == B.labels[y]) == (cells[x] == cells[y])


def test_join_examples(rng):
    B = random_partition(rng, 31, 3)
    assert join(B, B) == B
    assert join(B, Partition.whole(31)) == B
    C = random_partition(rng, 31, 3)
    J = join(B, C)
    assert J.n_atoms <= 9
    expected = {a & b for a in atom_sets(B) for b in atom_sets(C)} - {frozenset()}
    assert atom_sets(J) == expected


@settings(max_examples=40, deadline=None)
@given(partitions(), partitions(), partitions())
def test_join_algebra(A, B, C):
    assert join(A, B) == join(B, A)
    assert join(join(A, B), C) == join(A, join(B, C))
    assert join(A, B).n_atoms <= A.n_atoms * B.n_atoms
    assert join(A, B).refines(A)


def test_join_ground_mismatch():
    with pytest.raises(InputError):
        join(Partition.whole(11), Partition.whole(11, [1, 2]))


def test_restrict(rng):
    B = random_partition(rng, 31, 4)
    assert restrict(B, range(31)) == B
    a = B.atoms[0]
    assert restrict(B, a).n_atoms == 1
    W = rng.choice(31, 15, replace=False)
    R = restrict(B, W)
    seen = np.concatenate(R.atoms)
    assert sorted(seen) == sorted(W)
    for t in R.atoms:
        assert len(set(B.labels[t])) == 1
    with pytest.raises(InputError):
        restrict(B, [])


def test_cond_expect_examples(rng):
    f = random_bounded(rng, 11)
    assert np.allclose(cond_expect(f, Partition.singletons(11)).values, f)
    assert np.allclose(cond_expect(f, Partition.whole(11)).values, f.mean())
    lab = np.array([0] * 4 + [1] * 7)
    g = (lab == 0).astype(float)
    assert np.allclose(cond_expect(g, Partition(lab)).values, g)


@settings(max_examples=40, deadline=None)
@given(partitions(), partitions(), st.integers(0, 2 ** 32 - 1))
def test_cond_expect_properties(B, C, seed):
    rng = np.random.default_rng(seed)
    f, g = random_bounded(rng, 31), random_bounded(rng, 31)
    Ef = cond_expect(f, B).values
    assert np.allclose(cond_expect(Ef, B).values, Ef, atol=1e-14)
    assert abs(Ef.mean() - f.mean()) < 1e-12
    assert abs(inner(Ef, g) - inner(f, cond_expect(g, B))) < 1e-10
    fine = join(B, C)
    e0, e1 = energy(f, B), energy(f, fine)
    assert e0 <= e1 + 1e-12
    diff = cond_expect(f, fine).values - Ef
    assert abs((e1 - e0) - np.mean(np.abs(diff) ** 2)) < 1e-10
    assert 0 <= e1 <= np.mean(np.abs(f) ** 2) + 1e-12


def test_energy_examples(rng):
    f = rng.random(13)
    assert energy(f, Partition.whole(13)) == pytest.approx(f.mean() ** 2)
    assert energy(f, Partition.singletons(13)) == pytest.approx(np.mean(f ** 2))


def test_trivial_factor():
    emb = IntervalEmbedding(2, 11)
    T = trivial_factor(emb)
    assert atom_sets(T) == {frozenset({1, 2}), frozenset(set(range(11)) - {1, 2})}
    emb = IntervalEmbedding(20, 83)
    A = [1, 4, 5, 9, 17]
    f = np.zeros(83)
    f[A] = 1
    E = cond_expect(f, trivial_factor(emb)).values
    assert np.allclose(E[1:21], len(A) / 20) and np.allclose(E[21:], 0) and E[0] == 0


def test_local_quadratic_examples():
    p = 101
    M = 20
    ap = QuadraticPhase(7, 3, 0.25).on_progression(1, 1, M, p)
    assert verify_local_quadratic(ap.values(p), ap.elements(), 10 ** 6, p).holds
    for xi, a in [(5, 0.3), (17, 0.71)]:
        r = verify_local_quadratic(LinearPhase(xi, a), np.arange(30), 10 ** 6, p)
        assert r.holds and r.exhaustive and r.witnesses_checked > 0
    cube = np.full(p, np.nan)
    n = np.arange(1, M + 1)
    cube[n] = (0.123 * n ** 3) % 1
    r = verify_local_quadratic(cube, n, 10 ** 6, p)
    assert not r.holds and r.counterexample is not None
    x, h1, h2, h3 = r.counterexample
    pts = [x, x + h1 + h2 + h3]
    assert all(1 <= q <= M for q in pts)


def test_local_quadratic_sampled_mode():
    r = verify_local_quadratic(QuadraticPhase(3, 1), np.arange(101), 5000, 101, seed=3)
    assert r.holds and not r.exhaustive


def test_quadratic_phase_on_progression():
    p = 101
    ph = QuadraticPhase(7, 3, 0.25)
    ap = ph.on_progression(10, 13, 7, p)
    v = ph.values(p)
    for n in range(1, 8):
        x = (10 + (n - 1) * 13) % p
        assert abs(((ap.at(n) - v[x] + 0.5) % 1) - 0.5) < 1e-9


def test_linear_factor_examples():
    p = 101
    assert linear_factor([], 3, p).n_atoms == 1
    assert linear_factor([LinearPhase(1)], 4, p) == factor_from_phase(LinearPhase(1), 4, p)
    phases = [LinearPhase(5, 0.137), LinearPhase(23, 0.61)]
    B = linear_factor(phases, 3, p)
    assert B.n_atoms <= 9
    for a in B.atoms:
        spec = linear_atom_bohr_spec(phases, 3, p, int(a[0]))
        assert spec.rank <= 2 and spec.rho == pytest.approx(1 / 6)
        assert set(build_bohr(spec).members) == set(int(x) for x in a)


def test_quadratic_factor_bookkeeping():
    p = 101
    F = QuadraticFactor(p, 3, [LinearPhase(5)], [(QuadraticPhase(2, 1), None)])
    assert F.check() and F.d1 == 1 and F.d2 == 1
    G = F.extend(QuadraticFactor(p, 3, [LinearPhase(9)], [(QuadraticPhase(4, 0), None)]))
    assert G.d1 == 2 and G.d2 == 2 and G.B2.refines(F.B2) and G.check()
