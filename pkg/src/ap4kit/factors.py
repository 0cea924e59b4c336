"""Factors (finite sigma-algebras) on subsets of Z/pZ, stored as atom partitions.

A factor is kept as a label array over Z/pZ: ``labels[x]`` is the atom index
of x, or -1 when x is outside the ground set. Atoms are numbered in order of
their smallest residue, so two partitions are equal iff their label arrays are.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bohr import BohrSpec
from .config import INEQUALITY_TOL
from .cyclic import CyclicFunction, IntervalEmbedding, as_values, frac, torus_norm
from .errors import InputError


def _canonical(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.full(labels.shape, -1, dtype=np.int64)
    inside = labels >= 0
    if not inside.any():
        return out
    uniq, first, inv = np.unique(labels[inside], return_index=True, return_inverse=True)
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(uniq.size)
    out[inside] = rank[inv]
    return out


class Partition:
    """A partition of a ground set W subset of Z/pZ into non-empty atoms."""

    def __init__(self, labels):
        lab = _canonical(labels)
        lab.setflags(write=False)
        self.labels = lab

    @classmethod
    def from_atoms(cls, p: int, atoms: Sequence) -> "Partition":
        lab = np.full(p, -1, dtype=np.int64)
        for i, a in enumerate(atoms):
            a = np.asarray(a, dtype=np.int64) % p
            if a.size == 0:
                continue
            if np.any(lab[a] >= 0):
                raise InputError("atoms overlap")
            lab[a] = i
        return cls(lab)

    @classmethod
    def whole(cls, p: int, ground=None) -> "Partition":
        lab = np.full(p, -1 if ground is not None else 0, dtype=np.int64)
        if ground is not None:
            lab[np.asarray(ground, dtype=np.int64) % p] = 0
        return cls(lab)

    @classmethod
    def singletons(cls, p: int) -> "Partition":
        return cls(np.arange(p))

    @property
    def p(self) -> int:
        return self.labels.size

    @property
    def ground(self) -> np.ndarray:
        return np.flatnonzero(self.labels >= 0)

    @property
    def is_full(self) -> bool:
        return bool(np.all(self.labels >= 0))

    @property
    def n_atoms(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.max() >= 0 else 0

    @property
    def atoms(self) -> list:
        order = np.argsort(self.labels, kind="stable")
        lab = self.labels[order]
        start = np.searchsorted(lab, 0)
        bounds = np.searchsorted(lab[start:], np.arange(1, self.n_atoms))
        return [np.sort(a) for a in np.split(order[start:], bounds)]

    def atom_of(self, x: int) -> np.ndarray:
        i = self.labels[int(x) % self.p]
        if i < 0:
            raise InputError(f"{x} is not in the ground set")
        return np.flatnonzero(self.labels == i)

    def refines(self, other: "Partition") -> bool:
        """True if every atom of self lies inside an atom of ``other``."""
        if not np.array_equal(self.labels >= 0, other.labels >= 0):
            return False
        g = self.labels >= 0
        pairs = np.unique(np.stack([self.labels[g], other.labels[g]]), axis=1)
        return pairs.shape[1] == self.n_atoms

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition(p={self.p}, ground={self.ground.size}, atoms={self.n_atoms})"


def cell_index(values, K: int) -> np.ndarray:
    """Index j of the half-open cell [j/K - 1/2K, j/K + 1/2K) containing each value mod 1."""
    return (np.floor(frac(values) * K + 0.5).astype(np.int64)) % K


def phase_array(phase, p: int) -> np.ndarray:
    """Values of a phase on Z/pZ as a float array (nan where undefined)."""
    if callable(phase) and not isinstance(phase, np.ndarray):
        return np.asarray(phase(np.arange(p)), dtype=float) * np.ones(p)
    if hasattr(phase, "values") and callable(phase.values):
        return phase.values(p)
    v = np.asarray(phase, dtype=float)
    if v.shape != (p,):
        raise InputError(f"phase array must have length {p}")
    return v


def factor_from_phase(phase, K: int, p: int, carrier=None) -> Partition:
    """Level-set factor of ``phase`` at resolution K on ``carrier`` (default all of Z/pZ)."""
    if K < 1:
        raise InputError(f"resolution K must be >= 1, got {K}")
    v = phase_array(phase, p)
    lab = np.full(p, -1, dtype=np.int64)
    idx = np.arange(p) if carrier is None else np.unique(np.asarray(carrier, dtype=np.int64) % p)
    lab[idx] = cell_index(v[idx], K)
    return Partition(lab)


def join(B: Partition, Bp: Partition) -> Partition:
    """Smallest common refinement."""
    if B.p != Bp.p or not np.array_equal(B.labels >= 0, Bp.labels >= 0):
        raise InputError("join: ground sets differ")
    lab = np.where(B.labels >= 0, B.labels * (Bp.n_atoms + 1) + Bp.labels, -1)
    return Partition(lab)


def join_all(p: int, parts, ground=None) -> Partition:
    out = Partition.whole(p, ground)
    for b in parts:
        out = join(out, b)
    return out


def restrict(B: Partition, subset) -> Partition:
    idx = np.unique(np.asarray(subset, dtype=np.int64) % B.p)
    if idx.size == 0:
        raise InputError("restriction to an empty set")
    if np.any(B.labels[idx] < 0):
        raise InputError("restriction set is not inside the ground set")
    lab = np.full(B.p, -1, dtype=np.int64)
    lab[idx] = B.labels[idx]
    return Partition(lab)


def _atom_means(v: np.ndarray, B: Partition) -> np.ndarray:
    n = B.n_atoms
    counts = np.bincount(B.labels, minlength=n)
    re = np.bincount(B.labels, weights=v.real, minlength=n)
    im = np.bincount(B.labels, weights=v.imag, minlength=n)
    return (re + 1j * im) / counts


def cond_expect(f, B: Partition) -> CyclicFunction:
    """E(f|B): replace f on each atom by its average there."""
    if not B.is_full:
        raise InputError("conditional expectation needs a partition of all of Z/pZ")
    v = as_values(f)
    if v.size != B.p:
        raise InputError("modulus mismatch")
    return CyclicFunction(_atom_means(v, B)[B.labels])


def energy(f, B: Partition) -> float:
    """||E(f|B)||_{L^2}^2."""
    return float(np.mean(np.abs(cond_expect(f, B).values) ** 2))


def trivial_factor(emb: IntervalEmbedding) -> Partition:
    """Two atoms: [N] and its complement."""
    return Partition(emb.interval_mask().astype(np.int64))


def inner(g1, g2) -> complex:
    """<g1, g2> = E g1 conj(g2)."""
    return complex(np.mean(as_values(g1) * np.conj(as_values(g2))))


# ---------------------------------------------------------------------------
# phases


@dataclass(frozen=True)
class LinearPhase:
    """phi(x) = xi x / p + alpha."""

    xi: int
    alpha: float = 0.0

    def values(self, p: int) -> np.ndarray:
        x = np.arange(p, dtype=np.int64)
        return (self.xi % p) * x % p / p + self.alpha

    def bohr_offset(self, cell: int, K: int) -> float:
        """Offset a with {x : ||xi x/p - a|| < 1/2K} the Bohr set behind cell j."""
        return float(frac(cell / K - self.alpha))


@dataclass(frozen=True)
class QuadraticPhase:
    """Global quadratic phase phi(x) = (a x^2 + b x)/p + c on Z/pZ."""

    a: int
    b: int
    c: float = 0.0

    def values(self, p: int) -> np.ndarray:
        x = np.arange(p, dtype=np.int64)
        return ((self.a * x % p) * x + self.b * x) % p / p + self.c

    def on_progression(self, start: int, step: int, length: int, p: int) -> "QuadraticPhaseOnAP":
        """Rewrite along start + (n-1) step as alpha n^2 + beta n + gamma, n = 1..length."""
        u = (start - step) % p
        a, b, r = self.a % p, self.b % p, step % p
        alpha = (a * r * r) % p / p
        beta = ((2 * a * u * r + b * r)) % p / p
        gamma = float(frac((a * u * u + b * u) % p / p + self.c))
        return QuadraticPhaseOnAP(start % p, step % p, length, alpha, beta, gamma, p)

    def describe(self) -> str:
        return f"(({self.a} x^2 + {self.b} x)/p + {self.c:.12g})"


@dataclass(frozen=True)
class QuadraticPhaseOnAP:
    """phi(start + (n-1) step) = a n^2 + b n + c (mod 1) for n = 1..length."""

    start: int
    step: int
    length: int
    a: float
    b: float
    c: float
    p: int

    def __post_init__(self):
        if self.length < 1:
            raise InputError("progression length must be >= 1")

    def positions(self) -> np.ndarray:
        return np.arange(1, self.length + 1)

    def elements(self) -> np.ndarray:
        n = np.arange(self.length, dtype=np.int64)
        return (self.start + n * self.step) % self.p

    def at(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return self.a * n * n + self.b * n + self.c

    def values(self, p: int) -> np.ndarray:
        out = np.full(p, np.nan)
        out[self.elements()] = self.at(self.positions())
        return out


# ---------------------------------------------------------------------------
# linear and quadratic factors


def linear_factor(phases: Sequence[LinearPhase], K: int, p: int) -> Partition:
    """Join of the level-set factors of the given linear phases (one atom if empty)."""
    return join_all(p, [factor_from_phase(ph, K, p) for ph in phases])


def linear_atom_bohr_spec(phases: Sequence[LinearPhase], K: int, p: int, x: int) -> BohrSpec:
    """The uncentred Bohr set B_alpha(S, 1/2K) whose trace is the atom containing x."""
    S, alpha = [], []
    for ph in phases:
        j = int(cell_index(ph.values(p)[int(x) % p], K))
        S.append(ph.xi % p)
        alpha.append(ph.bohr_offset(j, K))
    return BohrSpec(p, tuple(S), tuple(alpha), 1.0 / (2 * K))


@dataclass
class QuadraticFactor:
    """A pair (B1, B2): B1 linear, B2 refining B1 by quadratic level sets.

    ``quadratic_phases`` holds (phase, support) pairs; ``support`` is a boolean
    mask over Z/pZ that is a union of B1 atoms (None means all of Z/pZ). On a
    B1 atom, B2 is cut by the cells of every phase whose support contains it.
    """

    p: int
    K: int
    linear_phases: tuple = ()
    quadratic_phases: tuple = ()
    B1: Partition = field(init=False)
    B2: Partition = field(init=False)

    def __post_init__(self):
        self.linear_phases = tuple(self.linear_phases)
        self.quadratic_phases = tuple(
            (ph, None if sup is None else np.asarray(sup, dtype=bool)) for ph, sup in self.quadratic_phases)
        self.B1 = linear_factor(self.linear_phases, self.K, self.p)
        B2 = self.B1
        for ph, sup in self.quadratic_phases:
            lab = cell_index(phase_array(ph, self.p), self.K)
            if sup is not None:
                lab = np.where(sup, lab, self.K)
            B2 = join(B2, Partition(lab))
        self.B2 = B2

    @property
    def d1(self) -> int:
        return len(self.linear_phases)

    @property
    def d2(self) -> int:
        if not self.quadratic_phases:
            return 0
        return max(len(self.phases_for_atom(a)) for a in self.B1.atoms)

    def phases_for_atom(self, atom) -> list:
        x = int(np.asarray(atom).ravel()[0])
        return [ph for ph, sup in self.quadratic_phases if sup is None or sup[x]]

    def extend(self, other: "QuadraticFactor") -> "QuadraticFactor":
        """Common extension (B1 v B1', B2 v B2'); complexities add."""
        if other.p != self.p:
            raise InputError("modulus mismatch")
        return QuadraticFactor(self.p, self.K, self.linear_phases + other.linear_phases,
                               self.quadratic_phases + other.quadratic_phases)

    def with_trivial(self, emb: IntervalEmbedding) -> Partition:
        return join(self.B2, trivial_factor(emb))

    def check(self) -> bool:
        """B2 refines B1 and every B1 atom sees at most d2 phases."""
        return self.B2.refines(self.B1) and all(
            len(self.phases_for_atom(a)) <= self.d2 for a in self.B1.atoms)


# ---------------------------------------------------------------------------
# locally quadratic verification


@dataclass
class LocalQuadraticReport:
    holds: bool
    witnesses_checked: int
    exhaustive: bool
    counterexample: tuple | None = None
    max_residual: float = 0.0


def verify_local_quadratic(phase, B, budget: int, p: int, seed: int = 0,
                           tol: float = INEQUALITY_TOL) -> LocalQuadraticReport:
    """Check the eight-point alternating identity on every cube inside B.

    A cube is (x, h1, h2, h3) with all eight points x + sum of a subset of the
    h's in B. Candidates are enumerated as x plus three further points of B;
    exhaustive when |B|^4 <= budget, otherwise ``budget`` seeded samples.
    """
    if budget < 1:
        raise InputError("budget must be >= 1")
    v = phase_array(phase, p)
    Bidx = np.unique(np.asarray(B, dtype=np.int64) % p)
    inB = np.zeros(p, dtype=bool)
    inB[Bidx] = True
    n = Bidx.size
    exhaustive = n ** 4 <= budget
    if exhaustive:
        grids = np.meshgrid(Bidx, Bidx, Bidx, Bidx, indexing="ij")
        x, y1, y2, y3 = (g.ravel() for g in grids)
    else:
        rng = np.random.default_rng(seed)
        x, y1, y2, y3 = (Bidx[rng.integers(0, n, budget)] for _ in range(4))
    h1, h2, h3 = (y1 - x) % p, (y2 - x) % p, (y3 - x) % p
    pts = {
        "0": x, "1": y1, "2": y2, "3": y3,
        "12": (x + h1 + h2) % p, "23": (x + h2 + h3) % p, "13": (x + h1 + h3) % p,
        "123": (x + h1 + h2 + h3) % p,
    }
    ok = inB[pts["12"]] & inB[pts["23"]] & inB[pts["13"]] & inB[pts["123"]]
    alt = (v[pts["123"]] - v[pts["12"]] - v[pts["23"]] - v[pts["13"]]
           + v[pts["1"]] + v[pts["2"]] + v[pts["3"]] - v[pts["0"]])
    res = torus_norm(alt[ok]) if ok.any() else np.zeros(0)
    bad = np.flatnonzero(res > tol)
    ce = None
    if bad.size:
        i = np.flatnonzero(ok)[bad[0]]
        ce = (int(x[i]), int(h1[i]), int(h2[i]), int(h3[i]))
    return LocalQuadraticReport(
        holds=bad.size == 0, witnesses_checked=int(ok.sum()), exhaustive=bool(exhaustive),
        counterexample=ce, max_residual=float(res.max()) if res.size else 0.0)


