"""Bohr sets in Z/pZ, exact regularity testing and regular-radius search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cyclic import check_modulus, frac, torus_norm
from .errors import DefectError, InputError

GRID_FALLBACK = 10_000


@dataclass(frozen=True)
class BohrSpec:
    """Frequencies S, offsets alpha (one per frequency) and radius rho."""

    p: int
    S: tuple
    alpha: tuple
    rho: float

    def __post_init__(self):
        check_modulus(self.p)
        S = tuple(int(s) % self.p for s in self.S)
        alpha = tuple(float(frac(a)) for a in self.alpha) if self.alpha else (0.0,) * len(S)
        if len(S) != len(alpha):
            raise InputError("|S| must equal the number of offsets")
        if len(set(S)) != len(S):
            raise InputError("frequencies must be distinct")
        if not 0 < self.rho < 1:
            raise InputError(f"radius must lie in (0, 1), got {self.rho}")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def centred(cls, p, S, rho):
        return cls(p, tuple(S), (0.0,) * len(tuple(S)), rho)

    @property
    def rank(self) -> int:
        return len(self.S)

    def with_radius(self, rho: float) -> "BohrSpec":
        return BohrSpec(self.p, self.S, self.alpha, rho)


@dataclass(frozen=True)
class BohrSet:
    spec: BohrSpec
    members: np.ndarray

    def __len__(self):
        return int(self.members.size)

    def __contains__(self, x):
        i = np.searchsorted(self.members, int(x) % self.spec.p)
        return i < self.members.size and self.members[i] == int(x) % self.spec.p

    def mask(self) -> np.ndarray:
        m = np.zeros(self.spec.p, dtype=bool)
        m[self.members] = True
        return m


def bohr_distance(p: int, S, alpha) -> np.ndarray:
    """max over xi in S of ||xi x / p - alpha_xi|| for every residue x (0 if S is empty)."""
    x = np.arange(p, dtype=np.int64)
    dist = np.zeros(p)
    for xi, a in zip(S, alpha):
        dist = np.maximum(dist, torus_norm((xi * x) % p / p - a))
    return dist


def build_bohr(spec: BohrSpec) -> BohrSet:
    """Members x with ||xi x/p - alpha_xi|| < rho for every xi (strict)."""
    dist = bohr_distance(spec.p, spec.S, spec.alpha)
    return BohrSet(spec, np.flatnonzero(dist < spec.rho))


@dataclass
class RegularityReport:
    regular: bool
    worst_kappa: float
    worst_ratio: float
    size: int


def is_regular(spec: BohrSpec) -> RegularityReport:
    """Exact check of (1 - 100d|k|)|B| <= |B((1+k)rho)| <= (1 + 100d|k|)|B| for |k| <= 1/100d.

    |B(r)| is a step function of r whose jumps sit at the sorted distance
    values, so the continuum of k reduces to one-sided limits at each jump in
    range plus the two endpoints. ``worst_ratio`` is the largest value of
    | |B((1+k)rho)|/|B| - 1 | / (100 d |k|); the set is regular iff it is <= 1.
    """
    d = spec.rank
    if d < 1:
        raise InputError("regularity needs rank d >= 1")
    if not spec.rho < 0.5:
        raise InputError(f"regularity is defined for 0 < rho < 1/2, got {spec.rho}")
    rho = spec.rho
    dist = np.sort(bohr_distance(spec.p, spec.S, spec.alpha))
    n0 = int(np.searchsorted(dist, rho, side="left"))
    kmax = 1.0 / (100 * d)
    lo, hi = (1 - kmax) * rho, (1 + kmax) * rho

    def count_lt(r):
        return int(np.searchsorted(dist, r, side="left"))

    def count_le(r):
        return int(np.searchsorted(dist, r, side="right"))

    # (kappa, size) pairs at which the inequalities are tightest
    probes = [(-kmax, count_lt(lo)), (kmax, count_lt(hi))]
    for b in np.unique(dist[(dist >= lo) & (dist <= hi)]):
        k = b / rho - 1.0
        if k < 0:
            # left limit at the jump: radius b itself
            probes.append((k, count_lt(b)))
        else:
            # right limit just past the jump
            probes.append((k, count_le(b)))

    worst_ratio, worst_kappa = 0.0, 0.0
    for k, n in probes:
        dev = abs(n / n0 - 1.0) if n0 else (0.0 if n == 0 else np.inf)
        if dev == 0:
            r = 0.0
        elif k == 0:
            r = np.inf
        else:
            r = dev / (100 * d * abs(k))
        if r > worst_ratio:
            worst_ratio, worst_kappa = r, k
    regular = bool(n0 > 0 and worst_ratio <= 1.0)
    return RegularityReport(regular, float(worst_kappa), float(worst_ratio), n0)


def find_regular_radius(p: int, S, alpha, epsilon: float) -> float:
    """Some rho in [eps, 2 eps] with B_alpha(S, rho) regular.

    Tries midpoints between consecutive jumps of |B(r)| first, then a uniform
    grid of 10^4 radii.
    """
    if not (epsilon > 0 and 2 * epsilon < 0.5):
        raise InputError(f"need 0 < eps and 2 eps < 1/2, got eps={epsilon}")
    S = tuple(S)
    alpha = tuple(alpha) if alpha else (0.0,) * len(S)
    dist = bohr_distance(p, S, alpha)
    jumps = np.unique(dist[(dist > epsilon) & (dist < 2 * epsilon)])
    edges = np.concatenate([[epsilon], jumps, [2 * epsilon]])
    candidates = list((edges[:-1] + edges[1:]) / 2)
    candidates += list(np.linspace(epsilon, 2 * epsilon, GRID_FALLBACK))
    for rho in candidates:
        if is_regular(BohrSpec(p, S, alpha, float(rho))).regular:
            return float(rho)
    raise DefectError("no regular radius located")
