"""Arithmetic on Z/pZ: dense functions, averages, norms and the embedding of [N].

Functions on Z/pZ are stored as length-p complex numpy arrays indexed by
residue. All sums run in index-ascending order so results are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config import BOUNDED_TOL
from .errors import DefectError, InputError


def is_prime(n: int) -> bool:
    """Deterministic trial division."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    for d in range(3, r + 1, 2):
        if n % d == 0:
            return False
    return True


def check_modulus(p: int) -> int:
    p = int(p)
    if p < 5 or not is_prime(p):
        raise InputError(f"modulus must be a prime >= 5, got {p}")
    return p


def find_prime(N: int) -> int:
    """Smallest prime p with 4N < p <= 8N (exists by Bertrand's postulate)."""
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")
    for p in range(4 * N + 1, 8 * N + 1):
        if is_prime(p):
            return p
    raise DefectError(f"no prime found in ({4 * N}, {8 * N}]")


def frac(t):
    """Canonical representative of t modulo 1, in [0, 1).

    The only place where reductions mod 1 happen.
    """
    t = np.asarray(t, dtype=float)
    r = t - np.floor(t)
    # t - floor(t) can round up to exactly 1.0 for tiny negative t
    r = np.where(r >= 1.0, 0.0, r)
    return r if r.ndim else float(r)


def signed_frac(t):
    """Signed distance from t to the nearest integer, in (-1/2, 1/2]."""
    r = frac(t)
    r = np.where(np.asarray(r) > 0.5, np.asarray(r) - 1.0, r)
    return r if np.ndim(r) else float(r)


def torus_norm(t):
    """Distance from t to the nearest integer, ||t||_{R/Z} in [0, 1/2]."""
    r = frac(t)
    out = np.minimum(r, 1.0 - r)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class CyclicFunction:
    """A complex-valued function on Z/pZ.

    ``values[x]`` is f(x). Instances are immutable; the underlying array is
    flagged read-only.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 1:
            raise InputError("values must be a non-empty 1-d array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, p: int, fn) -> "CyclicFunction":
        x = np.arange(p)
        return cls(np.asarray(fn(x), dtype=complex) * np.ones(p))

    @classmethod
    def constant(cls, p: int, c: complex = 1.0) -> "CyclicFunction":
        return cls(np.full(p, c, dtype=complex))

    @classmethod
    def indicator(cls, p: int, members: Iterable[int]) -> "CyclicFunction":
        v = np.zeros(p, dtype=complex)
        idx = np.asarray(list(members), dtype=np.int64)
        if idx.size:
            v[idx % p] = 1.0
        return cls(v)

    @property
    def p(self) -> int:
        return self.values.size

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_one_bounded(self, tol: float = BOUNDED_TOL) -> bool:
        return self.max_abs() <= 1.0 + tol

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.values.imag) <= tol))

    def conj(self) -> "CyclicFunction":
        return CyclicFunction(np.conj(self.values))

    def shift(self, a: int) -> "CyclicFunction":
        """x -> f(x + a)."""
        return CyclicFunction(np.roll(self.values, -int(a)))

    def _coerce(self, other):
        if isinstance(other, CyclicFunction):
            if other.p != self.p:
                raise InputError(f"modulus mismatch: {self.p} vs {other.p}")
            return other.values
        return other

    def __add__(self, other):
        return CyclicFunction(self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return CyclicFunction(self.values - self._coerce(other))

    def __rsub__(self, other):
        return CyclicFunction(self._coerce(other) - self.values)

    def __mul__(self, other):
        return CyclicFunction(self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return CyclicFunction(self.values / self._coerce(other))

    def __neg__(self):
        return CyclicFunction(-self.values)

    def __len__(self):
        return self.p


def as_values(f) -> np.ndarray:
    if isinstance(f, CyclicFunction):
        return f.values
    return np.asarray(f, dtype=complex)


def _domain_index(p: int, domain) -> np.ndarray:
    if domain is None:
        return np.arange(p)
    idx = np.asarray(sorted(set(int(x) % p for x in np.asarray(domain).ravel())), dtype=np.int64)
    if idx.size == 0:
        raise InputError("expectation over an empty domain")
    return idx


def expectation(f, domain=None) -> complex:
    """Average of f over ``domain`` (all of Z/pZ when omitted)."""
    v = as_values(f)
    idx = _domain_index(v.size, domain)
    return complex(np.sum(v[idx]) / idx.size)


def lp_norm(f, domain=None, exponent: float = 2.0) -> float:
    """Normalised L^q norm (E|f|^q)^(1/q); ``exponent=np.inf`` gives the max."""
    if not exponent >= 1:
        raise InputError(f"exponent must be >= 1, got {exponent}")
    v = as_values(f)
    a = np.abs(v[_domain_index(v.size, domain)])
    if math.isinf(exponent):
        return float(np.max(a))
    return float(np.mean(a ** exponent) ** (1.0 / exponent))


@dataclass(frozen=True)
class IntervalEmbedding:
    """The interval [N] = {1, ..., N} placed inside Z/pZ with 4N < p."""

    N: int
    p: int

    def __post_init__(self):
        check_modulus(self.p)
        if self.N < 1:
            raise InputError(f"N must be >= 1, got {self.N}")
        if 4 * self.N >= self.p:
            raise InputError(f"need N < p/4, got N={self.N}, p={self.p}")

    @classmethod
    def for_N(cls, N: int) -> "IntervalEmbedding":
        return cls(N, find_prime(N))

    @property
    def interval(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def interval_mask(self) -> np.ndarray:
        m = np.zeros(self.p, dtype=bool)
        m[1:self.N + 1] = True
        return m

    def interval_indicator(self) -> CyclicFunction:
        return CyclicFunction(self.interval_mask().astype(complex))


def embed_set(A: Iterable[int], emb: IntervalEmbedding) -> CyclicFunction:
    """Indicator of A subset of [N] as a function on Z/pZ."""
    A = sorted(set(int(a) for a in A))
    bad = [a for a in A if a < 1 or a > emb.N]
    if bad:
        raise InputError(f"element {bad[0]} outside [1, {emb.N}]")
    return CyclicFunction.indicator(emb.p, A)


def count_ap4_integers(A: Iterable[int]) -> int:
    """Number of (x, h) with h >= 1 and x, x+h, x+2h, x+3h all in A."""
    s = set(int(a) for a in A)
    if not s:
        return 0
    lo, hi = min(s), max(s)
    count = 0
    for x in sorted(s):
        for h in range(1, (hi - x) // 3 + 1):
            if x + h in s and x + 2 * h in s and x + 3 * h in s:
                count += 1
    return count


def is_ap4_free(A: Iterable[int]) -> bool:
    return count_ap4_integers(A) == 0


def greedy_ap4_free(N: int, start: int = 1) -> list[int]:
    """Greedy subset of [start, N] avoiding non-trivial 4-term progressions."""
    chosen: list[int] = []
    s: set[int] = set()
    for n in range(start, N + 1):
        ok = True
        # n as the last term of x, x+h, x+2h, n
        for h in range(1, (n - start) // 3 + 1):
            if n - h in s and n - 2 * h in s and n - 3 * h in s:
                ok = False
                break
        if ok:
            chosen.append(n)
            s.add(n)
    return chosen
