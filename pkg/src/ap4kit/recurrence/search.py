"""Exhaustive Diophantine searches: linear and quadratic recurrence, rational approximation."""
from __future__ import annotations

import math

import numpy as np

from ..cyclic import torus_norm
from ..errors import InputError

_BLOCK = 1 << 16


def _scan(alpha, N, power):
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.ndim != 1 or alpha.size < 1:
        raise InputError("alpha must be a non-empty list of reals")
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")
    best_n, best_v = 0, np.inf
    for s in range(1, N + 1, _BLOCK):
        n = np.arange(s, min(s + _BLOCK, N + 1), dtype=np.int64)
        m = n if power == 1 else n * n
        vals = np.max(torus_norm(np.multiply.outer(m.astype(float), alpha)), axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_n, best_v = int(n[i]), float(vals[i])
    return best_n, best_v


def kronecker_search(alpha, N: int) -> tuple[int, float]:
    """n in [1, N] minimising max_j ||n alpha_j|| (ties to the smallest n)."""
    return _scan(alpha, N, 1)


def schmidt_search(alpha, N: int) -> tuple[int, float]:
    """n in [1, N] minimising max_j ||n^2 alpha_j|| (ties to the smallest n)."""
    return _scan(alpha, N, 2)


def max_norm_at(alpha, n: int, power: int = 2) -> float:
    """max_j ||n^power alpha_j||, evaluated the same way as the scans."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    return float(np.max(torus_norm(float(n ** power) * alpha)))


def convergent_denominators(theta: float, q_bound: int, max_terms: int = 64) -> list[int]:
    """Denominators of the continued-fraction convergents of theta up to q_bound."""
    out = []
    x = float(theta)
    q_prev, q = 1, 0
    for _ in range(max_terms):
        a = math.floor(x)
        q_prev, q = q, a * q + q_prev
        if q > q_bound:
            break
        if not out or q != out[-1]:
            out.append(q)
        r = x - a
        if r < 1e-15:
            break
        x = 1.0 / r
    return out


def weyl_rational_approx(theta: float, N: int, q_bound: int, exhaustive_limit: int = 100_000):
    """q <= q_bound minimising ||q theta|| (ties to the smallest q).

    Candidates are every q up to min(q_bound, exhaustive_limit) together with
    the convergent denominators of theta below q_bound. Returns (q, residual).
    """
    if N < 1 or q_bound < 1:
        raise InputError("need N >= 1 and q_bound >= 1")
    lim = min(q_bound, exhaustive_limit)
    qs = np.arange(1, lim + 1, dtype=np.int64)
    extra = [q for q in convergent_denominators(theta, q_bound) if q > lim]
    if extra:
        qs = np.concatenate([qs, np.asarray(sorted(set(extra)), dtype=np.int64)])
    res = torus_norm(qs.astype(float) * theta)
    i = int(np.argmin(res))
    return int(qs[i]), float(res[i])
