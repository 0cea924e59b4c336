"""The 4-AP counting form and the Gowers U^2 / U^3 norms on Z/pZ."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import BOUNDED_TOL, INEQUALITY_TOL
from .cyclic import CyclicFunction, as_values, lp_norm
from .errors import CostGuardError, InputError

U3_DIRECT_MAX_P = 64
U2_DIRECT_MAX_P = 200
# rows per work unit; fixed so results never depend on the worker count
_CHUNK = 64


def _chunks(n):
    return [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]


def _map_chunks(fn, n, workers):
    chunks = _chunks(n)
    if workers and workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, chunks))
    else:
        parts = [fn(c) for c in chunks]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# discrete Fourier transform at prime length


@lru_cache(maxsize=8)
def _root_table(p):
    return np.exp(-2j * np.pi * np.arange(p) / p)


def dft_matrix(p: int, rows=None) -> np.ndarray:
    """W[xi, x] = e(-xi x / p) / p, exact phase lookup from (xi*x mod p)."""
    xi = np.arange(p) if rows is None else np.asarray(rows)
    k = np.outer(xi, np.arange(p)) % p
    return _root_table(p)[k] / p


def _dft_naive(v: np.ndarray) -> np.ndarray:
    """Row-wise naive DFT of a (m, p) or (p,) array."""
    p = v.shape[-1]
    out = np.empty(v.shape, dtype=complex)
    # block over output frequencies to keep the phase table small
    for s, e in [(s, min(s + 512, p)) for s in range(0, p, 512)]:
        out[..., s:e] = v @ dft_matrix(p, np.arange(s, e)).T
    return out


def dft(v, method: str = "naive") -> np.ndarray:
    """hat f(xi) = E_x f(x) e(-xi x / p), applied along the last axis."""
    v = np.asarray(v, dtype=complex)
    if method == "naive":
        return _dft_naive(v)
    if method == "fft":
        return np.fft.fft(v, axis=-1) / v.shape[-1]
    raise InputError(f"unknown DFT method {method!r}")


@dataclass(frozen=True)
class Spectrum:
    """Fourier coefficients of a function on Z/pZ (normalised by 1/p)."""

    coefficients: np.ndarray

    @classmethod
    def of(cls, f, method: str = "naive") -> "Spectrum":
        return cls(dft(as_values(f), method))

    @property
    def p(self) -> int:
        return self.coefficients.size

    def inverse(self) -> CyclicFunction:
        """f(x) = sum_xi hat f(xi) e(xi x / p)."""
        p = self.p
        return CyclicFunction(np.conj(dft(np.conj(self.coefficients))) * p)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))


# ---------------------------------------------------------------------------
# the counting form


def lambda4(f0, f1, f2, f3, workers: int = 1) -> complex:
    """E_{x,h} f0(x) f1(x+h) f2(x+2h) f3(x+3h) over all of Z/pZ (h = 0 included)."""
    vs = [as_values(f) for f in (f0, f1, f2, f3)]
    p = vs[0].size
    if any(v.size != p for v in vs):
        raise InputError("lambda4: modulus mismatch")
    x = np.arange(p)

    def rows(bounds):
        h = np.arange(*bounds)[:, None]
        prod = vs[0][None, :] * vs[1][(x + h) % p] * vs[2][(x + 2 * h) % p] * vs[3][(x + 3 * h) % p]
        return prod.sum(axis=1)

    per_h = _map_chunks(rows, p, workers)
    return complex(per_h.sum() / (p * p))


# ---------------------------------------------------------------------------
# Gowers norms


def u2_norm(f, algorithm: str = "fourier", method: str = "naive") -> float:
    """||f||_{U^2} via the spectrum, or by the direct parallelogram average."""
    v = as_values(f)
    p = v.size
    if algorithm == "fourier":
        s = np.abs(dft(v, method)) ** 4
        return float(np.sum(s) ** 0.25)
    if algorithm == "direct":
        if p > U2_DIRECT_MAX_P:
            raise CostGuardError("u2 direct guard", U2_DIRECT_MAX_P, p)
        x, h1, h2 = np.meshgrid(np.arange(p), np.arange(p), np.arange(p), indexing="ij")
        k = v[x] * np.conj(v[(x + h1) % p]) * np.conj(v[(x + h2) % p]) * v[(x + h1 + h2) % p]
        return float(max(np.mean(k).real, 0.0) ** 0.25)
    raise InputError(f"unknown U^2 algorithm {algorithm!r}")


def _u3_direct8(v):
    p = v.size
    cv = np.conj(v)
    x, h2, h3 = np.meshgrid(np.arange(p), np.arange(p), np.arange(p), indexing="ij")
    total = 0.0 + 0.0j
    for h1 in range(p):
        k = (v[x] * cv[(x + h1) % p] * cv[(x + h2) % p] * cv[(x + h3) % p]
             * v[(x + h1 + h2) % p] * v[(x + h2 + h3) % p] * v[(x + h1 + h3) % p]
             * cv[(x + h1 + h2 + h3) % p])
        total += k.sum()
    return total / p ** 4


def _u3_composed8(v, workers=1, method="naive"):
    p = v.size
    x = np.arange(p)

    def rows(bounds):
        h = np.arange(*bounds)[:, None]
        g = v[None, :] * np.conj(v[(x + h) % p])
        return np.sum(np.abs(dft(g, method)) ** 4, axis=1)

    return complex(np.mean(_map_chunks(rows, p, workers)))


def u3_norm(f, algorithm: str = "composed", guard_override: bool = False,
            workers: int = 1, method: str = "naive") -> float:
    """Gowers U^3 norm.

    ``direct`` evaluates the eightfold cube average literally (O(p^4), guarded
    at p <= 64). ``composed`` uses ||f||_{U^3}^8 = E_h ||f conj(f(.+h))||_{U^2}^4.
    """
    v = as_values(f)
    if algorithm == "direct":
        if v.size > U3_DIRECT_MAX_P and not guard_override:
            raise CostGuardError("u3 direct guard", U3_DIRECT_MAX_P, v.size)
        s = _u3_direct8(v)
    elif algorithm == "composed":
        s = _u3_composed8(v, workers, method)
    else:
        raise InputError(f"unknown U^3 algorithm {algorithm!r}")
    return float(max(s.real, 0.0) ** 0.125)


# ---------------------------------------------------------------------------
# control lemmas


@dataclass
class L1ControlReport:
    lhs: float
    rhs: float
    holds: bool
    telescope_terms: list = field(default_factory=list)
    telescope_error: float = 0.0
    term_bound: float = 0.0
    terms_hold: bool = True


def check_l1_control(f, g, bound_alpha: float) -> L1ControlReport:
    """|Lam(f,f,f,f) - Lam(g,g,g,g)| <= 4 a^3 ||f-g||_1 for |f|, |g| <= a.

    Also evaluates the four telescoping terms and checks each against
    ||f-g||_1 * a^3.
    """
    fv, gv = as_values(f), as_values(g)
    tol = BOUNDED_TOL * max(1.0, bound_alpha)
    if np.max(np.abs(fv)) > bound_alpha + tol or np.max(np.abs(gv)) > bound_alpha + tol:
        raise InputError("check_l1_control: pointwise bound violated")
    d = fv - gv
    l1 = lp_norm(d, exponent=1)
    lf, lg = lambda4(fv, fv, fv, fv), lambda4(gv, gv, gv, gv)
    terms = [lambda4(d, fv, fv, fv), lambda4(gv, d, fv, fv),
             lambda4(gv, gv, d, fv), lambda4(gv, gv, gv, d)]
    lhs = abs(lf - lg)
    rhs = 4 * bound_alpha ** 3 * l1
    tb = l1 * bound_alpha ** 3
    return L1ControlReport(
        lhs=lhs, rhs=rhs, holds=lhs <= rhs + INEQUALITY_TOL,
        telescope_terms=terms,
        telescope_error=abs(sum(terms) - (lf - lg)),
        term_bound=tb,
        terms_hold=all(abs(t) <= tb + INEQUALITY_TOL for t in terms),
    )


@dataclass
class GvnReport:
    lambda_abs: float
    u3_norms: list
    min_u3: float
    holds: bool


def _require_bounded(fs, name):
    for f in fs:
        if np.max(np.abs(as_values(f))) > 1 + BOUNDED_TOL:
            raise InputError(f"{name}: inputs must be 1-bounded")


def check_gvn(f1, f2, f3, f4, algorithm: str = "composed") -> GvnReport:
    """|Lam(f1,f2,f3,f4)| <= min_j ||f_j||_{U^3} for 1-bounded inputs."""
    fs = (f1, f2, f3, f4)
    _require_bounded(fs, "check_gvn")
    lam = abs(lambda4(*fs))
    norms = [u3_norm(f, algorithm) for f in fs]
    m = min(norms)
    return GvnReport(lambda_abs=lam, u3_norms=norms, min_u3=m,
                     holds=lam <= m + INEQUALITY_TOL)


@dataclass
class U3ControlReport:
    lhs: float
    rhs: float
    holds: bool


def check_u3_control(f, g, algorithm: str = "composed") -> U3ControlReport:
    """|Lam(f,f,f,f) - Lam(g,g,g,g)| <= 4 ||f - g||_{U^3} for 1-bounded f, g."""
    _require_bounded((f, g), "check_u3_control")
    fv, gv = as_values(f), as_values(g)
    lhs = abs(lambda4(fv, fv, fv, fv) - lambda4(gv, gv, gv, gv))
    rhs = 4 * u3_norm(fv - gv, algorithm)
    return U3ControlReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs + INEQUALITY_TOL)


def parseval_error(f, method: str = "naive") -> float:
    v = as_values(f)
    return abs(Spectrum.of(v, method).energy() - float(np.mean(np.abs(v) ** 2)))


def roundtrip_error(f, method: str = "naive") -> float:
    v = as_values(f)
    return float(np.max(np.abs(Spectrum.of(v, method).inverse().values - v)))

