"""Lattices, Gaussian theta sums with Poisson duality, A_Lambda and F_{Lambda,alpha}."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..cyclic import frac
from ..errors import DefectError, InputError

TAIL_TARGET = 1e-15
MAX_CONDITION = 1e8
MAX_POINTS = 2_000_000
MAX_DIM = 4


@dataclass(frozen=True)
class Lattice:
    """Full-rank lattice in R^d; the columns of ``basis`` are the generators."""

    basis: np.ndarray
    dual_basis: np.ndarray = field(init=False, repr=False)
    det: float = field(init=False)

    def __post_init__(self):
        B = np.array(self.basis, dtype=float)
        if B.ndim == 1:
            B = B.reshape(1, 1) if B.size == 1 else np.diag(B)
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] < 1:
            raise InputError("basis must be a non-empty square matrix")
        if B.shape[0] > MAX_DIM:
            raise InputError(f"dimension {B.shape[0]} exceeds the guard d <= {MAX_DIM}")
        det = abs(float(np.linalg.det(B)))
        if not det > 0 or not np.all(np.isfinite(B)):
            raise InputError("basis is singular")
        if np.linalg.cond(B) > MAX_CONDITION:
            raise InputError(f"basis condition number exceeds {MAX_CONDITION:g}")
        B.setflags(write=False)
        D = np.linalg.inv(B).T
        D.setflags(write=False)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "dual_basis", D)
        object.__setattr__(self, "det", det)

    @classmethod
    def integer(cls, d: int, scale: float = 1.0) -> "Lattice":
        return cls(scale * np.eye(d))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def dual(self) -> "Lattice":
        return Lattice(self.dual_basis)

    def scaled(self, s: float) -> "Lattice":
        return Lattice(s * self.basis)

    def coordinates(self, x) -> np.ndarray:
        """Coefficients of x (rows) in the basis."""
        return np.linalg.solve(self.basis, np.atleast_2d(x).T).T

    def reduce(self, x) -> np.ndarray:
        """Translate each row of x into the fundamental parallelepiped B[0,1)^d."""
        z = frac(self.coordinates(x))
        return z @ self.basis.T

    def gram_schmidt_lengths(self) -> np.ndarray:
        r = np.linalg.qr(self.basis, mode="r")
        return np.abs(np.diag(r))


@dataclass
class ThetaEval:
    value: float
    truncation_radius: float
    tail_bound: float


# ---------------------------------------------------------------------------
# enumeration


def _count_bound(r, gs):
    # the triangular enumeration visits at most prod(2r/g_i + 1) points
    return float(np.prod(2 * r / gs + 1))


def tail_bound(L: Lattice, t: float, R: float) -> float:
    """Upper bound for sum over |x - m| > R of exp(-pi t |x - m|^2), uniform in x."""
    gs = L.gram_schmidt_lengths()
    total, k = 0.0, 0
    while True:
        term = _count_bound(R + k + 1, gs) * math.exp(-math.pi * t * (R + k) ** 2)
        total += term
        if term < 1e-30 * max(total, 1e-300) or k > 10_000:
            break
        k += 1
    return total


def truncation_radius(L: Lattice, t: float, target: float = TAIL_TARGET) -> float:
    R = 1.0
    while tail_bound(L, t, R) > target:
        R *= 1.1
    return R


def enumerate_points(L: Lattice, radius: float, center=None) -> np.ndarray:
    """All lattice points m with |m - center| <= radius, sorted by (|m - center|, coordinates).

    Fincke-Pohst style: with B = QR, |Bz - c|^2 = |Rz - Q^T c|^2 is expanded
    one coordinate at a time from the last, each level bounding the integer
    range by the remaining squared radius.
    """
    d = L.dim
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    gs = L.gram_schmidt_lengths()
    if _count_bound(radius, gs) > MAX_POINTS:
        raise InputError("lattice enumeration exceeds the point-count guard")
    Q, Rm = np.linalg.qr(L.basis)
    y = Q.T @ c
    r2 = radius * radius
    # partial[k] holds coordinates z_i..z_{d-1}; acc holds the squared distance so far
    zs = np.zeros((1, 0), dtype=np.int64)
    acc = np.zeros(1)
    for i in range(d - 1, -1, -1):
        shift = Rm[i, i + 1:] @ zs.T if zs.shape[1] else np.zeros(zs.shape[0])
        centre = (y[i] - shift) / Rm[i, i]
        width = np.sqrt(np.maximum(r2 - acc, 0.0)) / abs(Rm[i, i])
        lo = np.ceil(centre - width - 1e-12).astype(np.int64)
        hi = np.floor(centre + width + 1e-12).astype(np.int64)
        n = np.maximum(hi - lo + 1, 0)
        rep = np.repeat(np.arange(zs.shape[0]), n)
        offs = np.arange(int(n.sum())) - np.repeat(np.cumsum(n) - n, n)
        zi = lo[rep] + offs
        acc = acc[rep] + (Rm[i, i] * zi + shift[rep] - y[i]) ** 2
        zs = np.column_stack([zi, zs[rep]])
        keep = acc <= r2 * (1 + 1e-12)
        zs, acc = zs[keep], acc[keep]
    pts = zs @ L.basis.T
    dist = np.linalg.norm(pts - c, axis=1)
    order = np.lexsort(tuple(zs.T[::-1]) + (np.round(dist, 12),))
    return pts[order]


def _coefficients_of(L: Lattice, pts) -> np.ndarray:
    z = L.coordinates(pts)
    zi = np.rint(z)
    if np.max(np.abs(z - zi), initial=0.0) > 1e-8:
        raise DefectError("enumerated point is not a lattice point")
    return zi.astype(np.int64)


# ---------------------------------------------------------------------------
# theta functions


def theta_many(L: Lattice, t: float, X) -> tuple[np.ndarray, float, float]:
    """Theta_L(t, x) for every row x of X; returns (values, radius, tail bound).

    Points are reduced into the fundamental parallelepiped first, so one
    enumeration around the origin covers every query.
    """
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != L.dim:
        raise InputError("point dimension does not match the lattice")
    Xr = L.reduce(X)
    R = truncation_radius(L, t)
    diam = float(np.sum(np.linalg.norm(L.basis, axis=0)))
    pts = enumerate_points(L, R + diam)
    out = np.empty(Xr.shape[0])
    for s in range(0, Xr.shape[0], 256):
        diff = Xr[s:s + 256, None, :] - pts[None, :, :]
        out[s:s + 256] = np.exp(-np.pi * t * np.sum(diff * diff, axis=2)).sum(axis=1)
    return out, R, tail_bound(L, t, R)


def theta(L: Lattice, t: float, x) -> ThetaEval:
    """Theta_L(t, x) = sum over m in L of exp(-pi t |x - m|^2)."""
    v, R, tb = theta_many(L, t, np.atleast_1d(np.asarray(x, dtype=float))[None, :])
    return ThetaEval(float(v[0]), R, tb)


def theta_dual(L: Lattice, t: float, x) -> ThetaEval:
    """Poisson side: t^{-d/2} det(L)^{-1} sum over xi in L* of exp(-pi |xi|^2 / t) e(xi . x)."""
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    D = L.dual()
    R = truncation_radius(D, 1.0 / t)
    xi = enumerate_points(D, R)
    # xi . x is only needed mod 1; use integer dual coordinates against lattice coordinates of x
    z = L.coordinates(x)[0]
    phase = frac(_coefficients_of(D, xi) @ frac(z)) if xi.size else np.zeros(0)
    terms = np.exp(-np.pi * np.sum(xi * xi, axis=1) / t) * np.exp(2j * np.pi * phase)
    scale = 1.0 / (t ** (L.dim / 2) * L.det)
    s = terms.sum() * scale
    if abs(s.imag) > 1e-8:
        raise DefectError(f"imaginary residue {abs(s.imag):.3g} in dual theta sum")
    return ThetaEval(float(s.real), R, tail_bound(D, 1.0 / t, R) * scale)


def a_lambda(L: Lattice, check: bool = True) -> float:
    """A_L = sum over xi in L* of exp(-pi |xi|^2), optionally cross-checked as det(L) Theta_L(1, 0)."""
    A = theta(L.dual(), 1.0, np.zeros(L.dim)).value
    if check:
        B = L.det * theta(L, 1.0, np.zeros(L.dim)).value
        if abs(A - B) > 1e-9 * max(1.0, A):
            raise DefectError(f"A_Lambda primal/dual mismatch: {A!r} vs {B!r}")
    return A


# ---------------------------------------------------------------------------
# F_{Lambda, alpha}


def _square_targets(L: Lattice, alpha, N: int):
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.size != L.dim:
        raise InputError("alpha dimension does not match the lattice")
    if N < 0:
        raise InputError(f"N must be >= 0, got {N}")
    # reduce in lattice coordinates so large n^2 does not swamp the fraction
    z = L.coordinates(alpha)[0]
    n2 = np.arange(N + 1, dtype=np.int64) ** 2
    zr = frac(np.multiply.outer(n2.astype(float), z))
    return zr @ L.basis.T


def f_lattice(L: Lattice, alpha, N: int) -> float:
    """F_{L,alpha}(N) = det(L) E_{-N <= n <= N} Theta_L(1, n^2 alpha)."""
    vals, _, _ = theta_many(L, 1.0, _square_targets(L, alpha, N))
    # n and -n give the same term
    total = vals[0] + 2.0 * vals[1:].sum()
    return float(L.det * total / (2 * N + 1))


def f_lattice_fourier(L: Lattice, alpha, N: int) -> float:
    """Dual form: sum over xi in L* of exp(-pi |xi|^2) E_n e(n^2 xi . alpha)."""
    D = L.dual()
    xi = enumerate_points(D, truncation_radius(D, 1.0))
    c = _coefficients_of(D, xi)
    z = L.coordinates(np.atleast_1d(alpha))[0]
    return float(np.sum(np.exp(-np.pi * np.sum(xi * xi, axis=1)) * quadratic_weyl_sums(c @ z, N).real))


def quadratic_weyl_sums(theta, N: int) -> np.ndarray:
    """E_{-N <= n <= N} e(n^2 theta) for each theta."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n2 = (np.arange(1, N + 1, dtype=np.int64) ** 2).astype(float)
    ph = frac(np.multiply.outer(theta, n2))
    return (1.0 + 2.0 * np.exp(2j * np.pi * ph).sum(axis=1)) / (2 * N + 1)


def stability_constant(eps: float) -> float:
    """Largest c0 with exp(-pi X^2) >= c0 exp(-pi (1+eps)^2 max(0, X-eps)^2) for all X >= 0.

    The exponent gap is convex for X >= eps with minimum -(1+eps)^2 eps / (2+eps).
    """
    return math.exp(-math.pi * (1 + eps) ** 2 * eps / (2 + eps))


@dataclass
class FPropertiesReport:
    contraction_lhs: float
    contraction_rhs: float
    contraction_holds: bool
    dilation_lhs: float
    dilation_rhs: float
    dilation_holds: bool
    stability_ratio: float
    stability_c0: float
    stability_holds: bool

    @property
    def all_hold(self) -> bool:
        return self.contraction_holds and self.dilation_holds and self.stability_holds


def check_f_properties(L: Lattice, alpha, N: int, c: float, q: int, eps: float,
                       alpha_tilde=None, slack: float = 1e-12) -> FPropertiesReport:
    """Evaluate the contraction, dilation and stability properties of F at one point."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    at = alpha if alpha_tilde is None else np.atleast_1d(np.asarray(alpha_tilde, dtype=float))
    if not (N >= 1 and 10 / N < c < 1):
        raise InputError(f"need 10/N < c < 1, got c={c}, N={N}")
    if q < 1 or int(q) != q:
        raise InputError(f"q must be a positive integer, got {q}")
    if not 0 < eps < 1:
        raise InputError(f"need 0 < eps < 1, got {eps}")
    if np.linalg.norm(alpha - at) > eps / N ** 2 * (1 + 1e-12):
        raise InputError("perturbation exceeds eps N^-2")
    FN = f_lattice(L, alpha, N)
    M = math.floor(c * N)
    c_rhs = (2 * M + 1) / (2 * N + 1) * f_lattice(L, alpha, M)
    Mq = N // q
    d_rhs = (2 * Mq + 1) / (2 * N + 1) * f_lattice(L, q * q * alpha, Mq)
    Ls = L.scaled(1 + eps)
    pert = f_lattice(Ls, (1 + eps) * at, N) / Ls.det
    ratio = (FN / L.det) / pert
    c0 = stability_constant(eps)
    return FPropertiesReport(FN, c_rhs, FN >= c_rhs - slack, FN, d_rhs, FN >= d_rhs - slack,
                             ratio, c0, ratio >= c0 - slack)
