"""Schmidt's alternative, one descent step, the lower-bound trace and theta-certified recurrence."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from ..cyclic import frac, torus_norm
from ..errors import DefectError, InputError
from .lattice import (Lattice, _coefficients_of, a_lambda, enumerate_points, f_lattice,
                      quadratic_weyl_sums, theta_many)
from .search import max_norm_at, weyl_rational_approx

M_CONSTANT = 2.0


@dataclass
class AlternativeOutcome:
    branch: str  # "F_large" or "relation_found"
    F_value: float
    xi: np.ndarray | None = None
    q: int | None = None
    residual: float | None = None
    weyl_sum: float | None = None
    cutoff: float | None = None
    candidates: int = 0


def schmidt_alternative(L: Lattice, alpha, N: int, C: float = M_CONSTANT,
                        q_bound: int | None = None) -> AlternativeOutcome:
    """Either F_{L,alpha}(N) >= 1/2, or a primitive dual vector xi and q with q xi.alpha near an integer."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    F = f_lattice(L, alpha, N)
    if F >= 0.5:
        return AlternativeOutcome("F_large", F)
    A = a_lambda(L)
    d = L.dim
    M = C * (math.sqrt(d) + math.sqrt(max(math.log(A), 0.0)))
    D = L.dual()
    xi = enumerate_points(D, M)
    xi = xi[np.linalg.norm(xi, axis=1) > 1e-12]
    if xi.shape[0] == 0:
        raise DefectError(f"no nonzero dual vector within the cutoff M={M:.4g}")
    coeff = _coefficients_of(D, xi)
    z = L.coordinates(alpha)[0]
    sums = np.abs(quadratic_weyl_sums(coeff @ z, N))
    i = int(np.argmax(sums))
    if sums[i] < 1e-9:
        raise DefectError(f"F={F:.4g} < 1/2 but every exponential sum within M={M:.4g} vanishes "
                          f"(max {sums[i]:.3g})")
    c = coeff[i]
    th = float(frac(c @ z))
    qb = q_bound if q_bound is not None else max(1, math.ceil(4.0 / sums[i] ** 2))
    q, _ = weyl_rational_approx(th, N, qb)
    g = reduce(math.gcd, (abs(int(v)) for v in c))
    # divide out to a primitive vector; q absorbs the factor
    c = c // g
    q *= g
    prim = D.basis @ c
    res = float(torus_norm(q * float(c @ z)))
    return AlternativeOutcome("relation_found", F, prim, int(q), res, float(sums[i]), M, int(xi.shape[0]))


def dual_coordinates(L: Lattice, xi) -> np.ndarray:
    """Integer coordinates of a dual vector in the dual basis (checked)."""
    c = L.basis.T @ np.asarray(xi, dtype=float)
    ci = np.rint(c)
    if np.max(np.abs(c - ci)) > 1e-8:
        raise DefectError("vector is not in the dual lattice")
    return ci.astype(np.int64)


def is_primitive(L: Lattice, xi) -> bool:
    c = dual_coordinates(L, xi)
    return reduce(math.gcd, (abs(int(v)) for v in c)) == 1


def unimodular_completion(c) -> np.ndarray:
    """Unimodular integer U with c^T U = e_d^T, for a primitive integer vector c.

    The first d-1 columns then form a basis of the integer kernel of c.
    """
    w = [int(v) for v in c]
    d = len(w)
    U = [[int(i == j) for j in range(d)] for i in range(d)]

    def colop(dst, src, k):  # column dst -= k * column src
        w[dst] -= k * w[src]
        for row in U:
            row[dst] -= k * row[src]

    def swap(i, j):
        w[i], w[j] = w[j], w[i]
        for row in U:
            row[i], row[j] = row[j], row[i]

    # Euclid across the entries until only the last is nonzero
    while True:
        nz = [i for i in range(d) if w[i] != 0]
        if not nz:
            raise InputError("zero vector has no completion")
        piv = min(nz, key=lambda i: (abs(w[i]), i))
        if len(nz) == 1:
            break
        for i in nz:
            if i != piv:
                colop(i, piv, w[i] // w[piv])
    swap(piv, d - 1)
    if abs(w[d - 1]) != 1:
        raise InputError("vector is not primitive")
    if w[d - 1] == -1:
        w[d - 1] = 1
        for row in U:
            row[d - 1] = -row[d - 1]
    return np.array(U, dtype=np.int64)


def householder(xi) -> np.ndarray:
    """Orthogonal H with H xi = |xi| e_d."""
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    e = np.zeros(d)
    e[-1] = np.linalg.norm(xi)
    v = xi - e
    nv = np.linalg.norm(v)
    if nv < 1e-15 * max(1.0, e[-1]):
        return np.eye(d)
    v /= nv
    return np.eye(d) - 2.0 * np.outer(v, v)


@dataclass
class DescentResult:
    lattice: Lattice | None  # None when the new dimension is 0
    alpha: np.ndarray
    N: int
    measured_ratio: float
    N_star: int
    beta_distance: float
    F_before: float
    F_after: float
    descent_lhs: float
    descent_rhs: float
    descent_holds: bool
    det_identity_error: float
    dual_det_error: float
    checks: dict = field(default_factory=dict)


def descent_step(L: Lattice, alpha, N: int, outcome: AlternativeOutcome) -> DescentResult:
    """Pass from (L, alpha, N) in R^d to (L', alpha', N') in R^{d-1} along a relation."""
    if outcome.branch != "relation_found":
        raise InputError("descent needs a relation_found outcome")
    d = L.dim
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    xi = np.asarray(outcome.xi, dtype=float)
    q = int(outcome.q)
    c = dual_coordinates(L, xi)
    H = householder(xi)
    hx = H @ xi
    nxi = float(np.linalg.norm(xi))
    if np.max(np.abs(hx[:-1]), initial=0.0) > 1e-10 * max(1.0, nxi):
        raise DefectError("reflection failed to align xi with e_d")
    # work in the rotated frame
    B = H @ L.basis
    Lr = Lattice(B)
    z = L.coordinates(alpha)[0]
    # y = q^2 alpha reduced mod the lattice (does not change F)
    zy = frac((q * q) * z)
    y = B @ zy
    # xi . y computed through integer coordinates: exact up to float rounding of c.zy
    s = float(c @ zy)
    k = round(s)
    e_d = np.zeros(d)
    e_d[-1] = 1.0
    beta = y - ((s - k) / nxi) * e_d
    dist = abs(s - k) / nxi
    N_star = N if dist == 0 else min(N, int(math.floor((d * dist) ** -0.5)))
    N_new = N_star // q

    U = unimodular_completion(c)
    m = B @ (k * U[:, -1])
    diff = beta - m
    if abs(diff[-1]) > 1e-9 * max(1.0, np.linalg.norm(beta)):
        raise DefectError("beta - m does not lie in the hyperplane")
    s1 = 1.0 + 1.0 / d
    F_before = f_lattice(L, alpha, N)
    Ls = Lr.scaled(s1)
    alpha_s = s1 * beta
    if d == 1:
        Lp, alpha_p, F_after = None, np.zeros(0), 1.0
        det_p, det_pi, dual_err, ident_err = 1.0, 1.0, 0.0, 0.0
    else:
        Pi_full = B @ U[:, :-1]
        if np.max(np.abs(Pi_full[-1])) > 1e-9 * max(1.0, np.max(np.abs(Pi_full))):
            raise DefectError("kernel lattice does not lie in the hyperplane")
        Pi = Lattice(Pi_full[:-1])
        Lp = Pi.scaled(s1)
        alpha_p = s1 * diff[:-1]
        F_after = f_lattice(Lp, alpha_p, N_new)
        det_p = Lp.det
        det_pi = Pi.det
        ident_err = abs(Pi.det * Pi.dual().det - 1.0)
        dual_err = abs(Lr.dual().det - nxi * Pi.dual().det)
    # the descent inequality on the constructed pair at N'
    descent_lhs = f_lattice(Ls, alpha_s, N_new)
    descent_rhs = Ls.det / det_p * F_after
    ratio = F_before / F_after
    return DescentResult(
        lattice=Lp, alpha=alpha_p, N=N_new, measured_ratio=ratio, N_star=N_star,
        beta_distance=dist, F_before=F_before, F_after=F_after,
        descent_lhs=descent_lhs, descent_rhs=descent_rhs, descent_holds=descent_lhs >= descent_rhs - 1e-10 * max(1.0, descent_rhs),
        det_identity_error=ident_err, dual_det_error=dual_err,
        checks={"det_kernel": det_pi, "xi_norm": nxi, "k": k},
    )


@dataclass
class TraceLevel:
    d: int
    N: int
    F: float
    A: float
    det: float
    branch: str
    trivial_bound: float
    trivial_ok: bool
    measured_ratio: float | None = None
    descent_ok: bool | None = None
    identities_ok: bool | None = None


def f_lower_bound_trace(L: Lattice, alpha, N: int, C: float = M_CONSTANT) -> list[TraceLevel]:
    """Alternate Schmidt's alternative and descent until F >= 1/2 or the dimension reaches 0."""
    if L.det < 1 - 1e-12:
        raise InputError(f"need det(L) >= 1, got {L.det}")
    levels: list[TraceLevel] = []
    cur, a, n = L, np.atleast_1d(np.asarray(alpha, dtype=float)), int(N)
    while cur is not None:
        out = schmidt_alternative(cur, a, n, C)
        tb = cur.det / (2 * n + 1)
        lvl = TraceLevel(cur.dim, n, out.F_value, a_lambda(cur), cur.det, out.branch,
                         tb, out.F_value >= tb - 1e-12)
        levels.append(lvl)
        if out.branch == "F_large":
            return levels
        step = descent_step(cur, a, n, out)
        lvl.measured_ratio = step.measured_ratio
        lvl.descent_ok = step.descent_holds
        lvl.identities_ok = step.det_identity_error <= 1e-9 and step.dual_det_error <= 1e-9 * max(1.0, cur.dual().det)
        cur, a, n = step.lattice, step.alpha, step.N
    levels.append(TraceLevel(0, n, 1.0, 1.0, 1.0, "dimension_zero", 1.0, True))
    return levels


@dataclass
class ThetaRecurrence:
    n: int
    certified: bool
    theta_value: float
    distance: float
    bound: float
    norms: np.ndarray


def schmidt_via_theta(alpha, N: int, R: float, threshold: float | None = None,
                      C0: float = 3.0) -> ThetaRecurrence:
    """n <= N maximising Theta_{R Z^d}(1, n^2 R alpha), certified when within sqrt(R) of the lattice."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    d = alpha.size
    if d > 3:
        raise InputError("schmidt_via_theta is guarded at d <= 3")
    if R < C0 * d:
        raise InputError(f"need R >= {C0} d, got R={R}")
    if N < 1:
        raise InputError("N must be >= 1")
    thr = 1e-3 * R ** (-d) if threshold is None else threshold
    L = Lattice.integer(d, R)
    n = np.arange(1, N + 1, dtype=np.int64)
    targets = R * frac(np.multiply.outer((n * n).astype(float), alpha))
    vals, _, _ = theta_many(L, 1.0, targets)
    i = int(np.argmax(vals))
    best = int(n[i])
    norms = torus_norm(float(best * best) * alpha)
    dist = float(R * np.linalg.norm(norms))
    bound = 1.0 / math.sqrt(R)
    certified = bool(vals[i] > thr and dist <= math.sqrt(R) and np.all(norms <= bound))
    if certified and abs(float(np.max(norms)) - max_norm_at(alpha, best)) > 1e-12:
        raise DefectError("certificate disagrees with the direct evaluation")
    return ThetaRecurrence(best, certified, float(vals[i]), dist, bound, np.asarray(norms))
