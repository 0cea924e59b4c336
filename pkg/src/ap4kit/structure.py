"""Inverse-U^3 oracle, energy-increment decomposition, density increments and the r_4 driver."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import BOUNDED_TOL, INEQUALITY_TOL
from .cyclic import (CyclicFunction, IntervalEmbedding, as_values, count_ap4_integers, embed_set,
                     find_prime, lp_norm)
from .errors import CostGuardError, DefectError, InputError, PipelineFailure
from .factors import (QuadraticFactor, QuadraticPhase, cond_expect, energy, join, linear_factor,
                      trivial_factor)
from .linearise import (PartitionCertificate, integer_progression, linearise_quadratic_atom,
                        pigeonhole_best_part)
from .uniformity import dft, lambda4, u3_norm

ORACLE_MAX_P = 512


def default_K(eta: float) -> int:
    return max(2, math.ceil(8.0 / eta))


def default_threshold(eta: float) -> float:
    return 0.1 * eta


# ---------------------------------------------------------------------------
# the oracle


@dataclass
class OracleResult:
    factor: QuadraticFactor
    correlation: float
    phase_found: str
    l1_projection: float
    coefficients: list = field(default_factory=list)


def quadratic_correlations(v: np.ndarray, workers: int = 1) -> np.ndarray:
    """C[a, b] = E_x v(x) e(-(a x^2 + b x)/p) for all (a, b)."""
    p = v.size
    x = np.arange(p, dtype=np.int64)
    roots = np.exp(-2j * np.pi * np.arange(p) / p)

    def rows(a_range):
        a = np.arange(*a_range)[:, None]
        g = v[None, :] * roots[(a * (x * x % p)[None, :]) % p]
        return dft(g)

    chunks = [(s, min(s + 64, p)) for s in range(0, p, 64)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(rows, chunks))
    else:
        parts = [rows(c) for c in chunks]
    return np.concatenate(parts)


def _best(C: np.ndarray):
    mag = np.abs(C)
    i = int(np.argmax(mag))  # row-major: ties go to the smallest (a, b)
    a, b = divmod(i, C.shape[1])
    return a, b, float(mag[a, b])


def brute_inverse_u3(f, eta: float, K: int | None = None, threshold: float | None = None,
                     guard_override: bool = False, seed: int = 0, linear_phases=None,
                     workers: int = 1) -> OracleResult | None:
    """Exhaustive search for a quadratic phase correlating with f.

    Globally, every (a, b) in (Z/pZ)^2 is tried. With ``linear_phases`` the
    search runs atom by atom over the linear factor they generate, and the
    correlation reported is the L^1 average of the per-atom maxima. The
    constant term of each phase is drawn from ``seed`` so cell boundaries do
    not sit on rational points.
    """
    v = as_values(f)
    p = v.size
    if p > ORACLE_MAX_P and not guard_override:
        raise CostGuardError("inverse-U3 oracle guard", ORACLE_MAX_P, p)
    if np.max(np.abs(v)) > 2 + BOUNDED_TOL:
        raise InputError("oracle input must be bounded by 2")
    K = default_K(eta) if K is None else K
    thr = default_threshold(eta) if threshold is None else threshold
    rng = np.random.default_rng(seed)
    if not linear_phases:
        a, b, corr = _best(quadratic_correlations(v, workers))
        if corr < thr or corr == 0:
            return None
        ph = QuadraticPhase(a, b, float(rng.random()))
        factor = QuadraticFactor(p, K, (), [(ph, None)])
        l1 = lp_norm(cond_expect(v, factor.B2), exponent=1)
        return OracleResult(factor, corr, ph.describe(), l1, [(a, b)])

    B1 = linear_factor(linear_phases, K, p)
    quads, coeffs, total = [], [], 0.0
    for atom in B1.atoms:
        w = np.zeros(p, dtype=complex)
        w[atom] = v[atom]
        C = quadratic_correlations(w, workers) * (p / atom.size)
        a, b, corr = _best(C)
        total += corr * atom.size / p
        sup = np.zeros(p, dtype=bool)
        sup[atom] = True
        quads.append((QuadraticPhase(a, b, float(rng.random())), sup))
        coeffs.append((a, b))
    if total < thr or total == 0:
        return None
    factor = QuadraticFactor(p, K, tuple(linear_phases), quads)
    l1 = lp_norm(cond_expect(v, factor.B2), exponent=1)
    desc = "; ".join(ph.describe() for ph, _ in quads)
    return OracleResult(factor, total, desc, l1, coeffs)


# ---------------------------------------------------------------------------
# energy increment


@dataclass
class IterationRecord:
    energy_before: float
    energy_after: float
    u3_residual: float
    correlation: float
    pythagoras_error: float
    atoms: int


@dataclass
class DecompositionTrace:
    iterations: list
    final_factor: QuadraticFactor | None
    config: dict
    status: str = "converged"
    final_residual_u3: float = math.nan

    def min_increment(self) -> float:
        return min((r.energy_after - r.energy_before for r in self.iterations), default=math.inf)


class IterationCapError(DefectError):
    def __init__(self, trace: DecompositionTrace):
        self.trace = trace
        super().__init__(f"energy increment hit its iteration cap ({len(trace.iterations)})")


def kvn_decompose(f, eta: float, emb: IntervalEmbedding, K: int | None = None, oracle=None,
                  threshold: float | None = None, max_iter: int | None = None, seed: int = 0,
                  u3_algorithm: str = "composed", workers: int = 1):
    """Refine a quadratic factor until f - E(f | B2 v B_triv) has U^3 norm at most eta.

    Each round asks the oracle for a factor correlating with the residual and
    replaces (B1, B2) by the common extension. Stops on success, when the
    oracle finds nothing, or when energy stops growing. Returns (factor, trace).
    """
    v = as_values(f)
    p = v.size
    if p != emb.p:
        raise InputError("modulus mismatch")
    if np.max(np.abs(v.imag)) > 0 or np.max(np.abs(v)) > 1 + BOUNDED_TOL:
        raise InputError("f must be real and 1-bounded")
    K = default_K(eta) if K is None else K
    if K < 2:
        raise InputError("K must be >= 2")
    thr = default_threshold(eta) if threshold is None else threshold
    cap = max_iter if max_iter is not None else math.ceil(4.0 / thr ** 2)
    if oracle is None:
        def oracle(res, eta_, K_, seed_):
            return brute_inverse_u3(res, eta_, K_, thr, seed=seed_, workers=workers)
    triv = trivial_factor(emb)
    factor = QuadraticFactor(p, K)
    trace = DecompositionTrace([], factor, {"eta": eta, "K": K, "threshold": thr, "cap": cap, "seed": seed})
    part = join(factor.B2, triv)
    g = cond_expect(v, part).values
    while True:
        u = u3_norm(v - g, u3_algorithm, workers=workers)
        trace.final_residual_u3 = u
        if u <= eta:
            trace.status = "converged"
            break
        if len(trace.iterations) >= cap:
            trace.final_factor = factor
            raise IterationCapError(trace)
        res = oracle(CyclicFunction(v - g), eta, K, seed + len(trace.iterations))
        if res is None:
            trace.status = "oracle_failure"
            break
        new = factor.extend(res.factor)
        new_part = join(new.B2, triv)
        g_new = cond_expect(v, new_part).values
        e0, e1 = energy(v, part), energy(v, new_part)
        pyth = abs((e1 - e0) - float(np.mean(np.abs(g_new - g) ** 2)))
        if pyth > 1e-10:
            raise DefectError(f"Pythagoras identity off by {pyth:.3g}")
        if not e1 > e0:
            trace.status = "stalled"
            break
        trace.iterations.append(IterationRecord(e0, e1, u, res.correlation, pyth, new_part.n_atoms))
        factor, part, g = new, new_part, g_new
    trace.final_factor = factor
    return factor, trace


# ---------------------------------------------------------------------------
# anomaly gap and density increment


@dataclass
class GapReport:
    gap: float
    delta: float
    threshold_ratio: float
    lambda_f: float
    lambda_model: float


def _check_density_function(v, emb):
    if np.any(np.abs(v.imag) > 0) or np.any(v.real < -BOUNDED_TOL) or np.any(v.real > 1 + BOUNDED_TOL):
        raise InputError("f must be real with values in [0, 1]")
    if np.any(np.abs(v[~emb.interval_mask()]) > 0):
        raise InputError("f must vanish outside [N]")


def anomaly_gap(f, emb: IntervalEmbedding) -> GapReport:
    """Distance between Lambda(f) and the count for the constant-density model on [N]."""
    v = as_values(f)
    _check_density_function(v, emb)
    delta = float(v.real[1:emb.N + 1].mean())
    if delta == 0:
        raise InputError("density is zero")
    m = delta * emb.interval_mask().astype(float)
    lf = lambda4(v, v, v, v).real
    lm = lambda4(m, m, m, m).real
    gap = abs(lf - lm)
    return GapReport(gap, delta, gap / delta ** 4, lf, lm)


@dataclass
class IncrementAtom:
    atom: np.ndarray
    density: float
    delta: float


def density_increment_atom(f, factor, emb: IntervalEmbedding, c: float) -> IncrementAtom | None:
    """Largest atom of B2 v B_triv inside [N] on which f averages at least (1+c) delta."""
    v = as_values(f)
    _check_density_function(v, emb)
    part = factor.with_trivial(emb) if isinstance(factor, QuadraticFactor) else join(factor, trivial_factor(emb))
    delta = float(v.real[1:emb.N + 1].mean())
    inside = emb.interval_mask()
    best = None
    for atom in part.atoms:
        if not inside[atom].all():
            continue
        dens = float(v.real[atom].sum() / atom.size)
        if dens >= (1 + c) * delta:
            key = (atom.size, dens)
            if best is None or key > (best.atom.size, best.density):
                best = IncrementAtom(atom, dens, delta)
    return best


# ---------------------------------------------------------------------------
# the r_4 iteration


@dataclass
class R4Config:
    eta: float = 0.15
    K: int | None = 4
    threshold: float | None = None
    c: float = 0.1
    gap_ratio_min: float = 1e-3
    bottom_out_C: float = 1.0
    stop_at_bottom_out: bool = False
    plarge_C: float = 1.0
    max_passes: int = 4
    seed: int = 0
    workers: int = 1
    guard_override: bool = False


@dataclass
class IncrementResult:
    progression: tuple  # (start, step, length) as integers inside [N]
    new_density: float
    old_density: float


@dataclass
class PassRecord:
    N: int
    p: int
    size: int
    delta: float
    gap: GapReport | None = None
    bottom_out: bool = False
    plarge_vacuous: bool = True
    iterations: int = 0
    residual_u3: float = math.nan
    control_lhs: float = math.nan
    control_rhs: float = math.nan
    atom_size: int = 0
    atom_density: float = math.nan
    certificate: PartitionCertificate | None = None
    increment: IncrementResult | None = None
    ap4_free: bool = True
    checks: dict = field(default_factory=dict)


@dataclass
class IterationReport:
    passes: list
    status: str
    reason: str = ""
    stage: str = ""

    @property
    def completed_passes(self) -> int:
        return sum(1 for r in self.passes if r.increment is not None)


def increment_pass(A, N: int, config: R4Config, p: int | None = None) -> PassRecord:
    """One pass: gap, decomposition, increment atom, linearisation, pigeonhole.

    Raises PipelineFailure naming the stage that could not proceed.
    """
    A = sorted(set(int(a) for a in A))
    if not A:
        raise InputError("empty set")
    if A[0] < 1 or A[-1] > N:
        raise InputError(f"set must lie in [1, {N}]")
    p = find_prime(N) if p is None else p
    emb = IntervalEmbedding(N, p)
    f = embed_set(A, emb)
    v = f.values
    delta = len(A) / N
    rec = PassRecord(N, p, len(A), delta)
    rec.ap4_free = count_ap4_integers(A) == 0
    C = config.bottom_out_C
    rec.bottom_out = N <= math.exp(min(C * delta ** (-C), 700.0))
    rec.plarge_vacuous = p <= math.exp(min(config.plarge_C * delta ** (-config.plarge_C), 700.0))

    gap = anomaly_gap(f, emb)
    rec.gap = gap
    if gap.threshold_ratio < config.gap_ratio_min:
        raise PipelineFailure("anomaly_gap", "gap condition not met",
                              {"ratio": gap.threshold_ratio, "min": config.gap_ratio_min})
    if p > ORACLE_MAX_P and not config.guard_override:
        raise PipelineFailure("decompose", f"oracle cost guard: p={p} exceeds p <= {ORACLE_MAX_P}")

    def oracle(res, eta_, K_, seed_):
        return brute_inverse_u3(res, eta_, K_, config.threshold, guard_override=config.guard_override,
                                seed=seed_, workers=config.workers)

    try:
        factor, trace = kvn_decompose(v.real, config.eta, emb, K=config.K, oracle=oracle,
                                      threshold=config.threshold, seed=config.seed,
                                      workers=config.workers)
    except IterationCapError as exc:
        raise PipelineFailure("decompose", "iteration cap reached") from exc
    rec.iterations = len(trace.iterations)
    rec.residual_u3 = trace.final_residual_u3
    if trace.status != "converged":
        raise PipelineFailure("decompose", f"kvn stopped: {trace.status}",
                              {"residual_u3": trace.final_residual_u3})
    g = cond_expect(v, factor.with_trivial(emb)).values
    lhs = abs(lambda4(v, v, v, v) - lambda4(g, g, g, g))
    rhs = 4 * u3_norm(v - g)
    rec.control_lhs, rec.control_rhs = lhs, rhs
    rec.checks["u3_control"] = lhs <= rhs + INEQUALITY_TOL

    inc = density_increment_atom(f, factor, emb, config.c)
    if inc is None:
        raise PipelineFailure("density_increment", "no atom with density increment")
    rec.atom_size, rec.atom_density = inc.atom.size, inc.density
    rec.checks["atom_recount"] = sum(1 for x in inc.atom if int(x) in set(A)) == round(inc.density * inc.atom.size)

    cert = linearise_quadratic_atom(factor, inc.atom, emb)
    rec.certificate = cert
    rec.checks["certificate"] = True  # lineariser validates before returning
    parts = [q.elements() for q in cert.pieces]
    eps = config.c * delta / 2
    i, _, mean = pigeonhole_best_part(parts, v.real, eps)
    piece = cert.pieces[i]
    prog = integer_progression(piece, N)
    if prog is None:
        raise DefectError("chosen piece is not an integer progression inside [N]")
    start, step, length = prog
    if step < 0:
        start, step = start + step * (length - 1), -step
    rec.checks["freiman"] = True
    rec.increment = IncrementResult((start, step, length), mean, delta)
    return rec


def rescale(A, progression) -> list[int]:
    """Positions k in [1, length] with start + (k-1) step in A."""
    start, step, length = progression
    s = set(int(a) for a in A)
    return [k for k in range(1, length + 1) if start + (k - 1) * step in s]


def r4_iterate(A, N: int, config: R4Config | None = None) -> IterationReport:
    """Repeat the increment pass on rescaled copies of A until a stage fails or passes run out."""
    config = config or R4Config()
    passes: list[PassRecord] = []
    cur, n = sorted(set(int(a) for a in A)), int(N)
    for _ in range(config.max_passes):
        if not cur:
            return IterationReport(passes, "stopped", "empty rescaled set", "rescale")
        try:
            rec = increment_pass(cur, n, config)
        except PipelineFailure as exc:
            # keep partial diagnostics of the failed pass
            partial = PassRecord(n, find_prime(n), len(cur), len(cur) / n)
            partial.checks["failure"] = str(exc)
            passes.append(partial)
            return IterationReport(passes, "stopped", exc.reason, exc.stage)
        passes.append(rec)
        if rec.bottom_out and config.stop_at_bottom_out:
            return IterationReport(passes, "stopped", "bottom-out condition reached", "bottom_out")
        new = rescale(cur, rec.increment.progression)
        if rec.ap4_free and count_ap4_integers(new) != 0:
            raise DefectError("rescaling created a 4-term progression")
        cur, n = new, rec.increment.progression[2]
    return IterationReport(passes, "stopped", "pass limit reached", "driver")


# ---------------------------------------------------------------------------
# generators


def planted_quadratic(N: int, p: int, delta: float = 0.5, amplitude: float = 0.3,
                      a: int = 3, b: int = 0) -> np.ndarray:
    """delta 1_[N] + amplitude * cos(2 pi (a x^2 + b x)/p) on [N], clipped into [0, 1]."""
    x = np.arange(p, dtype=np.int64)
    mask = np.zeros(p, dtype=bool)
    mask[1:N + 1] = True
    ph = ((a * x % p) * x + b * x) % p / p
    return np.where(mask, np.clip(delta + amplitude * np.cos(2 * np.pi * ph), 0.0, 1.0), 0.0)


def random_set(N: int, delta: float, seed: int) -> list[int]:
    if not 0 < delta <= 1:
        raise InputError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    keep = rng.random(N) < delta
    return [int(i) + 1 for i in np.flatnonzero(keep)]


def planted_quadratic_set(N: int, p: int, seed: int, delta: float = 0.5, amplitude: float = 0.3,
                          a: int = 3) -> list[int]:
    """Random subset of [N] whose membership probability follows planted_quadratic."""
    prob = planted_quadratic(N, p, delta, amplitude, a)
    rng = np.random.default_rng(seed)
    u = rng.random(p)
    return [int(x) for x in range(1, N + 1) if u[x] < prob[x]]

