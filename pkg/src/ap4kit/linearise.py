"""Exact partitions of linear and quadratic Bohr atoms into arithmetic progressions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bohr import BohrSpec, build_bohr
from .cyclic import IntervalEmbedding, as_values
from .errors import DefectError, InputError
from .factors import (QuadraticFactor, QuadraticPhaseOnAP, cell_index, linear_atom_bohr_spec,
                      phase_array)
from .recurrence.search import kronecker_search, schmidt_search


@dataclass(frozen=True)
class APPiece:
    start: int
    step: int
    length: int
    p: int

    def __post_init__(self):
        if self.length < 1:
            raise InputError("piece length must be >= 1")
        object.__setattr__(self, "start", int(self.start) % self.p)
        object.__setattr__(self, "step", int(self.step) % self.p if self.length > 1 else 0)

    def elements(self) -> np.ndarray:
        return (self.start + np.arange(self.length, dtype=np.int64) * self.step) % self.p

    def is_genuine(self) -> bool:
        return self.length == 1 or (self.step != 0 and self.length <= self.p)


@dataclass
class PartitionCertificate:
    p: int
    target: np.ndarray
    pieces: list
    report: dict = field(default_factory=dict)

    @property
    def piece_count(self) -> int:
        return len(self.pieces)

    def to_text(self) -> str:
        lines = [f"modulus {self.p}", f"target-size {self.target.size}"]
        lines += [f"piece {q.start} {q.step} {q.length}" for q in self.pieces]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PartitionCertificate":
        p = size = None
        pieces = []
        for no, raw in enumerate(text.splitlines(), 1):
            parts = raw.split()
            if not parts:
                continue
            try:
                if parts[0] == "modulus":
                    p = int(parts[1])
                elif parts[0] == "target-size":
                    size = int(parts[1])
                elif parts[0] == "piece":
                    pieces.append(tuple(int(v) for v in parts[1:4]))
                else:
                    raise ValueError(parts[0])
            except (ValueError, IndexError) as exc:
                raise InputError(f"certificate line {no}: cannot parse {raw!r}") from exc
        if p is None or size is None:
            raise InputError("certificate is missing its modulus or target-size line")
        aps = [APPiece(s, st, n, p) for s, st, n in pieces]
        target = np.sort(np.concatenate([a.elements() for a in aps])) if aps else np.zeros(0, np.int64)
        cert = cls(p, target, aps)
        if target.size != size or not validate_partition(cert):
            raise InputError("certificate does not revalidate")
        return cert


def validate_partition(cert: PartitionCertificate) -> bool:
    """Pieces are genuine, pairwise disjoint, and their union is exactly the target."""
    if not all(q.is_genuine() for q in cert.pieces):
        return False
    elems = [q.elements() for q in cert.pieces]
    if any(np.unique(e).size != e.size for e in elems):
        return False
    allv = np.concatenate(elems) if elems else np.zeros(0, np.int64)
    if np.unique(allv).size != allv.size:
        return False
    return np.array_equal(np.sort(allv), np.unique(np.asarray(cert.target, dtype=np.int64)))


def integer_progression(piece: APPiece, N: int):
    """(first, difference, length) as integers when the piece lies in [1, N] and is an integer AP there."""
    e = piece.elements()
    if e.min() < 1 or e.max() > N:
        return None
    if piece.length == 1:
        return int(e[0]), 0, 1
    diff = int(e[1]) - int(e[0])
    if not np.all(np.diff(e.astype(np.int64)) == diff):
        return None
    return int(e[0]), diff, piece.length


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as (first index, length)."""
    m = np.concatenate([[False], np.asarray(mask, dtype=bool), [False]])
    d = np.diff(m.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return [(int(s), int(e - s)) for s, e in zip(starts, ends)]


def _split_even(n: int, k: int) -> list[tuple[int, int]]:
    """Split range(n) into ceil(n/k) consecutive blocks with lengths differing by at most 1."""
    if n == 0:
        return []
    parts = max(1, math.ceil(n / max(1, k)))
    sizes = [n // parts + (1 if i < n % parts else 0) for i in range(parts)]
    out, s = [], 0
    for z in sizes:
        out.append((s, z))
        s += z
    return out


def _merge_adjacent(pieces: list) -> list:
    """Join consecutive pieces where one continues the other with the same step."""
    out: list = []
    for q in pieces:
        prev = out[-1] if out else None
        if prev is not None and q.step == prev.step and prev.length > 1 and \
                q.start == (prev.start + prev.length * prev.step) % q.p:
            out[-1] = APPiece(prev.start, prev.step, prev.length + q.length, q.p)
        else:
            out.append(q)
    return out


# ---------------------------------------------------------------------------
# pigeonhole


def pigeonhole_best_part(parts, f, epsilon: float):
    """Index i with P_B(A_i) > eps/m and E_{A_i} f >= E_B f - eps, maximising E_{A_i} f.

    Returns (i, P_B(A_i), E_{A_i} f) with a 0-based index.
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    parts = [np.unique(np.asarray(a, dtype=np.int64)) for a in parts]
    m = len(parts)
    if m == 0 or any(a.size == 0 for a in parts):
        raise InputError("parts must be a non-empty list of non-empty sets")
    B = np.concatenate(parts)
    if np.unique(B).size != B.size:
        raise InputError("parts are not disjoint")
    v = as_values(f).real
    if np.any(v < 0) or np.any(v > 1 + 1e-12):
        raise InputError("f must take values in [0, 1]")
    mean_B = float(v[B].sum() / B.size)
    best = None
    for i, a in enumerate(parts):
        dens = a.size / B.size
        mean = float(v[a].sum() / a.size)
        if dens > epsilon / m and mean >= mean_B - epsilon:
            if best is None or mean > best[2]:
                best = (i, dens, mean)
    if best is None:
        raise DefectError("no part satisfies the pigeonhole conclusion")
    return best


# ---------------------------------------------------------------------------
# linear atoms


def linearise_linear_atom(spec: BohrSpec, emb: IntervalEmbedding, members=None) -> PartitionCertificate:
    """Partition B_alpha(S, rho) intersected with [N] into progressions of a common step r.

    ``members`` (boolean mask over Z/pZ) overrides the Bohr set when the atom
    is known exactly, e.g. a half-open factor cell.
    """
    p, N = emb.p, emb.N
    if spec.p != p:
        raise InputError("modulus mismatch")
    mask = build_bohr(spec).mask() if members is None else np.asarray(members, dtype=bool)
    inside = emb.interval_mask() & mask
    target = np.flatnonzero(inside)
    d1 = spec.rank
    if d1 == 0:
        if members is not None and target.size != N:
            raise InputError("rank-0 atom must be all of [N]")
        return PartitionCertificate(p, target, [APPiece(1, 1, N, p)], {"r": 1, "d1": 0})
    freqs = [s / p for s in spec.S] + [1.0 / p]
    r, val = kronecker_search(freqs, N)
    if r < 1:
        raise DefectError("recurrence search failed")
    seg = math.ceil(N ** (1.0 / (d1 + 1)))
    pieces = []
    for a in range(1, min(r, N) + 1):
        cls_ = np.arange(a, N + 1, r)
        for s0, ln in _split_even(cls_.size, seg):
            block = cls_[s0:s0 + ln]
            for i, k in _runs(inside[block]):
                pieces.append(APPiece(int(block[i]), r, k, p))
    cert = PartitionCertificate(p, target, pieces, {
        "r": r, "recurrence_value": val, "segment_length": seg, "d1": d1,
        "predicted": 2 ** d1 * N ** (1 - 1 / (d1 + 1)),
    })
    if not validate_partition(cert):
        raise DefectError("linear lineariser produced an invalid partition")
    return cert


# ---------------------------------------------------------------------------
# pure quadratic pieces


def linearise_pure_quadratic(P: APPiece, phases, K: int, cells, membership=None,
                             c0: float | None = None) -> PartitionCertificate:
    """Partition {n in [1, M] : every phase lies in its selected cell} along P into progressions.

    Membership is evaluated directly at each position (``membership`` may
    supply it exactly); the quadratic structure only fixes how positions are
    grouped, so the output is exact whatever the recurrence quality.
    """
    p, M = P.p, P.length
    phases = list(phases)
    d = len(phases)
    cells = list(cells)
    if len(cells) != d:
        raise InputError("one cell index per phase is required")
    for ph in phases:
        if not isinstance(ph, QuadraticPhaseOnAP) or ph.length != M:
            raise InputError("every phase must be defined on positions 1..M of P")
    n = np.arange(1, M + 1)
    direct = np.ones(M, dtype=bool)
    for ph, j in zip(phases, cells):
        direct &= cell_index(ph.at(n), K) == j
    mem = direct if membership is None else np.asarray(membership, dtype=bool)
    if mem.shape != (M,):
        raise InputError("membership must have one entry per position")
    elems = P.elements()
    target = elems[mem]
    if d == 0 or mem.all() or not mem.any():
        pieces = [P] if mem.all() else [APPiece(int(elems[i]), P.step, k, p) for i, k in _runs(mem)]
        return PartitionCertificate(p, target, pieces, {"d": d})

    alphas = [ph.a for ph in phases]
    r, val = schmidt_search(alphas, max(1, math.isqrt(M)))
    gamma = math.inf if val <= 0 or M < 2 else math.log(1 / val) / math.log(M)
    c0_used = c0 if c0 is not None else gamma * d * d / 2
    k = M if math.isinf(c0_used) else max(1, math.ceil(M ** (c0_used / (4 * d * d))))
    T = max(1, math.ceil(k ** (1 / (2 * d))))

    pieces, run_counts, s_values = [], [], []
    for a in range(1, min(r, M) + 1):
        cls_ = np.arange(a, M + 1, r)
        for s0, ln in _split_even(cls_.size, k):
            chunk = cls_[s0:s0 + ln]
            n0 = int(chunk[0])
            betas = [float(2 * ph.a * n0 * r + ph.b * r) for ph in phases]
            s, _ = kronecker_search(betas, max(1, math.isqrt(ln)))
            s_values.append(s)
            for b in range(min(s, ln)):
                sub = chunk[b::s]
                for q0, qlen in _split_even(sub.size, T):
                    Q = sub[q0:q0 + qlen]
                    runs = _runs(mem[Q - 1])
                    run_counts.append(len(runs))
                    for i, ln_run in runs:
                        first = int(Q[i])
                        pieces.append(APPiece(int(elems[first - 1]), r * s * P.step, ln_run, p))
    pieces = _merge_adjacent(pieces)
    cert = PartitionCertificate(p, target, pieces, {
        "d": d, "r": r, "schmidt_value": val, "gamma": gamma, "k": k, "T": T,
        "max_s": max(s_values, default=0),
        "max_runs_per_Q": max(run_counts, default=0), "predicted_runs": (2 * d) ** d,
        "rewrite_mismatches": int(np.count_nonzero(direct != mem)),
    })
    if not validate_partition(cert):
        raise DefectError("quadratic lineariser produced an invalid partition")
    return cert


# ---------------------------------------------------------------------------
# full quadratic atoms


def linearise_quadratic_atom(factor: QuadraticFactor, B2_atom, emb: IntervalEmbedding,
                             small_piece_cutoff: int | None = None) -> PartitionCertificate:
    """Partition (B2 atom) intersected with [N] into progressions.

    The enclosing linear atom is split first; short pieces become singletons
    and each long piece is refined by the quadratic phases active on it.
    """
    p, N, K = emb.p, emb.N, factor.K
    if factor.p != p:
        raise InputError("modulus mismatch")
    atom = np.unique(np.asarray(B2_atom, dtype=np.int64) % p)
    if atom.size == 0:
        raise InputError("empty atom")
    lab2 = factor.B2.labels
    full = lab2 == lab2[atom[0]]
    # accept a B2 atom or its trace on [N] (an atom of B2 v B_triv)
    in_N = np.zeros(p, dtype=bool)
    in_N[atom] = True
    if not (np.all(full[atom]) and (np.array_equal(in_N, full) or np.array_equal(in_N, full & emb.interval_mask()))):
        raise InputError("B2_atom is not an atom of the factor")
    x0 = int(atom[0])
    lab1 = factor.B1.labels
    b1_mask = lab1 == lab1[x0]
    target_mask = np.zeros(p, dtype=bool)
    target_mask[atom] = True
    target_mask &= emb.interval_mask()
    target = np.flatnonzero(target_mask)
    d1 = factor.d1
    cutoff = small_piece_cutoff if small_piece_cutoff is not None else math.ceil(N ** (1 / (2 * (d1 + 1))))

    # membership comes from the exact mask; the Bohr data only needs distinct frequencies
    distinct = {}
    for ph in factor.linear_phases:
        distinct.setdefault(ph.xi % p, ph)
    distinct = list(distinct.values())
    spec = linear_atom_bohr_spec(distinct, K, p, x0) if d1 else BohrSpec.centred(p, (), 0.25)
    lin = linearise_linear_atom(spec, emb, members=b1_mask)
    phases = factor.phases_for_atom(np.array([x0]))
    cells = [int(cell_index(phase_array(ph, p)[x0], K)) for ph in phases]

    pieces, sub_reports = [], []
    singles = 0
    for piece in lin.pieces:
        el = piece.elements()
        if piece.length < cutoff:
            for x in el[target_mask[el]]:
                pieces.append(APPiece(int(x), 0, 1, p))
                singles += 1
            continue
        on = [ph.on_progression(piece.start, piece.step, piece.length, p) for ph in phases]
        sub = linearise_pure_quadratic(piece, on, K, cells, membership=target_mask[el])
        pieces.extend(sub.pieces)
        sub_reports.append(sub.report)
    d2 = len(phases)
    cert = PartitionCertificate(p, target, pieces, {
        "d1": d1, "d2": d2, "linear_pieces": lin.piece_count, "singletons": singles,
        "cutoff": cutoff,
        "predicted": max(1, d2) ** d2 * N ** (1 - 1 / ((d1 + 1) * (d2 + 1) ** 3)),
        "max_runs_per_Q": max((s.get("max_runs_per_Q", 0) for s in sub_reports), default=0),
        "rewrite_mismatches": sum(s.get("rewrite_mismatches", 0) for s in sub_reports),
    })
    if not validate_partition(cert):
        raise DefectError("quadratic atom lineariser produced an invalid partition")
    return cert
