"""Text formats: sets, functions, lattices, partition certificates, traces and reports."""
from __future__ import annotations

import csv
import io as _io

import numpy as np

from .errors import InputError
from .recurrence.lattice import Lattice


def format_set(A, N: int) -> str:
    return f"# N={N}\n" + "".join(f"{a}\n" for a in sorted(set(int(a) for a in A)))


def parse_set(text: str) -> tuple[list[int], int]:
    """Parse a set file; returns (sorted elements, N)."""
    lines = text.splitlines()
    if not lines or not lines[0].replace(" ", "").startswith("#N="):
        raise InputError("set file line 1: expected '# N=<integer>'")
    try:
        N = int(lines[0].split("=", 1)[1])
    except ValueError as exc:
        raise InputError("set file line 1: N is not an integer") from exc
    if N < 1:
        raise InputError("set file line 1: N must be >= 1")
    out = set()
    for no, raw in enumerate(lines[1:], 2):
        s = raw.strip()
        if not s:
            continue
        try:
            a = int(s)
        except ValueError as exc:
            raise InputError(f"set file line {no}: not an integer: {s!r}") from exc
        if not 1 <= a <= N:
            raise InputError(f"set file line {no}: {a} outside [1, {N}]")
        out.add(a)
    return sorted(out), N


def format_function(values) -> str:
    v = np.asarray(values, dtype=complex)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "real", "imag"])
    for i, z in enumerate(v):
        w.writerow([i, repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()


def parse_function(text: str) -> np.ndarray:
    """Parse `index,real,imag` rows (an optional header is skipped); indices must be 0..p-1."""
    rows = []
    for no, row in enumerate(csv.reader(_io.StringIO(text)), 1):
        if not row or (no == 1 and row[0].strip() == "index"):
            continue
        if len(row) != 3:
            raise InputError(f"function file line {no}: expected 3 fields")
        try:
            rows.append((int(row[0]), float(row[1]), float(row[2])))
        except ValueError as exc:
            raise InputError(f"function file line {no}: cannot parse {row!r}") from exc
    if not rows:
        raise InputError("function file is empty")
    idx = [r[0] for r in rows]
    if sorted(idx) != list(range(len(rows))):
        raise InputError("function file indices must be 0..p-1, each once")
    v = np.zeros(len(rows), dtype=complex)
    for i, re, im in rows:
        v[i] = complex(re, im)
    return v


def parse_lattice(text: str) -> Lattice:
    lines = [s for s in text.splitlines() if s.strip()]
    if not lines or not lines[0].replace(" ", "").startswith("d="):
        raise InputError("lattice file line 1: expected 'd=<dim>'")
    try:
        d = int(lines[0].split("=", 1)[1])
    except ValueError as exc:
        raise InputError("lattice file line 1: bad dimension") from exc
    if len(lines) != d + 1:
        raise InputError(f"lattice file: expected {d} basis rows, got {len(lines) - 1}")
    rows = []
    for no, s in enumerate(lines[1:], 2):
        try:
            row = [float(t) for t in s.replace(",", " ").split()]
        except ValueError as exc:
            raise InputError(f"lattice file line {no}: not numeric") from exc
        if len(row) != d:
            raise InputError(f"lattice file line {no}: expected {d} entries")
        rows.append(row)
    return Lattice(np.array(rows))


def format_lattice(L: Lattice) -> str:
    rows = [" ".join(repr(float(x)) for x in r) for r in L.basis]
    return f"d={L.dim}\n" + "\n".join(rows) + "\n"


TRACE_HEADER = "iter,energy_before,energy_after,u3_residual,correlation"


def format_trace(trace) -> str:
    out = [TRACE_HEADER]
    for i, r in enumerate(trace.iterations, 1):
        out.append(f"{i},{r.energy_before!r},{r.energy_after!r},{r.u3_residual!r},{r.correlation!r}")
    return "\n".join(out) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def format_report(pairs) -> str:
    """`key = value` lines in the given order."""
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in pairs)


def parse_report(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k] = v
    return out
