"""Command-line front end.

Reports go to stdout (or --report) as `key = value` lines; timings go to
stderr so report bodies are reproducible byte for byte.
"""
from __future__ import annotations

import argparse
import re
import sys
import time

import numpy as np

from . import io as fio
from .cyclic import (IntervalEmbedding, count_ap4_integers, embed_set, find_prime, greedy_ap4_free,
                     is_ap4_free)
from .errors import Ap4Error, CostGuardError, DefectError, InputError, PipelineFailure
from .linearise import validate_partition
from .recurrence import (Lattice, a_lambda, f_lower_bound_trace, kronecker_search, schmidt_alternative,
                         schmidt_search, theta, theta_dual)
from .structure import (R4Config, brute_inverse_u3, increment_pass, kvn_decompose, planted_quadratic,
                        random_set)
from .uniformity import lambda4, u3_norm

EXIT_OK, EXIT_INPUT, EXIT_PIPELINE, EXIT_DEFECT = 0, 2, 3, 4


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _embedding(N: int, p: int | None) -> IntervalEmbedding:
    return IntervalEmbedding(N, find_prime(N) if p is None else p)


def _load_values(path: str, p: int | None):
    """A set file becomes its indicator on Z/pZ; a function file is taken as is.

    Returns (values, N or None, p).
    """
    text = _read(path)
    if text.lstrip().startswith("#"):
        A, N = fio.parse_set(text)
        emb = _embedding(N, p)
        return embed_set(A, emb).values, N, emb.p
    v = fio.parse_function(text)
    if p is not None and p != v.size:
        raise InputError(f"--p {p} does not match the function length {v.size}")
    return v, None, v.size


# ---------------------------------------------------------------------------
# commands


def cmd_count_ap4(args):
    A, N = fio.parse_set(_read(args.set_file))
    if not A:
        raise InputError("empty set")
    emb = _embedding(N, args.p)
    f = embed_set(A, emb).values
    lam = lambda4(f, f, f, f).real
    delta = len(A) / N
    m = delta * emb.interval_mask()
    model = lambda4(m, m, m, m).real
    gap = abs(lam - model)
    return [("command", "count-ap4"), ("N", N), ("p", emb.p), ("size", len(A)),
            ("lambda_p2", int(round(lam * emb.p ** 2))), ("increasing_4aps", count_ap4_integers(A)),
            ("delta", delta), ("lambda", lam), ("lambda_model", model), ("gap", gap),
            ("gap_ratio", gap / delta ** 4)]


def cmd_u3(args):
    if args.quadratic is not None:
        if args.p is None:
            raise InputError("--quadratic needs --p")
        a, b, c = args.quadratic
        x = np.arange(args.p)
        v = np.exp(2j * np.pi * (((a * x % args.p) * x + b * x) % args.p + c) / args.p)
        src = f"quadratic {a} {b} {c}"
    elif args.file:
        v, _, _ = _load_values(args.file, args.p)
        src = args.file
    else:
        raise InputError("give a file or --quadratic")
    out = [("command", "u3"), ("source", src), ("p", v.size), ("algorithm", args.algorithm)]
    algs = ["composed", "direct"] if args.algorithm == "both" else [args.algorithm]
    vals = {a: u3_norm(v, a, guard_override=args.guard_override, workers=args.threads) for a in algs}
    for a in algs:
        out.append((f"u3_{a}", vals[a]))
    if len(algs) == 2:
        out.append(("agreement_delta", abs(vals["composed"] - vals["direct"])))
    return out


def _decompose_inputs(args):
    v, N, p = _load_values(args.file, args.p)
    if N is None:
        nz = np.flatnonzero(np.abs(v) > 0)
        N = args.N if args.N is not None else (int(nz.max()) if nz.size else 1)
    return v, IntervalEmbedding(N, p)


def cmd_decompose(args):
    v, emb = _decompose_inputs(args)
    if np.any(np.abs(v.imag) > 0):
        raise InputError("decompose needs a real function")
    if emb.p > 512 and not args.guard_override:
        raise CostGuardError("inverse-U3 oracle guard", 512, emb.p)
    thr = args.threshold

    def oracle(res, eta, K, seed):
        return brute_inverse_u3(res, eta, K, thr, guard_override=args.guard_override, seed=seed,
                                workers=args.threads)

    factor, trace = kvn_decompose(v.real, args.eta, emb, K=args.K, oracle=oracle, threshold=thr,
                                  seed=args.seed, workers=args.threads)
    if args.trace_csv:
        _write(args.trace_csv, fio.format_trace(trace))
    energies = [r.energy_after for r in trace.iterations]
    out = [("command", "decompose"), ("N", emb.N), ("p", emb.p), ("seed", args.seed),
           ("eta", args.eta), ("K", trace.config["K"]), ("threshold", trace.config["threshold"]),
           ("status", trace.status), ("iterations", len(trace.iterations)),
           ("final_u3_residual", trace.final_residual_u3), ("energies", energies),
           ("d1", factor.d1), ("d2", factor.d2), ("atoms_B2", factor.B2.n_atoms)]
    if trace.iterations:
        out.append(("min_increment", trace.min_increment()))
    return out


def _config(args) -> R4Config:
    return R4Config(eta=args.eta, K=args.K, threshold=args.threshold, c=args.c,
                    gap_ratio_min=args.gap_min, seed=args.seed, workers=args.threads,
                    guard_override=args.guard_override)


def cmd_increment(args):
    A, N = fio.parse_set(_read(args.set_file))
    if not A:
        raise InputError("empty set")
    cfg = _config(args)
    head = [("command", "increment"), ("N", N), ("size", len(A)), ("seed", args.seed),
            ("eta", cfg.eta), ("K", cfg.K), ("c", cfg.c)]
    try:
        rec = increment_pass(A, N, cfg, p=args.p)
    except PipelineFailure as exc:
        exc.detail["report_head"] = head
        raise
    inc = rec.increment
    start, step, length = inc.progression
    members = [start + k * step for k in range(length)]
    recount = sum(1 for x in members if x in set(A)) / length
    if args.certificate:
        _write(args.certificate, rec.certificate.to_text())
    return head + [
        ("p", rec.p), ("delta", rec.delta), ("gap_ratio", rec.gap.threshold_ratio),
        ("ap4_free", rec.ap4_free), ("bottom_out", rec.bottom_out),
        ("plarge_vacuous", rec.plarge_vacuous), ("kvn_iterations", rec.iterations),
        ("u3_residual", rec.residual_u3), ("u3_control_holds", rec.checks.get("u3_control")),
        ("atom_size", rec.atom_size), ("atom_density", rec.atom_density),
        ("certificate_pieces", rec.certificate.piece_count), ("certificate_valid", validate_partition(rec.certificate)),
        ("progression_start", start), ("progression_step", step), ("progression_length", length),
        ("new_density", inc.new_density), ("density_recheck", recount == inc.new_density),
        ("old_density", inc.old_density), ("status", "pass complete"),
    ]


def _parse_lattice_arg(spec: str) -> Lattice:
    m = re.fullmatch(r"(\d+(?:\.\d+)?)?Z(\d)", spec.strip())
    if m:
        return Lattice.integer(int(m.group(2)), float(m.group(1) or 1.0))
    return fio.parse_lattice(_read(spec))


def cmd_recur(args):
    sub = args.recur_command
    if sub in ("kronecker", "schmidt"):
        fn = kronecker_search if sub == "kronecker" else schmidt_search
        n, val = fn(args.alpha, args.N)
        return [("command", f"recur {sub}"), ("alpha", list(args.alpha)), ("N", args.N), ("n", n),
                ("value", val)]
    if sub == "theta-check":
        rng = np.random.default_rng(args.seed)
        worst_p = worst_a = 0.0
        for _ in range(args.seeds):
            d = int(rng.integers(1, args.dmax + 1))
            L = Lattice(rng.normal(size=(d, d)) + 2 * np.eye(d))
            for t in (0.5, 1.0, 2.0):
                x = rng.normal(size=d) * 3
                worst_p = max(worst_p, abs(theta(L, t, x).value - theta_dual(L, t, x).value))
            A = a_lambda(L, check=False)
            worst_a = max(worst_a, abs(A - L.det * theta(L, 1.0, np.zeros(d)).value))
        return [("command", "recur theta-check"), ("seeds", args.seeds), ("dmax", args.dmax),
                ("seed", args.seed), ("max_poisson_deviation", worst_p),
                ("max_a_lambda_deviation", worst_a), ("pass", max(worst_p, worst_a) <= 1e-9)]
    L = _parse_lattice_arg(args.lattice)
    if args.alpha:
        alpha = np.array(args.alpha, dtype=float)
        if alpha.size != L.dim:
            raise InputError(f"--alpha needs {L.dim} values")
    else:
        alpha = np.random.default_rng(args.seed).random(L.dim) @ L.basis.T
    head = [("command", f"recur {sub}"), ("lattice", args.lattice), ("d", L.dim), ("N", args.N),
            ("seed", args.seed), ("alpha", list(alpha))]
    if sub == "alternative":
        o = schmidt_alternative(L, alpha, args.N)
        out = head + [("branch", o.branch), ("F", o.F_value)]
        if o.branch == "relation_found":
            out += [("xi", list(o.xi)), ("q", o.q), ("residual", o.residual), ("weyl_sum", o.weyl_sum)]
        return out
    levels = f_lower_bound_trace(L, alpha, args.N)
    out = head + [("levels", len(levels))]
    all_ok = True
    for i, lv in enumerate(levels):
        ok = lv.trivial_ok and lv.descent_ok is not False and lv.identities_ok is not False
        all_ok &= ok
        out.append((f"level{i}", f"d={lv.d} N={lv.N} F={lv.F!r} A={lv.A!r} branch={lv.branch} "
                                 f"trivial_bound={'pass' if lv.trivial_ok else 'fail'} "
                                 f"descent={'pass' if lv.descent_ok is not False else 'fail'} "
                                 f"ratio={lv.measured_ratio!r}"))
    out.append(("all_exact_inequalities", "pass" if all_ok else "fail"))
    return out


def cmd_generate(args):
    kind, N = args.kind, args.N
    if N < 1:
        raise InputError("N must be >= 1")
    if kind == "quadratic-planted":
        p = find_prime(N) if args.p is None else args.p
        IntervalEmbedding(N, p)
        v = planted_quadratic(N, p, args.delta if args.delta is not None else 0.5, args.amplitude,
                              args.a)
        _write(args.out, fio.format_function(v))
        return None
    if kind == "interval":
        A = list(range(1, N + 1))
    elif kind == "random":
        A = random_set(N, args.delta if args.delta is not None else 0.5, args.seed)
    else:
        A = greedy_ap4_free(N)
        if not is_ap4_free(A):
            raise DefectError("greedy set contains a 4-term progression")
        if args.delta is not None and len(A) / N < args.delta:
            raise InputError(f"infeasible density: greedy set has density {len(A) / N:.4g} < {args.delta}")
    _write(args.out, fio.format_set(A, N))
    return None


# ---------------------------------------------------------------------------
# argument parsing


def _common(p):
    p.add_argument("--p", type=int, default=None, help="prime modulus (default: smallest prime in (4N, 8N])")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="worker threads for the parallel kernels")
    p.add_argument("--guard-override", action="store_true", help="lift brute-force cost guards")
    p.add_argument("--report", default=None, help="write the report here instead of stdout")


def _constants(p, eta=0.15, K=4):
    p.add_argument("--eta", type=float, default=eta)
    p.add_argument("--K", type=int, default=K)
    p.add_argument("--threshold", type=float, default=None, help="oracle correlation threshold (default 0.1 eta)")
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--gap-min", type=float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ap4kit", description="Four-term progression workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count-ap4", help="4-AP count of a set")
    p.add_argument("set_file")
    _common(p)
    p.set_defaults(func=cmd_count_ap4)

    p = sub.add_parser("u3", help="Gowers U^3 norm of a set or function")
    p.add_argument("file", nargs="?")
    p.add_argument("--algorithm", choices=["composed", "direct", "both"], default="composed")
    p.add_argument("--quadratic", type=int, nargs=3, metavar=("A", "B", "C"))
    _common(p)
    p.set_defaults(func=cmd_u3)

    p = sub.add_parser("decompose", help="energy-increment decomposition")
    p.add_argument("file")
    p.add_argument("--N", type=int, default=None, help="interval length for function files")
    p.add_argument("--trace-csv", default=None)
    _constants(p, eta=0.05, K=None)
    _common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("increment", help="one density-increment pass")
    p.add_argument("set_file")
    p.add_argument("--certificate", default=None, help="write the partition certificate here")
    _constants(p)
    _common(p)
    p.set_defaults(func=cmd_increment)

    p = sub.add_parser("recur", help="recurrence and lattice tools")
    rs = p.add_subparsers(dest="recur_command", required=True)
    for name in ("kronecker", "schmidt"):
        q = rs.add_parser(name)
        q.add_argument("--alpha", type=float, nargs="+", required=True)
        q.add_argument("--N", type=int, required=True)
        _common(q)
    q = rs.add_parser("theta-check")
    q.add_argument("--seeds", type=int, default=100)
    q.add_argument("--dmax", type=int, default=3)
    _common(q)
    for name in ("f-trace", "alternative"):
        q = rs.add_parser(name)
        q.add_argument("--lattice", required=True, help="Zd, RZd (e.g. 5Z2) or a lattice file")
        q.add_argument("--alpha", type=float, nargs="+", default=None)
        q.add_argument("--N", type=int, required=True)
        _common(q)
    p.set_defaults(func=cmd_recur)

    p = sub.add_parser("generate", help="write a test set or function")
    p.add_argument("kind", choices=["interval", "random", "ap4free-greedy", "quadratic-planted"])
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--amplitude", type=float, default=0.3)
    p.add_argument("--a", type=int, default=3, help="planted quadratic coefficient")
    p.add_argument("--out", default=None)
    _common(p)
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    report = getattr(args, "report", None)
    try:
        pairs = args.func(args)
        code = EXIT_OK
    except PipelineFailure as exc:
        pairs = list(exc.detail.get("report_head", [("command", args.command)]))
        pairs += [("status", "failed"), ("stage", exc.stage), ("reason", exc.reason)]
        pairs += [(k, v) for k, v in exc.detail.items() if k != "report_head"]
        code = EXIT_PIPELINE
    except (InputError, CostGuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DefectError, Ap4Error) as exc:
        print(f"internal defect: {exc}", file=sys.stderr)
        return EXIT_DEFECT
    if pairs is not None:
        _write(report, fio.format_report(pairs))
    print(f"elapsed_seconds = {time.perf_counter() - t0:.3f}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
