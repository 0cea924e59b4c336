"""
Energy increment and density increment
======================================

A planted quadratic bump is found by the brute-force inverse oracle and
absorbed into a quadratic factor. On a 4-AP-free set the same pipeline
finds an atom where the set is denser, linearises it, and picks a
progression carrying the increment.
"""

from ap4kit.cyclic import IntervalEmbedding, greedy_ap4_free
from ap4kit.factors import cond_expect
from ap4kit.structure import R4Config, kvn_decompose, planted_quadratic, r4_iterate
from ap4kit.uniformity import u3_norm

N, p, eta = 25, 101, 0.1
emb = IntervalEmbedding(N, p)
f = planted_quadratic(N, p, delta=0.5, amplitude=0.5)

# %%
# Koopman-von Neumann decomposition
factor, trace = kvn_decompose(f, eta, emb)
print(f"status: {trace.status}, iterations: {len(trace.iterations)}")
for it in trace.iterations:
    print(f"  energy {it.energy_before:.5f} -> {it.energy_after:.5f}, correlation {it.correlation:.4f}")
g = cond_expect(f, factor.with_trivial(emb)).values
print(f"U3 of f before: {u3_norm(f - cond_expect(f, factor.B1).values):.4f}   residual after: {u3_norm(f - g):.4f}")

# %%
# The r_4 driver on a greedy 4-AP-free subset of [1, 30]
A = greedy_ap4_free(30)
report = r4_iterate(A, 30, R4Config())
for i, rec in enumerate(report.passes, 1):
    if rec.increment is None:
        print(f"pass {i}: N={rec.N}, |A|={rec.size}, stopped")
        continue
    s, d, n = rec.increment.progression
    print(f"pass {i}: N={rec.N}, |A|={rec.size}, density {rec.delta:.3f} -> {rec.increment.new_density:.3f}"
          f" on {s} + {d}k, k < {n}")
print(f"driver stopped: {report.reason} ({report.stage})")
