"""
Counting four-term progressions with Fourier tools
==================================================

The quadrilinear form Lambda counts 4-APs inside Z/pZ. Embedding [1, N]
with p > 4N means no progression wraps around, so cyclic counts are
integer counts. The U^3 norm controls Lambda, and quadratic phases are
exactly the functions that saturate it.
"""

import numpy as np

from ap4kit.cyclic import IntervalEmbedding, count_ap4_integers, embed_set, find_prime, greedy_ap4_free
from ap4kit.uniformity import check_gvn, lambda4, u2_norm, u3_norm

# %%
# The interval [1, 25] in Z/101Z
# ------------------------------
# Lambda * p^2 counts pairs (x, h), including h = 0 and both directions.
N = 25
p = find_prime(N)
emb = IntervalEmbedding(N, p)
f = embed_set(range(1, N + 1), emb).values
count = lambda4(f, f, f, f).real * p ** 2
print(f"p = {p}, Lambda * p^2 = {count:.6f}")
print("increasing 4-APs:", count_ap4_integers(range(1, N + 1)), " N^2/6 =", round(N * N / 6, 1))

# %%
# A 4-AP-free set only sees the trivial progressions (h = 0)
A = greedy_ap4_free(30)
g = embed_set(A, IntervalEmbedding(30, find_prime(30))).values
print(f"greedy set of size {len(A)}: Lambda * p^2 = {lambda4(g, g, g, g).real * find_prime(30) ** 2:.6f}")

# %%
# Quadratic phases are invisible to U^2 but saturate U^3
# ------------------------------------------------------
x = np.arange(p)
quad = np.exp(2j * np.pi * (3 * x * x % p) / p)
print(f"U2 of e(3x^2/p) = {u2_norm(quad):.4f}   U3 = {u3_norm(quad):.4f}")
noise = np.exp(2j * np.pi * np.random.default_rng(0).random(p))
print(f"U2 of random phases = {u2_norm(noise):.4f}   U3 = {u3_norm(noise):.4f}")

# %%
# Generalised von Neumann: |Lambda| never exceeds the smallest U^3 norm
r = check_gvn(quad, noise, np.ones(p), quad)
print(f"|Lambda| = {r.lambda_abs:.4f} <= min U3 = {r.min_u3:.4f}: {r.holds}")
