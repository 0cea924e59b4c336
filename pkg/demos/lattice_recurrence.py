"""
Quadratic recurrence through theta functions
============================================

F averages a lattice theta function along the squares n^2 alpha. Either F
is large, or a short dual vector xi makes q xi . alpha nearly an integer;
in that case the problem drops one dimension.
"""

import numpy as np

from ap4kit.recurrence import (Lattice, a_lambda, f_lattice, f_lower_bound_trace, schmidt_alternative,
                               schmidt_search, schmidt_via_theta, theta, theta_dual)

# %%
# Poisson summation, checked numerically
L = Lattice(np.array([[1.3, 0.2], [0.1, 0.9]]))
x = np.array([0.3, -0.7])
print(f"theta = {theta(L, 1.0, x).value:.15f}\ndual  = {theta_dual(L, 1.0, x).value:.15f}")
print(f"A(5Z) = {a_lambda(Lattice.integer(1, 5)):.6f}")

# %%
# A rational alpha on 5Z^2 forces a relation and a descent to dimension 0
B = np.array([[5.0, 1.0], [0.3, 5.0]])
alpha = B @ [3 / 17, 2 / 5]
out = schmidt_alternative(Lattice(B), alpha, 200)
print(f"F = {out.F_value:.4f}, branch {out.branch}, q = {out.q}, xi = {np.round(out.xi, 4)}")
for lvl in f_lower_bound_trace(Lattice(B), alpha, 200):
    print(f"  d={lvl.d} N={lvl.N} F={lvl.F:.4f} branch={lvl.branch} descent_ok={lvl.descent_ok}")

# %%
# Theta-certified recurrence agrees with the exhaustive search
a = np.random.default_rng(21).random(1)
r = schmidt_via_theta(a, 1000, 25)
n, v = schmidt_search(a, 1000)
print(f"certified n={r.n}, ||n^2 a|| = {r.norms.max():.5f} <= {r.bound:.3f}; best over n <= 1000: {v:.2e} at n={n}")
print(f"F(Z, a, 1000) = {f_lattice(Lattice.integer(1), a, 1000):.4f}")
