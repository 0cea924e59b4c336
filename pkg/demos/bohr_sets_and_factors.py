"""
Bohr sets, factors and progressions
===================================

An interval is an uncentred Bohr set of rank one. Joining level sets of
linear and quadratic phases gives a factor whose atoms can be cut,
exactly, into arithmetic progressions.
"""

import numpy as np

from ap4kit.bohr import BohrSpec, build_bohr, find_regular_radius, is_regular
from ap4kit.cyclic import IntervalEmbedding
from ap4kit.factors import LinearPhase, QuadraticFactor, QuadraticPhase, cond_expect, energy
from ap4kit.linearise import linearise_quadratic_atom

p, N = 101, 25

# %%
# [1, N] as B_alpha({1}, N/2p) with alpha = (N+1)/2p
spec = BohrSpec(p, (1,), ((N + 1) / (2 * p),), N / (2 * p))
print("members:", build_bohr(spec).members.tolist())

# %%
# Regularity is a finite check at the membership breakpoints
rho = find_regular_radius(p, [1, 7], [0.0, 0.0], 0.1)
print(f"regular radius in [0.1, 0.2]: {rho:.5f}", is_regular(BohrSpec.centred(p, [1, 7], rho)))

# %%
# A quadratic factor of complexity (1, 1) at resolution K = 4
F = QuadraticFactor(p, 4, [LinearPhase(3, 0.17)], [(QuadraticPhase(5, 2, 0.41), None)])
print(f"B1 atoms: {F.B1.n_atoms}, B2 atoms: {F.B2.n_atoms}")

# %%
# Conditional expectation is a projection; energy grows under refinement
f = np.random.default_rng(1).random(p)
print(f"energy on B1 = {energy(f, F.B1):.5f}  on B2 = {energy(f, F.B2):.5f}  ||f||^2 = {np.mean(f ** 2):.5f}")
print("E(E(f|B2)|B2) == E(f|B2):",
      np.allclose(cond_expect(cond_expect(f, F.B2), F.B2).values, cond_expect(f, F.B2).values))

# %%
# Every atom inside [1, N] splits into disjoint progressions
emb = IntervalEmbedding(N, p)
for atom in F.B2.atoms[:6]:
    if not np.any((atom >= 1) & (atom <= N)):
        continue
    cert = linearise_quadratic_atom(F, atom, emb)
    print(f"atom of size {atom.size}: {cert.piece_count} pieces")
    print("   " + cert.to_text().replace("\n", "\n   ").rstrip())
