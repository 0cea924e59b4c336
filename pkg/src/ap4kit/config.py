"""Shared numerical tolerances.

Every module reads its slack from here so that a single edit retunes the
whole package.
"""

# slack allowed on one-sided inequalities (control lemmas, bound checks)
INEQUALITY_TOL = 1e-9
# agreement required between two routes to the same identity
IDENTITY_TOL = 1e-12
# closeness of two independently summed floating expressions
AGREEMENT_TOL = 1e-10
# a function counts as 1-bounded if max |f| <= 1 + BOUNDED_TOL
BOUNDED_TOL = 1e-12
