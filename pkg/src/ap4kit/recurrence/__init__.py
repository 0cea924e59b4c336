"""Diophantine recurrence via lattices and theta functions."""
from .descent import (AlternativeOutcome, DescentResult, TraceLevel, descent_step, f_lower_bound_trace,
                      is_primitive, schmidt_alternative, schmidt_via_theta, unimodular_completion)
from .lattice import (Lattice, ThetaEval, a_lambda, check_f_properties, enumerate_points, f_lattice,
                      f_lattice_fourier, stability_constant, theta, theta_dual, theta_many)
from .search import (convergent_denominators, kronecker_search, max_norm_at, schmidt_search,
                     weyl_rational_approx)
