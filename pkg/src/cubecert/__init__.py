"""Certificates and counter-certificates over the boolean cube: sum-of-squares
bounds, pseudo-densities, psd/nonnegative factorizations of pattern matrices,
entropy-based approximation procedures, and a max-CSP front end.
"""

from .cube import (CubeFunction, MatrixValuedCubeFunction, ProductMeasure,
                   degree, lift_function, restrict_point, walsh_transform)
from .liftmat import (NonnegFactorization, PatternMatrix, PsdFactorization,
                      build_pattern_matrix, explicit_psd_factorization,
                      junta_factorization, ld_functional, pre_balance,
                      rescale_factorization, verify_nonneg_factorization,
                      verify_psd_factorization)
from .learn import (JuntaTest, TestFamily, approx_against_family, gibbs_state,
                    junta_approx, low_degree_square_approx,
                    mirror_descent_approx, taylor_square_approx)
from .pseudo import (PseudoDensity, grigoriev_knapsack, knapsack_objective,
                     lopsided_pseudo_density, moment_matrix,
                     validate_local_pseudo_density,
                     validate_sos_pseudo_density)
from .sos import (SosCertificate, sos_degree, sos_feasibility,
                  sos_upper_bound, square_decomposition, verify_certificate)
from .symmat import (DensityMatrix, SymMatrix, psd_check,
                     quantum_relative_entropy)

__version__ = "0.1.0"
