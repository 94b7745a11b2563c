"""svilab: numerical diagnostics for robust set-valued inclusions F(p, x) in C.

The toolkit makes the variational machinery of such inclusions executable:
merit functions and their strong slopes, regularity constants, empirical
error bounds and Aubin moduli, and inner/outer sandwiches of the graphical
derivative of the solution mapping.
"""

from .geometry import (CoreMeasure, DimensionMismatch, GeneratorSet, HalfspaceSet,
                       PolyhedralCone, UnsupportedRecession, core_measure,
                       dist_point_to_cone, dist_point_to_set, excess,
                       excess_set_set, hausdorff, star_difference, tangent_cone)
from .regions import RegionSpec, as_vector, circle_directions, geometric_schedule, unit_directions
from .problems import (AffineScenario, ClosedForms, DescentOptions, DescentResult,
                       SolvCache, SviProblem, UncertainMap, image_set,
                       is_robust_feasible, list_builtins, make_builtin, merit,
                       merit_many, quadratic_orthant_problem,
                       robust_affine_problem, solve_descent, solv_brute)
from .slopes import (FanPrederivative, SigmaHEstimate, SigmaNablaEstimate,
                     SlopeEstimate, check_outer_prederivative,
                     check_slope_geq_sigmaH, fan_apply, partial_strong_slope,
                     sigma_H, sigma_nabla, strong_slope)
from .derivatives import (ConeMembershipVerdict, GraphBox, SandwichReport,
                          contingent_member_graph, direction_grid, gder_sample,
                          graph_distance, inner_approx_member,
                          outer_approx_member, sandwich_check)
from .concavity import (check_C_concavity, check_merit_convexity,
                        check_solv_convexity, sample_triples)
from .errorbounds import (AubinDivergence, AubinEstimate, aubin_bound_check,
                          aubin_divergence, check_lipschitz_lsc,
                          estimate_aubin_modulus, estimate_partial_lipschitz_rate,
                          verify_error_bound)

__version__ = "0.1.0"
