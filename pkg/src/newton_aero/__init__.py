"""Convex bodies of minimal resistance in a rarefied medium.

Polyhedral convex functions and their conjugates, the Hessian measure that
carries the dual resistance, the classical radial body, heel-shaped bodies
with polygonal fronts, and plane-symmetric bodies built from a profile ODE.
"""

__version__ = "0.1.0"

from .convex_core import (CheckReport, Domain2, GridConvexFn, PolyConvexFn, Subdiff,
                          check_C_M, check_C_M_star, conjugate, convexify, subdifferential)
from .errors import (CalibrationError, CanonicalizationError, ClassMembershipError, DomainError,
                     MeasureError, NewtonAeroError, OrientationError, SingularityError,
                     SlopeBoundError)
from .hessian_measure import (AtomicMeasure2, f0_density_smooth, f0_merge_curve, f0_polyhedral,
                              steiner_check)
from .resistance import (convergence_harness, dual_resistance, gradient_histogram,
                         legendre_eigenvalues, primal_resistance, strict_convexity_audit,
                         tilde_transform)

__all__ = [
    "AtomicMeasure2", "CalibrationError", "CanonicalizationError", "CheckReport",
    "ClassMembershipError", "Domain2", "DomainError", "GridConvexFn", "MeasureError",
    "NewtonAeroError", "OrientationError", "PolyConvexFn", "SingularityError",
    "SlopeBoundError", "Subdiff", "check_C_M", "check_C_M_star", "conjugate", "convergence_harness",
    "convexify", "dual_resistance", "f0_density_smooth", "f0_merge_curve", "f0_polyhedral",
    "gradient_histogram", "legendre_eigenvalues", "primal_resistance", "steiner_check",
    "strict_convexity_audit", "subdifferential", "tilde_transform",
]
