"""Determinant ratios of one-dimensional operators -d^2/dx^2 + R(x).

The ratio of (zeta-regularised) determinants of two such operators over
the same interval under boundary conditions M y(a) + N y(b) = 0 equals
det(M + N Y_1(b)) / det(M + N Y_2(b)), where Y_j is the fundamental matrix
of the homogeneous problem normalised to the identity at a.  When the
first operator annihilates a boundary-compatible solution the zero mode is
factored out instead (det_ratio_primed).  The oracle submodule locates
eigenvalues independently so every ratio can be checked against a
truncated spectral product.
"""

from .boundary import (BoundarySpec, SelfAdjointReport, characteristic,
                       check_self_adjoint, named_bc,
                       normalized_initial_data, reduced_boundary_form)
from .expr import (ExprDomainError, ExprNameError, ExprSyntaxError, evaluate,
                   free_params, parse, to_string)
from .gelfand import (ZERO_MODE_TOL, DetRatioReport, ZeroModePresent,
                      det_ratio, dirichlet_ratio)
from .odeprop import (FundamentalSolution, IntegratorStats, ModeTrajectory,
                      OdePropError, Problem, SolverControls, inner_product,
                      propagate_combination, propagate_fundamental)
from .oracle import (AiryValues, EigenvalueList, OracleError,
                     airy_reference, analytic_fundamental_twisted,
                     eigenvalue_scan, truncated_product_ratio)
from .zeromode import (BConstant, DetRatioPrimedReport, SelfAdjointnessError,
                       ZeroMode, ZeroModeDetection, ZeroModeError,
                       b_constant, det_ratio_primed, detect_zero_mode,
                       normalized_zero_mode)

__version__ = "0.1.0"

__all__ = [
    "AiryValues",
    "BConstant",
    "BoundarySpec",
    "DetRatioPrimedReport",
    "DetRatioReport",
    "EigenvalueList",
    "ExprDomainError",
    "ExprNameError",
    "ExprSyntaxError",
    "FundamentalSolution",
    "IntegratorStats",
    "ModeTrajectory",
    "OdePropError",
    "OracleError",
    "Problem",
    "SelfAdjointReport",
    "SelfAdjointnessError",
    "SolverControls",
    "ZERO_MODE_TOL",
    "ZeroMode",
    "ZeroModeDetection",
    "ZeroModeError",
    "ZeroModePresent",
    "airy_reference",
    "analytic_fundamental_twisted",
    "b_constant",
    "characteristic",
    "check_self_adjoint",
    "det_ratio",
    "det_ratio_primed",
    "detect_zero_mode",
    "dirichlet_ratio",
    "eigenvalue_scan",
    "evaluate",
    "free_params",
    "inner_product",
    "named_bc",
    "normalized_initial_data",
    "normalized_zero_mode",
    "parse",
    "propagate_combination",
    "propagate_fundamental",
    "reduced_boundary_form",
    "to_string",
    "truncated_product_ratio",
    "__version__",
]
