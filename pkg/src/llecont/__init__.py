"""Steady states of the dual-pumped Lugiato-Lefever equation.

Constant solutions, finite-difference discretization, pseudo-arclength
continuation in the second pump amplitude, a-priori bounds, bifurcation
conditions at nonconstant solutions and the second-order response of
constant solutions.
"""
__version__ = "0.1.0"

from .model import ContractViolation, Params, SecondHarmonic, Sampled, apply_R, residual
from .trivial import FSTAR, param_point, solve_constants, turning_points, is_nondegenerate
from .discretize import DerivativeScheme, jacobian, residual_vec, norms
from .continuation import (Branch, BranchPoint, ContinuationSettings, NewtonFailure, NewtonSettings,
                           mirror_branch, newton_solve, sweep_zeta, trace_branch, trivial_start)
from .bounds import compute_bounds, uniqueness_classify, verify_bounds
from .bifurcation import bifurcation_report, parity_periodicity_check, sigma0_candidates
from .response import response_coefficients, sign_changes, sign_map
from .experiments import figure_eight, locate_threshold

__all__ = [
    "ContractViolation", "Params", "SecondHarmonic", "Sampled", "apply_R", "residual",
    "FSTAR", "param_point", "solve_constants", "turning_points", "is_nondegenerate",
    "DerivativeScheme", "jacobian", "residual_vec", "norms",
    "Branch", "BranchPoint", "ContinuationSettings", "NewtonFailure", "NewtonSettings",
    "mirror_branch", "newton_solve", "sweep_zeta", "trace_branch", "trivial_start",
    "compute_bounds", "uniqueness_classify", "verify_bounds",
    "bifurcation_report", "parity_periodicity_check", "sigma0_candidates",
    "response_coefficients", "sign_changes", "sign_map",
    "figure_eight", "locate_threshold",
]
