"""Existence results made computational: scalar and matrix Bonsall extension, separation."""
from .bonsall import (
    BUDGET_EXCEEDED,
    INVALID,
    VALID,
    BonsallInfeasible,
    ExtensionCertificate,
    ExtensionCheck,
    ExtensionInfeasible,
    HypothesisError,
    bonsall_scalar,
    bonsall_scalar_violation,
    matrix_bonsall_extend,
    sampled_cp_margin,
    verify_extension,
    verify_hypothesis,
)
from .lp import DualSimplex, InfeasibleLP, LPInstance, LPSolution, lp_feasible
from .separation import NOT_SEPARATED, SeparationCertificate, separate_point, verify_separation

__all__ = [
    "BUDGET_EXCEEDED", "INVALID", "NOT_SEPARATED", "VALID",
    "BonsallInfeasible", "DualSimplex", "ExtensionCertificate", "ExtensionCheck",
    "ExtensionInfeasible", "HypothesisError", "InfeasibleLP", "LPInstance", "LPSolution",
    "SeparationCertificate", "bonsall_scalar", "bonsall_scalar_violation", "lp_feasible",
    "matrix_bonsall_extend", "sampled_cp_margin", "separate_point", "verify_extension", "verify_hypothesis",
    "verify_separation",
]
