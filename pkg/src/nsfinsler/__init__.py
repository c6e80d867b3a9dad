"""Certify feasibility of M + αN ⪰ 0 for symmetric M, N.

The package decides feasibility, synthesizes multipliers and produces
checkable counterexample witnesses, plus strict, projection and blocked
(matrix) variants.
"""
__version__ = "0.1.0"

from .core import (check_ns2, check_ns3, check_s1_strict, check_s2_strict, construct_cross_witness,
                   decide_ns1, synthesize_alpha_definite)
from .errors import (BudgetExhausted, FinslerError, InternalInconsistency, InvalidInput,
                     PreconditionViolated, WitnessSearchFailed)
from .linalg import DEFAULT_TOL, Definiteness, ToleranceProfile
from .matrix_finsler import BlockedSymmetricPair, check_m1, check_mfl_assumptions, decide_mfl
from .models import FinslerInstance, FinslerVerdict, Status, Witness, WitnessRole
from .oracle import alpha_linesearch
from .projection import NsplInstance, check_nspl, solve_nspl_identity

__all__ = [
    "__version__", "DEFAULT_TOL", "ToleranceProfile", "Definiteness",
    "FinslerInstance", "FinslerVerdict", "Status", "Witness", "WitnessRole",
    "decide_ns1", "check_ns2", "check_ns3", "synthesize_alpha_definite",
    "check_s1_strict", "check_s2_strict", "construct_cross_witness", "alpha_linesearch",
    "NsplInstance", "check_nspl", "solve_nspl_identity",
    "BlockedSymmetricPair", "check_mfl_assumptions", "check_m1", "decide_mfl",
    "FinslerError", "InvalidInput", "PreconditionViolated", "WitnessSearchFailed",
    "BudgetExhausted", "InternalInconsistency",
]
