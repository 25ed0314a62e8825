"""Numerical verification of form-factor identities for composite GL(N) spin chains."""

from .algebra import PoleError, VacuumRatios, bethe_jacobian, bethe_residual, f, g, prod_f, tau
from .bethe import BetheRootSet, kappa_derivatives, log_ell_kappa_derivative, solve_sector
from .hilbert import ManyBodyOperator, WeightSector, embed_elementary, enumerate_sectors
from .model import (ModelSpec, build_L, build_monodromy, build_zero_mode, check_rtt,
                    transfer_matrix)
from .spectral import EigenPair, MatchedState, diagonalize_sector, match_states
from .states import StateBank

__version__ = "0.1.0"

__all__ = [
    "PoleError", "VacuumRatios", "bethe_jacobian", "bethe_residual", "f", "g", "prod_f", "tau",
    "BetheRootSet", "kappa_derivatives", "log_ell_kappa_derivative", "solve_sector",
    "ManyBodyOperator", "WeightSector", "embed_elementary", "enumerate_sectors",
    "ModelSpec", "build_L", "build_monodromy", "build_zero_mode", "check_rtt",
    "transfer_matrix", "EigenPair", "MatchedState", "diagonalize_sector", "match_states",
    "StateBank",
]
