"""Extreme conjugate eigenpairs of large skew-symmetric/SPD matrix pencils.

A restarted Lanczos bidiagonalization in the B-inner product, with
partial B-reorthogonalization, computes ``k`` extreme pairs
``+-i sigma`` of ``A x = lambda B x`` for skew-symmetric ``A`` and SPD ``B``.
"""

from .lanczos import BidiagonalFactor, LanczosState, OrthoTracker, extend, init_state, measure_levels
from .mmio import MatrixMarketError, read_matrix_market, write_vectors
from .pencil import (
    NormEstimates,
    NotPositiveDefiniteError,
    OpCounters,
    PencilOperator,
    SparsePencil,
    b_inner,
    b_norm,
    estimate_norms,
    gen_kron_sum_pencil,
    gen_skew_tridiag,
    gen_toeplitz_spd,
    kron_sum_condition,
    split_pencil,
    toeplitz_spd_eigenvalues,
)
from .restart import RestartRotations, bidiag_implicit_qr, select_shifts, truncate
from .ritz import EigenPair, RitzTriplet, direct_residual, extract, residual_norms
from .solver import SolveReport, SolverConfig, solve

__version__ = "0.1.0"

__all__ = [
    "BidiagonalFactor",
    "EigenPair",
    "LanczosState",
    "MatrixMarketError",
    "NormEstimates",
    "NotPositiveDefiniteError",
    "OpCounters",
    "OrthoTracker",
    "PencilOperator",
    "RestartRotations",
    "RitzTriplet",
    "SolveReport",
    "SolverConfig",
    "SparsePencil",
    "b_inner",
    "b_norm",
    "bidiag_implicit_qr",
    "direct_residual",
    "estimate_norms",
    "extend",
    "extract",
    "gen_kron_sum_pencil",
    "gen_skew_tridiag",
    "gen_toeplitz_spd",
    "init_state",
    "kron_sum_condition",
    "measure_levels",
    "read_matrix_market",
    "residual_norms",
    "select_shifts",
    "solve",
    "split_pencil",
    "toeplitz_spd_eigenvalues",
    "truncate",
    "write_vectors",
]
