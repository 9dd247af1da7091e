"""Ritz extraction from the bidiagonal projection and eigenpair reconstruction.

Each singular triplet ``(theta, c, d)`` of ``G_m`` gives the conjugate
approximate eigenpairs ``(+-i theta, (u +- i v) / sqrt(2))`` of ``(A, B)``
with ``u = P_m c`` and ``v = Q_m d``.  Everything stays real: a pair is kept
as ``(theta, u, v)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .lanczos import BidiagonalFactor, LanczosState

__all__ = [
    "RitzTriplet",
    "EigenPair",
    "extract",
    "residual_norms",
    "direct_residual",
    "wanted_indices",
    "check_convergence",
    "form_eigenpairs",
]


@dataclass
class RitzTriplet:
    theta: float
    c: np.ndarray
    d: np.ndarray
    index: int
    residual_norm: Optional[float] = None


@dataclass
class EigenPair:
    """Approximate conjugate eigenpairs ``+-i theta`` with vectors ``(u +- i v)/sqrt(2)``."""

    theta: float
    u: np.ndarray
    v: np.ndarray
    residual_norm: float

    def eigenvalues(self):
        return 1j * self.theta, -1j * self.theta

    def eigenvectors(self):
        x = (self.u + 1j * self.v) / np.sqrt(2)
        return x, x.conj()


def extract(factor: BidiagonalFactor) -> List[RitzTriplet]:
    """Singular triplets of ``G_j`` in descending order of ``theta``.

    Singular vectors are signed so that the largest-magnitude entry of ``d``
    is positive.
    """
    if factor.size < 1:
        raise ValueError("no completed steps to extract from")
    g = factor.matrix()
    U, s, Vt = np.linalg.svd(g)
    triplets = []
    for idx, theta in enumerate(s):
        c, d = U[:, idx].copy(), Vt[idx].copy()
        if d[np.argmax(np.abs(d))] < 0:
            c, d = -c, -d
        triplets.append(RitzTriplet(theta=float(theta), c=c, d=d, index=idx))
    return triplets


def residual_norms(state: LanczosState, triplets: List[RitzTriplet]) -> List[RitzTriplet]:
    """Residual norms ``beta_m |c_m| ||B q_{m+1}|| / sqrt(2)`` without forming vectors."""
    m = state.j
    beta_m = state.betas[m - 1]
    if beta_m == 0.0:
        bq = 0.0
    else:
        if state.bq_norm is None:
            state.bq_norm = float(np.linalg.norm(state.pencil.apply_b(state.Q[:, m])))
        bq = state.bq_norm
    for t in triplets:
        t.residual_norm = float(beta_m * abs(t.c[-1]) * bq / np.sqrt(2))
    return triplets


def direct_residual(pencil, pair: EigenPair) -> float:
    """``||A x - lambda B x||`` for ``x = (u + i v)/sqrt(2)``, ``lambda = i theta``.

    Costs two products with ``A`` and two with ``B``; for validation.
    """
    u, v, theta = pair.u, pair.v, pair.theta
    r_re = (pencil.apply_a(u) + theta * pencil.apply_b(v)) / np.sqrt(2)
    r_im = (pencil.apply_a(v) - theta * pencil.apply_b(u)) / np.sqrt(2)
    return float(np.sqrt(r_re @ r_re + r_im @ r_im))


def wanted_indices(m: int, k: int, which: str):
    if k > m:
        raise ValueError(f"k={k} exceeds the subspace dimension m={m}")
    if which == "largest":
        return list(range(k))
    if which == "smallest":
        return list(range(m - k, m))
    raise ValueError(f"which must be 'largest' or 'smallest', got {which!r}")


def check_convergence(triplets, which, k, norm_b_e, norm_h_e, tol):
    """Whether every wanted triplet has residual at most ``sqrt(||B||) ||H|| tol``.

    Returns ``(converged, indices)`` with 0-based indices into ``triplets``.
    """
    idx = wanted_indices(len(triplets), k, which)
    bound = np.sqrt(norm_b_e) * norm_h_e * tol
    converged = all(triplets[i].residual_norm <= bound for i in idx)
    return converged, idx


def form_eigenpairs(state: LanczosState, triplets, indices) -> List[EigenPair]:
    m = state.j
    P, Q = state.P[:, :m], state.Q[:, :m]
    pairs = []
    for i in indices:
        t = triplets[i]
        pairs.append(EigenPair(theta=t.theta, u=P @ t.c, v=Q @ t.d, residual_norm=t.residual_norm))
    return pairs
