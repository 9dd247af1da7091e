"""Implicit restart of the bidiagonalization.

Unwanted Ritz values are used as shifts for implicit QR sweeps on the
bidiagonal ``G_m``; the rotated factorization is truncated to dimension
``k`` and expanded again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lanczos import LanczosState, continue_fresh, _bnorm

__all__ = [
    "RestartRotations",
    "select_shifts",
    "givens",
    "bidiag_implicit_qr",
    "truncate",
    "update_trackers",
]


@dataclass
class RestartRotations:
    """Accumulated rotations with ``g_tilde = c_tilde.T @ G @ d_tilde``."""

    c_tilde: np.ndarray
    d_tilde: np.ndarray
    g_tilde: np.ndarray


def select_shifts(triplets, which, k, m=None):
    """The ``m - k`` unwanted Ritz values, with shifts too close to the wanted ones replaced.

    A bad shift becomes 0 when the largest values are wanted and
    ``theta_1`` when the smallest are wanted.
    """
    m = len(triplets) if m is None else m
    if k >= m:
        raise ValueError(f"need k < m for a restart, got k={k}, m={m}")
    theta = np.array([t.theta for t in triplets[:m]])
    if which == "largest":
        shifts = theta[k:m].copy()
        edge = theta[k - 1] - triplets[k - 1].residual_norm
        bad = np.abs(edge - shifts) <= theta[k - 1] * 1e-3
        shifts[bad] = 0.0
    elif which == "smallest":
        shifts = theta[: m - k].copy()
        edge = theta[m - k] + triplets[m - k].residual_norm
        bad = np.abs(edge - shifts) <= theta[m - k] * 1e-3
        shifts[bad] = theta[0]
    else:
        raise ValueError(f"which must be 'largest' or 'smallest', got {which!r}")
    return list(shifts)


def givens(f, g):
    """``(c, s, r)`` with ``[c s; -s c] @ [f, g] = [r, 0]``."""
    if g == 0:
        return 1.0, 0.0, f
    r = np.hypot(f, g)
    return f / r, g / r, r


def bidiag_implicit_qr(alphas, betas, shifts) -> RestartRotations:
    """One Golub-Kahan bulge-chasing sweep per shift, shifts taken in descending order.

    ``alphas`` is the diagonal (length ``m``) and ``betas`` the
    superdiagonal (length ``m - 1``) of ``G``.  Each sweep is an implicit
    QR step on ``G^T G`` with shift ``mu**2``.
    """
    alphas = np.asarray(alphas, dtype=float)
    m = len(alphas)
    if m < 2:
        raise ValueError("need at least a 2x2 bidiagonal matrix")
    G = np.diag(alphas)
    G[np.arange(m - 1), np.arange(1, m)] = np.asarray(betas, dtype=float)[: m - 1]
    C = np.eye(m)
    D = np.eye(m)
    for mu in sorted(shifts, reverse=True):
        y = G[0, 0] ** 2 - mu**2
        z = G[0, 0] * G[0, 1]
        for i in range(m - 1):
            c, s, _ = givens(y, z)
            rot = np.array([[c, -s], [s, c]])
            G[:, i : i + 2] = G[:, i : i + 2] @ rot
            D[:, i : i + 2] = D[:, i : i + 2] @ rot
            if i > 0:
                G[i - 1, i + 1] = 0.0
            y, z = G[i, i], G[i + 1, i]
            c, s, _ = givens(y, z)
            rot = np.array([[c, -s], [s, c]])
            G[i : i + 2, :] = rot.T @ G[i : i + 2, :]
            C[:, i : i + 2] = C[:, i : i + 2] @ rot
            G[i + 1, i] = 0.0
            if i < m - 2:
                y, z = G[i, i + 1], G[i, i + 2]
    G = np.triu(np.tril(G, 1))
    return RestartRotations(c_tilde=C, d_tilde=D, g_tilde=G)


def update_trackers(tracker, rotations: RestartRotations, k, beta_m, c_mk, beta_tilde_k, beta_k):
    """Rotate the orthogonality estimates to the truncated bases in place."""
    C, D = rotations.c_tilde, rotations.d_tilde
    m = C.shape[0]
    Ck, Dk, d_next = C[:, :k], D[:, :k], D[:, k]
    phi_m = tracker.phi[:m, :m]
    psi_m = tracker.psi[:m, :m]
    omega_m = tracker.omega[:m, :m]
    psi_col = tracker.psi[:m, m]
    omega_col = tracker.omega[:m, m]

    phi_k = Ck.T @ phi_m @ Ck
    psi_k = Dk.T @ psi_m @ Dk
    omega_k = Ck.T @ omega_m @ Dk
    psi_next = Dk.T @ (beta_m * c_mk * psi_col + beta_tilde_k * psi_m @ d_next) / beta_k
    omega_next = Ck.T @ (beta_m * c_mk * omega_col + beta_tilde_k * omega_m @ d_next) / beta_k

    tracker.phi[:] = 0.0
    tracker.psi[:] = 0.0
    tracker.omega[:] = 0.0
    tracker.phi[:k, :k] = (phi_k + phi_k.T) / 2
    tracker.psi[:k, :k] = (psi_k + psi_k.T) / 2
    tracker.omega[:k, :k] = omega_k
    tracker.psi[:k, k] = psi_next
    tracker.psi[k, :k] = psi_next
    tracker.omega[:k, k] = omega_next
    tracker.clear_beyond(k)
    return tracker


def truncate(state: LanczosState, rotations: RestartRotations, k: int) -> LanczosState:
    """Compress an ``m``-step factorization to ``k`` steps using the rotations.

    If the new coupling ``beta_k`` collapses, ``q_{k+1}`` is replaced by a
    fresh random vector B-orthogonal to the bases (``beta_k = 0``).
    """
    m = state.j
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={m}")
    C, D, Gt = rotations.c_tilde, rotations.d_tilde, rotations.g_tilde
    beta_m = state.betas[m - 1]
    c_mk = C[m - 1, k - 1]
    beta_tilde_k = Gt[k - 1, k]
    q_next = beta_m * c_mk * state.Q[:, m] + beta_tilde_k * (state.Q[:, :m] @ D[:, k])

    state.P[:, :k] = state.P[:, :m] @ C[:, :k]
    state.Q[:, :k] = state.Q[:, :m] @ D[:, :k]
    state.P[:, k:] = 0.0
    state.Q[:, k:] = 0.0
    state.alphas[:] = 0.0
    state.betas[:] = 0.0
    state.alphas[:k] = np.diag(Gt)[:k]
    state.betas[: k - 1] = np.diag(Gt, 1)[: k - 1]
    state.j = k
    state.nq = k + 1
    state.breakdown = None
    state.bq_norm = None

    beta_k = _bnorm(state.pencil, q_next)
    if beta_k > state.breakdown_tol:
        state.betas[k - 1] = beta_k
        state.Q[:, k] = q_next / beta_k
        update_trackers(state.tracker, rotations, k, beta_m, c_mk, beta_tilde_k, beta_k)
    else:
        # invariant subspace captured; keep the rotated estimates and go on from a fresh vector
        update_trackers(state.tracker, rotations, k, beta_m, c_mk, beta_tilde_k, 1.0)
        state.betas[k - 1] = 0.0
        state.breakdown = ("right", k)
        continue_fresh(state)
    return state
