"""Generalized skew-symmetric Lanczos bidiagonalization with partial B-reorthogonalization.

For a pencil ``(A, B)`` the process builds ``B``-orthonormal, mutually
``B``-orthogonal bases ``P_j`` and ``Q_{j+1}`` and an upper bidiagonal ``G_j``
with ``B^{-1} A Q_j = P_j G_j``.  Orthogonality levels among the basis vectors
are tracked by cheap recurrences (``phi ~ P^T B P``, ``psi ~ Q^T B Q``,
``omega ~ P^T B Q``) and vectors are reorthogonalized only against those
previous vectors whose estimated level exceeds ``sqrt(eps / m)``.

Steps are numbered from 1, as in the recurrences: step ``j`` produces
``alpha_j, p_j`` (:func:`left_step`) and then ``beta_j, q_{j+1}``
(:func:`right_step`).  Arrays are 0-based, so ``p_j`` lives in ``P[:, j-1]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .pencil import PencilOperator

__all__ = [
    "BidiagonalFactor",
    "OrthoTracker",
    "LanczosState",
    "init_state",
    "left_step",
    "right_step",
    "tracker_new_left",
    "tracker_new_right",
    "reorth_index_sets",
    "partial_reorth_left",
    "partial_reorth_right",
    "measure_levels",
    "lbd_residuals",
    "extend",
    "continue_fresh",
]

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
POLICIES = ("partial", "full", "none")
# level that every index is swept down to once partial reorthogonalization triggers
WIDEN_LEVEL = EPS ** 0.75


@dataclass
class BidiagonalFactor:
    """Diagonal ``alphas`` and superdiagonal ``betas`` of ``G_j``.

    ``betas`` has the same length as ``alphas``; its last entry is the
    trailing coupling ``beta_j`` to ``q_{j+1}`` and is not part of ``G_j``.
    """

    alphas: np.ndarray
    betas: np.ndarray

    @property
    def size(self) -> int:
        return len(self.alphas)

    def matrix(self) -> np.ndarray:
        j = self.size
        g = np.diag(np.asarray(self.alphas, dtype=float))
        if j > 1:
            g[np.arange(j - 1), np.arange(1, j)] = self.betas[: j - 1]
        return g


@dataclass
class OrthoTracker:
    """Running estimates of the B-orthogonality levels of the bases.

    ``phi[i, j] ~ p_i^T B p_j``, ``psi[i, j] ~ q_i^T B q_j`` and
    ``omega[i, j] ~ p_i^T B q_j``, all 0-based and stored dense at capacity.
    """

    phi: np.ndarray
    psi: np.ndarray
    omega: np.ndarray
    n: int
    cond_b: float = 1.0
    norm_h: float = 0.0

    @classmethod
    def allocate(cls, m, n, cond_b=1.0):
        phi = np.eye(m)
        psi = np.eye(m + 1)
        omega = np.zeros((m, m + 1))
        return cls(phi, psi, omega, n, cond_b)

    @property
    def eps_tilde(self) -> float:
        return np.sqrt(self.n) * self.cond_b * self.norm_h / 2 * EPS

    def clear_beyond(self, k):
        """Drop estimates involving ``p_i`` for ``i > k`` and ``q_i`` for ``i > k + 1``."""
        self.phi[k:, :] = 0.0
        self.phi[:, k:] = 0.0
        self.psi[k + 1 :, :] = 0.0
        self.psi[:, k + 1 :] = 0.0
        self.omega[k:, :] = 0.0
        self.omega[:, k + 1 :] = 0.0
        idx = np.arange(self.phi.shape[0])
        self.phi[idx, idx] = 1.0
        idx = np.arange(self.psi.shape[0])
        self.psi[idx, idx] = 1.0


@dataclass
class LanczosState:
    """Bases, bidiagonal factor and tracker of a (possibly restarted) process.

    ``j`` counts completed left steps (columns of ``P``) and ``nq`` the
    right vectors available (``j`` or ``j + 1``).
    """

    pencil: PencilOperator
    m_max: int
    P: np.ndarray
    Q: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    tracker: OrthoTracker
    policy: str = "partial"
    j: int = 0
    nq: int = 1
    breakdown: Optional[tuple] = None
    reorth_ops: int = 0
    norm_h_fixed: bool = False
    bq_norm: Optional[float] = None
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    @property
    def n(self) -> int:
        return self.pencil.n

    @property
    def factor(self) -> BidiagonalFactor:
        return BidiagonalFactor(self.alphas[: self.j].copy(), self.betas[: self.j].copy())

    @property
    def norm_h(self) -> float:
        return self.tracker.norm_h

    def set_norm_h(self, value, fixed=True):
        """Install a new ``||H||`` estimate; ``fixed`` stops the per-step bootstrap."""
        self.tracker.norm_h = float(value)
        self.norm_h_fixed = self.norm_h_fixed or fixed

    @property
    def breakdown_tol(self) -> float:
        return self.n * EPS * self.tracker.norm_h

    @property
    def sqrt_eps_m(self) -> float:
        return np.sqrt(EPS / self.m_max)

    def _bootstrap_norm_h(self):
        if not self.norm_h_fixed and self.j > 0:
            self.tracker.norm_h = max(self.tracker.norm_h, np.linalg.norm(self.factor.matrix(), 2))


def init_state(
    pencil: PencilOperator,
    q1,
    m_max: int,
    *,
    cond_b: float = 1.0,
    policy: str = "partial",
    rng=None,
) -> LanczosState:
    """Allocate a process of capacity ``m_max`` started from ``q1`` (B-normalized here)."""
    if policy not in POLICIES:
        raise ValueError(f"unknown reorthogonalization policy {policy!r}")
    if m_max < 1:
        raise ValueError(f"m_max must be at least 1, got {m_max}")
    n = pencil.n
    q1 = np.asarray(q1, dtype=float)
    nrm = np.sqrt(max(q1 @ pencil.apply_b(q1), 0.0))
    if nrm == 0:
        raise ValueError("start vector has zero B-norm")
    P = np.zeros((n, m_max))
    Q = np.zeros((n, m_max + 1))
    Q[:, 0] = q1 / nrm
    return LanczosState(
        pencil=pencil,
        m_max=m_max,
        P=P,
        Q=Q,
        alphas=np.zeros(m_max),
        betas=np.zeros(m_max),
        tracker=OrthoTracker.allocate(m_max, n, cond_b),
        policy=policy,
        rng=np.random.default_rng(rng),
    )


def _bnorm(pencil, v):
    return float(np.sqrt(max(v @ pencil.apply_b(v), 0.0)))


def _sign(x):
    # sign(0) taken as +1
    return np.where(x >= 0, 1.0, -1.0)


def tracker_new_left(state: LanczosState, j: int):
    """Scaled new entries ``phi'_{i,j}`` (``i < j``) and ``omega'_{j,i}`` (``i <= j``).

    Needs ``alpha_j`` (before reorthogonalization) in ``state.alphas``.
    Only O(j) scalar work, no vector operations.
    """
    J = j - 1
    t = state.tracker
    a, b = state.alphas, state.betas
    beta_prev = b[J - 1] if J > 0 else 0.0
    phi_col = t.phi[:J, J - 1] if J > 0 else np.zeros(0)
    phi_new = a[:J] * t.psi[:J, J] + b[:J] * t.psi[1 : J + 1, J] - beta_prev * phi_col

    i = np.arange(J + 1)
    beta_im1 = np.where(i > 0, b[i - 1], 0.0)
    omega_im1 = np.where(i > 0, t.omega[i - 1, J], 0.0)
    omega_jm1 = t.omega[J - 1, : J + 1] if J > 0 else np.zeros(J + 1)
    omega_new = -a[: J + 1] * t.omega[: J + 1, J] - beta_im1 * omega_im1 - beta_prev * omega_jm1

    eps_t = t.eps_tilde
    phi_new = phi_new + _sign(phi_new) * eps_t
    omega_new = omega_new + _sign(omega_new) * eps_t
    return phi_new, omega_new


def tracker_new_right(state: LanczosState, j: int):
    """Scaled new entries ``psi'_{i,j+1}`` and ``omega'_{i,j+1}`` for ``i <= j``.

    Needs the finalized ``phi``/``omega`` entries of step ``j`` and ``beta_j``
    (before reorthogonalization) in ``state.betas``.
    """
    J = j - 1
    t = state.tracker
    a, b = state.alphas, state.betas
    i = np.arange(J + 1)
    beta_im1 = np.where(i > 0, b[i - 1], 0.0)
    phi_im1 = np.where(i > 0, t.phi[i - 1, J], 0.0)
    psi_new = beta_im1 * phi_im1 + a[: J + 1] * t.phi[: J + 1, J] - a[J] * t.psi[: J + 1, J]
    omega_new = (
        -b[: J + 1] * t.omega[J, 1 : J + 2]
        - a[: J + 1] * t.omega[J, : J + 1]
        - a[J] * t.omega[: J + 1, J]
    )
    eps_t = t.eps_tilde
    psi_new = psi_new + _sign(psi_new) * eps_t
    omega_new = omega_new + _sign(omega_new) * eps_t
    return psi_new, omega_new


def reorth_index_sets(same_side, cross_side, threshold, m, policy="partial"):
    """Indices (0-based) whose scaled estimate reaches ``threshold * sqrt(eps / m)``.

    ``policy='full'`` selects everything and ``'none'`` nothing.
    """
    same_side = np.asarray(same_side)
    cross_side = np.asarray(cross_side)
    if policy == "full":
        return np.arange(len(same_side)), np.arange(len(cross_side))
    if policy == "none":
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    level = threshold * np.sqrt(EPS / m)
    return (
        np.flatnonzero(np.abs(same_side) >= level),
        np.flatnonzero(np.abs(cross_side) >= level),
    )


def _widen(state, same, cross, same_est, cross_est, scale):
    """Once any estimate reaches the threshold, also take every index above ``eps**0.75``.

    Selecting only the indices past the threshold lets coherent loss of
    orthogonality escape through neighbouring vectors whose estimates lag;
    the wider sweep keeps the measured levels below the threshold.
    """
    if state.policy != "partial" or not (len(same) or len(cross)):
        return same, cross
    eta = scale * WIDEN_LEVEL
    same = np.union1d(same, np.flatnonzero(np.abs(same_est) >= eta))
    cross = np.union1d(cross, np.flatnonzero(np.abs(cross_est) >= eta))
    return same.astype(int), cross.astype(int)


def partial_reorth_left(state: LanczosState, j, s, phi_new, omega_new, set_p, set_q):
    """Reorthogonalize ``s_j`` against ``p_i`` (``set_p``) then ``q_i`` (``set_q``).

    The scaled tracker entries are kept current as each projection is
    removed.  Returns the updated ``(s, phi_new, omega_new)``.
    """
    J = j - 1
    t, pencil = state.tracker, state.pencil
    phi_new, omega_new = phi_new.copy(), omega_new.copy()
    for i in set_p:
        p_i = state.P[:, i]
        tau = p_i @ pencil.apply_b(s)
        s = s - tau * p_i
        state.reorth_ops += 1
        mask = np.arange(J) != i
        phi_new[mask] -= tau * t.phi[:J, i][mask]
        omega_new -= tau * t.omega[i, : J + 1]
        phi_new[i] = p_i @ pencil.apply_b(s)
    for i in set_q:
        q_i = state.Q[:, i]
        tau = q_i @ pencil.apply_b(s)
        s = s - tau * q_i
        state.reorth_ops += 1
        mask = np.arange(J + 1) != i
        omega_new[mask] -= tau * t.psi[i, : J + 1][mask]
        phi_new -= tau * t.omega[:J, i]
        omega_new[i] = q_i @ pencil.apply_b(s)
    return s, phi_new, omega_new


def partial_reorth_right(state: LanczosState, j, t_vec, psi_new, omega_new, set_q, set_p):
    """Reorthogonalize ``t_j`` against ``q_i`` (``set_q``) then ``p_i`` (``set_p``)."""
    J = j - 1
    t, pencil = state.tracker, state.pencil
    psi_new, omega_new = psi_new.copy(), omega_new.copy()
    for i in set_q:
        q_i = state.Q[:, i]
        tau = q_i @ pencil.apply_b(t_vec)
        t_vec = t_vec - tau * q_i
        state.reorth_ops += 1
        mask = np.arange(J + 1) != i
        psi_new[mask] -= tau * t.psi[: J + 1, i][mask]
        omega_new -= tau * t.omega[: J + 1, i]
        psi_new[i] = q_i @ pencil.apply_b(t_vec)
    for i in set_p:
        p_i = state.P[:, i]
        tau = p_i @ pencil.apply_b(t_vec)
        t_vec = t_vec - tau * p_i
        state.reorth_ops += 1
        mask = np.arange(J + 1) != i
        omega_new[mask] -= tau * t.phi[: J + 1, i][mask]
        psi_new -= tau * t.omega[i, : J + 1]
        omega_new[i] = p_i @ pencil.apply_b(t_vec)
    return t_vec, psi_new, omega_new


def left_step(state: LanczosState) -> LanczosState:
    """Compute ``alpha_j`` and ``p_j`` for ``j = state.j + 1``.

    A vanishing ``alpha_j`` is recorded in ``state.breakdown`` and leaves
    ``p_j = 0``; it is not an error.
    """
    if state.breakdown is not None:
        raise RuntimeError(f"process has broken down: {state.breakdown}")
    if state.j >= state.m_max or state.nq != state.j + 1:
        raise RuntimeError("left step out of sequence")
    j = state.j + 1
    J = j - 1
    pencil, t = state.pencil, state.tracker
    s = pencil.apply_op(state.Q[:, J])
    if J > 0:
        s = s - state.betas[J - 1] * state.P[:, J - 1]
    alpha = _bnorm(pencil, s)
    state.j = j
    # once the bases span the whole space the new vector is roundoff
    if alpha <= state.breakdown_tol or J + state.nq >= state.n:
        _mark_left_breakdown(state, j)
        return state
    state.alphas[J] = alpha
    phi_new, omega_new = tracker_new_left(state, j)
    set_p, set_q = reorth_index_sets(phi_new, omega_new, alpha, state.m_max, state.policy)
    set_p, set_q = _widen(state, set_p, set_q, phi_new, omega_new, alpha)
    if len(set_p) or len(set_q):
        s, phi_new, omega_new = partial_reorth_left(state, j, s, phi_new, omega_new, set_p, set_q)
        alpha = _bnorm(pencil, s)
        if alpha <= state.breakdown_tol:
            _mark_left_breakdown(state, j)
            return state
        state.alphas[J] = alpha
    state.P[:, J] = s / alpha
    t.phi[:J, J] = phi_new / alpha
    t.phi[J, :J] = t.phi[:J, J]
    t.phi[J, J] = 1.0
    t.omega[J, : J + 1] = omega_new / alpha
    state._bootstrap_norm_h()
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug(
            "left step",
            extra={"step": j, "alpha": alpha, "reorth_p": len(set_p), "reorth_q": len(set_q)},
        )
    return state


def _mark_left_breakdown(state, j):
    J = j - 1
    state.alphas[J] = 0.0
    state.betas[J] = 0.0
    state.P[:, J] = 0.0
    state.tracker.phi[:J, J] = state.tracker.phi[J, :J] = 0.0
    state.tracker.omega[J, :] = 0.0
    state.breakdown = ("left", j)


def right_step(state: LanczosState) -> LanczosState:
    """Compute ``beta_j`` and ``q_{j+1}`` for ``j = state.j``."""
    if state.breakdown is not None:
        raise RuntimeError(f"process has broken down: {state.breakdown}")
    j = state.j
    if j < 1 or state.nq != j:
        raise RuntimeError("right step out of sequence")
    J = j - 1
    pencil, t = state.pencil, state.tracker
    t_vec = -pencil.apply_op(state.P[:, J]) - state.alphas[J] * state.Q[:, J]
    beta = _bnorm(pencil, t_vec)
    if beta <= state.breakdown_tol or j + state.nq >= state.n:
        _mark_right_breakdown(state, j)
        return state
    state.betas[J] = beta
    psi_new, omega_new = tracker_new_right(state, j)
    set_q, set_p = reorth_index_sets(psi_new, omega_new, beta, state.m_max, state.policy)
    set_q, set_p = _widen(state, set_q, set_p, psi_new, omega_new, beta)
    if len(set_q) or len(set_p):
        t_vec, psi_new, omega_new = partial_reorth_right(
            state, j, t_vec, psi_new, omega_new, set_q, set_p
        )
        beta = _bnorm(pencil, t_vec)
        if beta <= state.breakdown_tol:
            _mark_right_breakdown(state, j)
            return state
        state.betas[J] = beta
    state.Q[:, J + 1] = t_vec / beta
    state.nq = j + 1
    state.bq_norm = None
    t.psi[: J + 1, J + 1] = psi_new / beta
    t.psi[J + 1, : J + 1] = t.psi[: J + 1, J + 1]
    t.psi[J + 1, J + 1] = 1.0
    t.omega[: J + 1, J + 1] = omega_new / beta
    state._bootstrap_norm_h()
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug(
            "right step",
            extra={"step": j, "beta": beta, "reorth_q": len(set_q), "reorth_p": len(set_p)},
        )
    return state


def _mark_right_breakdown(state, j):
    J = j - 1
    state.betas[J] = 0.0
    state.Q[:, J + 1] = 0.0
    state.nq = j + 1
    state.bq_norm = 0.0
    state.tracker.psi[: J + 1, J + 1] = state.tracker.psi[J + 1, : J + 1] = 0.0
    state.tracker.omega[:, J + 1] = 0.0
    state.breakdown = ("right", j)


def _fresh_vector(state, n_p, n_q):
    """Random vector B-orthogonal to ``P[:, :n_p]`` and ``Q[:, :n_q]``, or None if none exists."""
    if n_p + n_q >= state.n:
        return None
    pencil = state.pencil
    basis = np.hstack([state.P[:, :n_p], state.Q[:, :n_q]])
    v = state.rng.standard_normal(state.n)
    start = _bnorm(pencil, v)
    for _ in range(2):
        bv = pencil.apply_b(v)
        v = v - basis @ (basis.T @ bv)
    nrm = _bnorm(pencil, v)
    if nrm <= 1e-8 * start:
        return None
    return v / nrm


def continue_fresh(state: LanczosState) -> bool:
    """Resume a broken-down process from a fresh random vector.

    After a left breakdown the fresh vector becomes ``p_j`` (with
    ``alpha_j = 0``); after a right breakdown it becomes ``q_{j+1}`` (with
    ``beta_j = 0``).  Tracker entries for the new vector are measured
    explicitly.  Returns False when the bases already span the space.
    """
    if state.breakdown is None:
        return True
    side, j = state.breakdown
    J = j - 1
    pencil, t = state.pencil, state.tracker
    if side == "left":
        v = _fresh_vector(state, J, j)
        if v is None:
            return False
        state.P[:, J] = v
        bv = pencil.apply_b(v)
        t.phi[:J, J] = t.phi[J, :J] = state.P[:, :J].T @ bv
        t.phi[J, J] = 1.0
        t.omega[J, : J + 1] = state.Q[:, : J + 1].T @ bv
    else:
        v = _fresh_vector(state, j, j)
        if v is None:
            return False
        state.Q[:, J + 1] = v
        bv = pencil.apply_b(v)
        t.psi[: J + 1, J + 1] = t.psi[J + 1, : J + 1] = state.Q[:, : J + 1].T @ bv
        t.psi[J + 1, J + 1] = 1.0
        t.omega[: J + 1, J + 1] = state.P[:, : J + 1].T @ bv
        state.bq_norm = None
    state.breakdown = None
    logger.debug("continued from a fresh vector after %s breakdown at step %d", side, j)
    return True


def extend(state: LanczosState, m: int, on_step=None) -> bool:
    """Run steps until ``state.j == m`` with ``q_{m+1}`` formed.

    Breakdowns are continued from fresh vectors when possible.  Returns
    False if the process stopped early because the bases exhaust the
    space (the broken-down factorization is then exact).
    """
    m = min(m, state.m_max)
    while True:
        if state.breakdown is not None and not continue_fresh(state):
            return False
        if state.nq == state.j + 1:
            if state.j >= m:
                return True
            left_step(state)
        else:
            right_step(state)
        if on_step is not None and state.breakdown is None and state.nq == state.j + 1:
            on_step(state)


def measure_levels(state: LanczosState):
    """Exact orthogonality levels of the current bases.

    Returns ``(max |p_i^T B p_j|, max |q_i^T B q_j|, max |p_i^T B q_j|)`` over
    ``i != j`` for the first two.  Costs O(n j^2); diagnostics only.
    """
    pencil = state.pencil
    P = state.P[:, : state.j]
    Q = state.Q[:, : state.nq]
    BQ = np.column_stack([pencil.apply_b(q) for q in Q.T]) if Q.shape[1] else Q
    BP = np.column_stack([pencil.apply_b(p) for p in P.T]) if P.shape[1] else P
    pp = np.abs(np.triu(P.T @ BP, 1)).max(initial=0.0)
    qq = np.abs(np.triu(Q.T @ BQ, 1)).max(initial=0.0)
    pq = np.abs(P.T @ BQ).max(initial=0.0)
    return float(pp), float(qq), float(pq)


def lbd_residuals(state: LanczosState, upto: Optional[int] = None):
    """Columnwise B-norms of ``B^{-1} A q_i - alpha_i p_i - beta_{i-1} p_{i-1}``."""
    pencil = state.pencil
    upto = state.j if upto is None else upto
    out = np.zeros(upto)
    for i in range(upto):
        r = pencil.apply_op(state.Q[:, i]) - state.alphas[i] * state.P[:, i]
        if i > 0:
            r -= state.betas[i - 1] * state.P[:, i - 1]
        out[i] = _bnorm(pencil, r)
    return out
