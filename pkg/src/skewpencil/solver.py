"""Implicitly restarted solver for extreme conjugate eigenpairs of ``(A, B)``."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .lanczos import extend, init_state, measure_levels
from .pencil import NormEstimates, PencilOperator, estimate_norms
from .restart import bidiag_implicit_qr, select_shifts, truncate
from .ritz import EigenPair, check_convergence, extract, form_eigenpairs, residual_norms

__all__ = ["SolverConfig", "SolveReport", "solve", "REPORT_SCHEMA"]

logger = logging.getLogger(__name__)

REPORT_SCHEMA = 1


@dataclass
class SolverConfig:
    """Parameters of :func:`solve`.

    ``m`` is clamped to ``max(k + 1, n // 2)`` for small pencils, since the
    process cannot run longer than ``n / 2`` steps without breaking down.
    """

    k: int
    m: int = 30
    tol: float = 1e-8
    i_max: int = 2000
    which: str = "largest"
    q1: Optional[np.ndarray] = None
    reorth_policy: str = "partial"
    m_l: int = 30
    seed: int = 0
    diagnostics: bool = False

    def validate(self, n: Optional[int] = None):
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.m <= self.k:
            raise ValueError(f"m must exceed k, got m={self.m}, k={self.k}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.i_max < 1:
            raise ValueError(f"i_max must be at least 1, got {self.i_max}")
        if self.which not in ("largest", "smallest"):
            raise ValueError(f"which must be 'largest' or 'smallest', got {self.which!r}")
        if self.reorth_policy not in ("partial", "full", "none"):
            raise ValueError(f"unknown reorthogonalization policy {self.reorth_policy!r}")
        if self.m_l < 1:
            raise ValueError(f"m_l must be at least 1, got {self.m_l}")
        if n is not None and n < 2 * self.k:
            raise ValueError(f"pencil of dimension {n} has fewer than k={self.k} conjugate pairs")

    def effective_m(self, n: int) -> int:
        return min(self.m, max(self.k + 1, n // 2))


@dataclass
class SolveReport:
    eigenpairs: List[EigenPair]
    converged: bool
    restarts: int
    mv_count: int
    apply_a_count: int
    solve_b_count: int
    apply_b_count: int
    reorth_ops: int
    norms: NormEstimates
    n: int
    k: int
    m: int
    which: str
    wall_time: float
    level_history: list = field(default_factory=list)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([p.theta for p in self.eigenpairs])

    def to_dict(self, vectors_file: Optional[str] = None) -> dict:
        pairs = []
        for i, p in enumerate(self.eigenpairs):
            pairs.append(
                {
                    "theta": p.theta,
                    "residual": p.residual_norm,
                    "u_ref": 2 * i if vectors_file else None,
                    "v_ref": 2 * i + 1 if vectors_file else None,
                }
            )
        return {
            "schema": REPORT_SCHEMA,
            "n": self.n,
            "k": self.k,
            "m": self.m,
            "which": self.which,
            "converged": self.converged,
            "restarts": self.restarts,
            "mv_count": self.mv_count,
            "apply_b_count": self.apply_b_count,
            "reorth_ops": self.reorth_ops,
            "norm_b_est": self.norms.norm_b,
            "cond_b_est": self.norms.cond_b,
            "norm_h_est": self.norms.norm_h,
            "vectors_file": vectors_file,
            "pairs": pairs,
            "wall_time_s": self.wall_time,
        }

    def vectors(self) -> np.ndarray:
        """Columns ``u_1, v_1, u_2, v_2, ...`` of the returned pairs."""
        cols = []
        for p in self.eigenpairs:
            cols.extend([p.u, p.v])
        return np.column_stack(cols) if cols else np.zeros((self.n, 0))


Observer = Callable[[str, object, object], None]


def _start_vector(pencil, config):
    if config.q1 is not None:
        return np.asarray(config.q1, dtype=float)
    e = np.ones(pencil.n)
    if config.which == "smallest":
        return pencil.apply_a(e)
    return e


def solve(pencil: PencilOperator, config: SolverConfig, observer: Optional[Observer] = None) -> SolveReport:
    """Compute ``k`` extreme conjugate eigenpairs of a skew/SPD pencil.

    Parameters
    ----------
    pencil : PencilOperator
        The pencil; products are counted on a private view, so one pencil
        may serve several concurrent solves.
    config : SolverConfig
    observer : callable, optional
        Called as ``observer(event, state, payload)`` with events
        ``"step"`` (payload None, after every completed step),
        ``"extract"`` (payload: the Ritz triplets with residuals) and
        ``"restart"`` (payload: the :class:`RestartRotations` used).
        Intended for diagnostics and tests.

    Returns
    -------
    SolveReport
        Pairs are ordered from the most extreme inwards: descending
        ``theta`` for ``which='largest'``, ascending for ``'smallest'``.
    """
    t0 = time.perf_counter()
    config.validate(pencil.n)
    pencil = pencil.counting()
    n, k = pencil.n, config.k
    m = config.effective_m(n)

    norms = estimate_norms(pencil, config.m_l)
    state = init_state(
        pencil,
        _start_vector(pencil, config),
        m,
        cond_b=norms.cond_b,
        policy=config.reorth_policy,
        rng=config.seed,
    )
    on_step = (lambda st: observer("step", st, None)) if observer else None

    restarts = 0
    converged = False
    pairs: List[EigenPair] = []
    level_history = []
    while True:
        complete = extend(state, m, on_step=on_step)
        triplets = residual_norms(state, extract(state.factor))
        state.set_norm_h(triplets[0].theta)
        norms.norm_h = state.norm_h
        if not complete:
            # exhausted the space: the factorization is exact, drop null directions
            triplets = [t for t in triplets if t.theta > state.breakdown_tol]
        if observer:
            observer("extract", state, triplets)
        if config.diagnostics:
            level_history.append(measure_levels(state))
        if len(triplets) < k:
            logger.warning("only %d nonzero pairs exist, %d requested", len(triplets), k)
            break
        converged, idx = check_convergence(
            triplets, config.which, k, norms.norm_b, norms.norm_h, config.tol
        )
        logger.debug(
            "extraction",
            extra={
                "restart": restarts,
                "theta": [triplets[i].theta for i in idx],
                "residual": [triplets[i].residual_norm for i in idx],
            },
        )
        if converged:
            if config.which == "smallest":
                idx = idx[::-1]
            pairs = form_eigenpairs(state, triplets, idx)
            break
        if not complete or restarts >= config.i_max:
            break
        shifts = select_shifts(triplets, config.which, k)
        rotations = bidiag_implicit_qr(state.alphas[:m], state.betas[: m - 1], shifts)
        truncate(state, rotations, k)
        restarts += 1
        if observer:
            observer("restart", state, rotations)

    c = pencil.counters
    return SolveReport(
        eigenpairs=pairs,
        converged=converged,
        restarts=restarts,
        mv_count=c.mv,
        apply_a_count=c.apply_a,
        solve_b_count=c.solve_b,
        apply_b_count=c.apply_b,
        reorth_ops=state.reorth_ops,
        norms=norms,
        n=n,
        k=k,
        m=m,
        which=config.which,
        wall_time=time.perf_counter() - t0,
        level_history=level_history,
    )
