"""Pencil operators, B-geometry helpers, norm estimation and test pencils.

The solver only ever touches a pencil through :class:`PencilOperator`:
products with ``A`` and ``B`` and solves with ``B``.  Concrete pencils built
from explicit matrices are :class:`SparsePencil` instances, which factor ``B``
once at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "NotPositiveDefiniteError",
    "OpCounters",
    "PencilOperator",
    "SparsePencil",
    "NormEstimates",
    "b_inner",
    "b_norm",
    "estimate_norms",
    "gen_toeplitz_spd",
    "toeplitz_spd_eigenvalues",
    "gen_skew_tridiag",
    "gen_kron_sum_pencil",
    "kron_sum_condition",
    "split_pencil",
]

Vector = np.ndarray


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix that must be SPD fails to factor."""


@dataclass
class OpCounters:
    apply_a: int = 0
    apply_b: int = 0
    solve_b: int = 0

    @property
    def mv(self) -> int:
        """Products with ``A`` plus solves with ``B``."""
        return self.apply_a + self.solve_b


class PencilOperator:
    """Matrix-free access to a pencil ``(A, B)``.

    Parameters
    ----------
    n : int
        Dimension of the pencil.
    apply_a, apply_b, solve_b : callable
        ``v -> A v``, ``v -> B v`` and ``v -> B^{-1} v``.  ``A`` must be
        skew-symmetric and ``B`` symmetric positive definite; neither is
        checked here (see :meth:`check`).
    """

    def __init__(
        self,
        n: int,
        apply_a: Callable[[Vector], Vector],
        apply_b: Callable[[Vector], Vector],
        solve_b: Callable[[Vector], Vector],
    ):
        if n < 1:
            raise ValueError(f"pencil dimension must be positive, got {n}")
        self.n = int(n)
        self._apply_a = apply_a
        self._apply_b = apply_b
        self._solve_b = solve_b
        self.counters = OpCounters()

    def _check_len(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}, got shape {v.shape}")
        return v

    def apply_a(self, v: Vector) -> Vector:
        self.counters.apply_a += 1
        return np.asarray(self._apply_a(self._check_len(v)), dtype=float)

    def apply_b(self, v: Vector) -> Vector:
        self.counters.apply_b += 1
        return np.asarray(self._apply_b(self._check_len(v)), dtype=float)

    def solve_b(self, v: Vector) -> Vector:
        self.counters.solve_b += 1
        return np.asarray(self._solve_b(self._check_len(v)), dtype=float)

    def apply_op(self, v: Vector) -> Vector:
        """``B^{-1} A v``; one product with ``A`` and one solve with ``B``."""
        return self.solve_b(self.apply_a(v))

    def counting(self) -> "PencilOperator":
        """A view on the same operators with its own fresh counters.

        Lets several solves share one pencil without mixing their tallies.
        """
        view = PencilOperator(self.n, self._apply_a, self._apply_b, self._solve_b)
        return view

    def reset_counters(self):
        self.counters = OpCounters()

    def check(self, rng=None, samples: int = 10, norm_a: Optional[float] = None):
        """Randomized sanity check of skew-symmetry of ``A`` and positivity of ``B``.

        Raises ``ValueError`` on failure.  Counters are restored afterwards.
        """
        rng = np.random.default_rng(rng)
        saved = OpCounters(**vars(self.counters))
        eps = np.finfo(float).eps
        try:
            for _ in range(samples):
                v = rng.standard_normal(self.n)
                av = self.apply_a(v)
                scale = norm_a if norm_a is not None else np.linalg.norm(av) / np.linalg.norm(v)
                if abs(v @ av) > 100 * self.n * eps * max(scale, 1e-300) * (v @ v):
                    raise ValueError("A does not look skew-symmetric")
                if v @ self.apply_b(v) <= 0:
                    raise ValueError("B does not look positive definite")
        finally:
            self.counters = saved


def _is_sparse(mat) -> bool:
    return sp.issparse(mat)


class _SuperLUCholesky:
    """SPD solve backed by a symmetric-mode SuperLU factorization.

    With diagonal pivoting only, ``B = L U`` with identical row and column
    permutations is an ``L D L^T`` factorization in disguise, so ``B`` is SPD
    exactly when every pivot on the diagonal of ``U`` is positive.
    """

    def __init__(self, b):
        b = sp.csc_matrix(b, dtype=float)
        try:
            lu = spla.splu(
                b,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options=dict(SymmetricMode=True),
            )
        except RuntimeError as exc:  # exactly singular
            raise NotPositiveDefiniteError("symmetric part not positive definite") from exc
        if not np.array_equal(lu.perm_r, lu.perm_c) or np.any(lu.U.diagonal() <= 0):
            raise NotPositiveDefiniteError("symmetric part not positive definite")
        self._lu = lu

    def __call__(self, v):
        return self._lu.solve(v)


class _DenseCholesky:
    def __init__(self, b):
        try:
            self._cf = scipy.linalg.cho_factor(np.asarray(b, dtype=float), lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("symmetric part not positive definite") from exc

    def __call__(self, v):
        return scipy.linalg.cho_solve(self._cf, v)


class SparsePencil(PencilOperator):
    """A pencil given by explicit matrices, sparse or dense.

    ``B`` is factored once here.  Pass ``solve_b`` to replace the direct
    factorization by a custom solver (for example an inner iterative solve).
    """

    def __init__(self, a_matrix, b_matrix, solve_b=None, check=True):
        a_matrix = a_matrix.tocsr() if _is_sparse(a_matrix) else np.asarray(a_matrix, dtype=float)
        b_matrix = b_matrix.tocsr() if _is_sparse(b_matrix) else np.asarray(b_matrix, dtype=float)
        n = a_matrix.shape[0]
        if a_matrix.shape != (n, n) or b_matrix.shape != (n, n):
            raise ValueError(
                f"A and B must be square of equal size, got {a_matrix.shape} and {b_matrix.shape}"
            )
        if check:
            if _asym_norm(a_matrix, skew=True) != 0:
                raise ValueError("A is not skew-symmetric")
            if _asym_norm(b_matrix, skew=False) != 0:
                raise ValueError("B is not symmetric")
        if solve_b is None:
            b_factor = _SuperLUCholesky(b_matrix) if _is_sparse(b_matrix) else _DenseCholesky(b_matrix)
        else:
            b_factor = solve_b
        self.a_matrix = a_matrix
        self.b_matrix = b_matrix
        self.b_factor = b_factor
        super().__init__(n, a_matrix.__matmul__, b_matrix.__matmul__, b_factor)


def _asym_norm(mat, skew):
    sign = 1.0 if skew else -1.0
    diff = mat + sign * mat.T
    if _is_sparse(diff):
        diff.eliminate_zeros()
        return 0.0 if diff.nnz == 0 else float(abs(diff).max())
    return float(np.abs(diff).max())


def b_inner(x: Vector, y: Vector, pencil: PencilOperator) -> float:
    """``x^T B y`` (one product with ``B``)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (pencil.n,):
        raise ValueError(f"expected a vector of length {pencil.n}, got shape {x.shape}")
    return float(x @ pencil.apply_b(y))


def b_norm(x: Vector, pencil: PencilOperator) -> float:
    return float(np.sqrt(max(b_inner(x, x, pencil), 0.0)))


@dataclass
class NormEstimates:
    """Estimates of ``||B||``, ``cond(B)`` and ``||H||`` used by the solver.

    ``norm_h`` is filled in by the solver from the largest Ritz value.
    """

    norm_b: float
    cond_b: float
    m_l: int
    norm_h: Optional[float] = None


def _lanczos_lambda_max(matvec, n, steps):
    """Largest Ritz value of a symmetric Lanczos run from the all-ones vector.

    Full reorthogonalization; stops early on an invariant subspace.
    """
    q = np.ones(n) / np.sqrt(n)
    basis = [q]
    alphas, betas = [], []
    for step in range(min(steps, n)):
        w = matvec(basis[-1])
        if step == 0 and not np.any(w):
            raise ValueError("Lanczos breakdown at the first step: operator annihilates the start vector")
        alpha = basis[-1] @ w
        alphas.append(alpha)
        w = w - alpha * basis[-1]
        if step > 0:
            w -= betas[-1] * basis[-2]
        stacked = np.array(basis)
        for _ in range(2):
            w -= stacked.T @ (stacked @ w)
        beta = np.linalg.norm(w)
        if beta <= 1e-12 * max(abs(a) for a in alphas) or step == min(steps, n) - 1:
            break
        betas.append(beta)
        basis.append(w / beta)
    ritz = scipy.linalg.eigvalsh_tridiagonal(np.array(alphas), np.array(betas[: len(alphas) - 1]))
    return float(ritz[-1])


def estimate_norms(pencil: PencilOperator, m_l: int = 30) -> NormEstimates:
    """Estimate ``||B||`` and ``cond(B)`` by ``m_l``-step Lanczos on ``B`` and ``B^{-1}``."""
    if m_l < 1:
        raise ValueError(f"m_l must be at least 1, got {m_l}")
    lmax_b = _lanczos_lambda_max(pencil.apply_b, pencil.n, m_l)
    lmax_binv = _lanczos_lambda_max(pencil.solve_b, pencil.n, m_l)
    if lmax_b <= 0 or lmax_binv <= 0:
        raise ValueError("B does not look positive definite")
    return NormEstimates(norm_b=lmax_b, cond_b=max(lmax_b * lmax_binv, 1.0), m_l=m_l)


def gen_toeplitz_spd(n: int, rho: float, delta: float) -> sp.csr_matrix:
    """Tridiagonal Toeplitz matrix with ``rho`` on the diagonal and ``delta`` beside it."""
    if not rho > 2 * delta > 0:
        raise ValueError(f"need rho > 2*delta > 0 for an SPD matrix, got rho={rho}, delta={delta}")
    off = np.full(n - 1, float(delta))
    return sp.diags([off, np.full(n, float(rho)), off], [-1, 0, 1], format="csr")


def toeplitz_spd_eigenvalues(n: int, rho: float, delta: float) -> np.ndarray:
    """Closed-form eigenvalues of :func:`gen_toeplitz_spd`, ascending."""
    k = np.arange(n, 0, -1)
    return rho + 2 * delta * np.cos(k * np.pi / (n + 1))


def gen_skew_tridiag(n: int, upsilon: float) -> sp.csr_matrix:
    """Skew-symmetric tridiagonal matrix, ``+upsilon`` above and ``-upsilon`` below the diagonal."""
    if upsilon == 0:
        raise ValueError("upsilon must be nonzero")
    off = np.full(n - 1, float(upsilon))
    return sp.diags([-off, off], [-1, 1], shape=(n, n), format="csr")


def _kron_sum3(blocks):
    j = blocks[0].shape[0]
    eye = sp.identity(j, format="csr")
    x, y, z = blocks
    return (
        sp.kron(eye, sp.kron(eye, x))
        + sp.kron(eye, sp.kron(y, eye))
        + sp.kron(z, sp.kron(eye, eye))
    ).tocsr()


def gen_kron_sum_pencil(j: int, upsilons, rho: float, delta: float) -> SparsePencil:
    """Three-dimensional Kronecker-sum pencil of size ``j**3``.

    ``A`` sums skew tridiagonal factors with parameters ``upsilons`` along
    the three axes and ``B`` sums the matching Toeplitz SPD factors.
    """
    if j < 2:
        raise ValueError(f"j must be at least 2, got {j}")
    u1, u2, u3 = upsilons
    t = gen_toeplitz_spd(j, rho, delta)
    a = _kron_sum3([gen_skew_tridiag(j, u1), gen_skew_tridiag(j, u2), gen_skew_tridiag(j, u3)])
    b = _kron_sum3([t, t, t])
    return SparsePencil(a, b)


def kron_sum_condition(j: int, rho: float, delta: float) -> float:
    c = np.cos(np.pi / (j + 1))
    return (3 * rho + 6 * delta * c) / (3 * rho - 6 * delta * c)


def split_pencil(c_matrix) -> SparsePencil:
    """Split ``C`` into its skew part ``A`` and its symmetric part ``B``."""
    if c_matrix.shape[0] != c_matrix.shape[1]:
        raise ValueError(f"C must be square, got shape {c_matrix.shape}")
    if _is_sparse(c_matrix):
        c_matrix = sp.csr_matrix(c_matrix, dtype=float)
    else:
        c_matrix = np.asarray(c_matrix, dtype=float)
    a = (c_matrix - c_matrix.T) / 2
    b = (c_matrix + c_matrix.T) / 2
    return SparsePencil(a, b)
