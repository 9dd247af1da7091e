"""Dense reference computations for small pencils.

Used to validate the iterative solver: the full generalized spectrum,
canonical angles in the B-geometry, spectral gaps and the a-priori
convergence and accuracy bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg as sla

from .pencil import NotPositiveDefiniteError

__all__ = [
    "DenseSpectrum",
    "dense_pencil_spectrum",
    "b_sqrt",
    "sin_b_angles",
    "tan_b_angles",
    "gap_metric",
    "chebyshev_bound",
    "projected_coupling_norm",
    "accuracy_bound_factor",
    "align_pair",
    "b_vector_angle",
]

NULL_RTOL = 1e-10


@dataclass
class DenseSpectrum:
    """Generalized spectral values ``sigmas`` (descending) and paired bases.

    ``bases[j]`` is the ``n x 2`` matrix ``[u_j, v_j]`` with
    ``A u_j = -sigma_j B v_j`` and ``A v_j = sigma_j B u_j``.
    """

    sigmas: np.ndarray
    bases: List[np.ndarray]
    null_dim: int

    @property
    def ell(self) -> int:
        return len(self.sigmas)

    def basis(self, j: int) -> np.ndarray:
        """Pair basis for 1-based index ``j``."""
        return self.bases[j - 1]


def _dense(x):
    return x.toarray() if hasattr(x, "toarray") else np.asarray(x, dtype=float)


def _cholesky(b):
    try:
        return np.linalg.cholesky(b)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("B is not symmetric positive definite") from None


def dense_pencil_spectrum(a, b) -> DenseSpectrum:
    """All conjugate pairs of a dense skew/SPD pencil via Cholesky congruence.

    Values below ``1e-10 * sigma_1`` count towards the null space.
    """
    a, b = _dense(a), _dense(b)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n, n):
        raise ValueError("A and B must be square of the same size")
    L = _cholesky(b)
    Linv_a = sla.solve_triangular(L, a, lower=True)
    h = sla.solve_triangular(L, Linv_a.T, lower=True).T
    h = (h - h.T) / 2
    # iH is Hermitian; its negative eigenvalues -sigma carry H y = i sigma y
    lam, Y = np.linalg.eigh(1j * h)
    sigma_max = max(-lam[0], 0.0)
    keep = np.flatnonzero(-lam > NULL_RTOL * sigma_max) if sigma_max > 0 else np.array([], int)
    sigmas, bases = [], []
    for idx in keep:
        y = Y[:, idx]
        wz = np.sqrt(2) * np.column_stack([y.real, y.imag])
        # guard against mixing within a repeated value
        wz, _ = np.linalg.qr(wz)
        w, z = wz[:, 0], wz[:, 1]
        s = float(w @ h @ z)
        if s < 0:
            z = -z
        u = sla.solve_triangular(L.T, w, lower=False)
        v = sla.solve_triangular(L.T, z, lower=False)
        sigmas.append(-lam[idx])
        bases.append(np.column_stack([u, v]))
    return DenseSpectrum(sigmas=np.asarray(sigmas), bases=bases, null_dim=n - 2 * len(sigmas))


def b_sqrt(b) -> np.ndarray:
    """Symmetric square root ``M`` with ``M @ M = B``."""
    b = _dense(b)
    w, V = np.linalg.eigh((b + b.T) / 2)
    if w[0] <= 0:
        raise NotPositiveDefiniteError("B is not symmetric positive definite")
    return (V * np.sqrt(w)) @ V.T


def _b_angles(w_basis, z_basis, b):
    W = np.atleast_2d(np.asarray(w_basis, dtype=float).T).T
    Z = np.atleast_2d(np.asarray(z_basis, dtype=float).T).T
    for name, X in (("first", W), ("second", Z)):
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise ValueError(f"{name} basis is rank deficient")
    M = b_sqrt(b)
    return sla.subspace_angles(M @ W, M @ Z)


def sin_b_angles(w_basis, z_basis, b) -> np.ndarray:
    """Sines of the B-canonical angles between two subspaces, descending."""
    return np.sort(np.sin(_b_angles(w_basis, z_basis, b)))[::-1]


def tan_b_angles(w_basis, z_basis, b) -> np.ndarray:
    """Tangents of the B-canonical angles, descending; ``inf`` at right angles."""
    ang = np.sort(_b_angles(w_basis, z_basis, b))[::-1]
    with np.errstate(over="ignore"):
        t = np.tan(ang)
    t[np.isclose(ang, np.pi / 2, rtol=0, atol=1e-15)] = np.inf
    return t


def gap_metric(sigmas, k: int, which: str = "largest") -> float:
    """Relative squared gap governing convergence towards ``k`` extreme pairs."""
    s2 = np.asarray(sigmas, dtype=float) ** 2
    ell = len(s2)
    if ell <= k:
        raise ValueError(f"need more than k={k} values, got {ell}")
    vals = []
    for j in range(1, k + 1):
        if which == "largest":
            num, den = s2[j - 1] - s2[j], s2[j] - s2[ell - 1]
        elif which == "smallest":
            num, den = s2[ell - j - 1] - s2[ell - j], s2[0] - s2[ell - j - 1]
        else:
            raise ValueError(f"which must be 'largest' or 'smallest', got {which!r}")
        vals.append(np.inf if den == 0 else num / den)
    return float(min(vals))


def _chebyshev(deg, x):
    return float(np.cosh(deg * np.arccosh(x)))


def chebyshev_bound(sigmas, j: int, m: int, initial_tangent: float = 1.0, smallest: bool = False) -> float:
    """``eta_j / chi_{m-j}(xi_j) * initial_tangent``.

    With ``smallest=True`` the primed constants for the ``j``-th smallest
    value are used instead.
    """
    s2 = np.asarray(sigmas, dtype=float) ** 2
    ell = len(s2)
    if not 1 <= j <= m < ell:
        raise ValueError(f"need 1 <= j <= m < ell, got j={j}, m={m}, ell={ell}")
    if smallest:
        tgt, nxt, far = s2[ell - j], s2[ell - j - 1], s2[0]
        xi = 1 + 2 * (tgt - nxt) / (nxt - far) if nxt != far else np.inf
        eta = np.prod([(s2[ell - i] - far) / (s2[ell - i] - tgt) for i in range(1, j)])
    else:
        tgt, nxt, far = s2[j - 1], s2[j], s2[ell - 1]
        xi = 1 + 2 * (tgt - nxt) / (nxt - far) if nxt != far else np.inf
        eta = np.prod([(s2[i - 1] - far) / (s2[i - 1] - tgt) for i in range(1, j)])
    if not xi > 1:
        raise ValueError(f"degenerate spectrum: xi = {xi} <= 1")
    return float(eta / _chebyshev(m - j, xi) * initial_tangent)


def projected_coupling_norm(a, b, subspace) -> float:
    """``||P H (I - P)||_2`` where ``P`` projects onto ``M @ span(subspace)``."""
    a = _dense(a)
    M = b_sqrt(b)
    Minv = np.linalg.inv(M)
    h = Minv @ a @ Minv
    Qs, _ = np.linalg.qr(M @ subspace)
    P = Qs @ Qs.T
    return float(np.linalg.norm(P @ h @ (np.eye(len(P)) - P), 2))


def accuracy_bound_factor(coupling: float, sigma: float, thetas, j_prime: int) -> float:
    """``sqrt(1 + coupling^2 / min_{i != j'} |sigma - theta_i|^2)``, 0-based ``j_prime``."""
    others = np.delete(np.asarray(thetas, dtype=float), j_prime)
    if len(others) == 0:
        return 1.0
    sep = np.min(np.abs(sigma - others))
    return float(np.sqrt(1 + coupling**2 / sep**2)) if sep > 0 else np.inf


def align_pair(basis, u_approx, b) -> np.ndarray:
    """Rotate ``[u, v]`` within its plane so ``u`` points along the B-projection of ``u_approx``.

    Any such rotation is again a valid pair basis.
    """
    b = _dense(b)
    coef = basis.T @ (b @ u_approx)
    phi = np.arctan2(coef[1], coef[0])
    c, s = np.cos(phi), np.sin(phi)
    u, v = basis[:, 0], basis[:, 1]
    return np.column_stack([c * u + s * v, -s * u + c * v])


def b_vector_angle(x, y, b) -> float:
    """Angle in ``[0, pi]`` between two vectors in the B-inner product."""
    b = _dense(b)
    cos = (x @ b @ y) / np.sqrt((x @ b @ x) * (y @ b @ y))
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))
