"""
Largest conjugate pairs of a tridiagonal pencil
===============================================

A skew tridiagonal ``A`` paired with the SPD Toeplitz matrix
``B = tridiag(1, 3, 1)``.  The eigenvalues of ``(A, B)`` come in purely
imaginary pairs ``+-i sigma``; the solver returns the largest ``sigma``
together with real vectors ``u, v`` such that ``A u = -sigma B v`` and
``A v = sigma B u``.
"""

import numpy as np

from skewpencil import SolverConfig, SparsePencil, gen_skew_tridiag, gen_toeplitz_spd, solve
from skewpencil.oracle import dense_pencil_spectrum
from skewpencil.ritz import direct_residual

n = 1000
pencil = SparsePencil(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0))

report = solve(pencil, SolverConfig(k=5, m=30, tol=1e-10))
print(f"converged: {report.converged} after {report.restarts} restarts")
print(f"products with A or B^-1: {report.mv_count}, projections: {report.reorth_ops}")

# compare with the dense reference
sigmas = dense_pencil_spectrum(pencil.a_matrix, pencil.b_matrix).sigmas[:5]
for pair, sigma in zip(report.eigenpairs, sigmas):
    print(f"theta = {pair.theta:.15f}  rel. error {abs(pair.theta - sigma) / sigma:.1e}  "
          f"residual {direct_residual(pencil, pair):.1e}")

# the pair vectors give the complex eigenvectors (u -+ i v) / sqrt(2)
a = pencil.a_matrix
pair = report.eigenpairs[0]
lam, x = pair.eigenvalues()[0], pair.eigenvectors()[0]
print("||A x - lambda B x|| =", np.linalg.norm(a @ x - lam * (pencil.b_matrix @ x)))
