"""
Smallest pairs and the a-priori convergence bound
=================================================

The smallest conjugate pairs are harder to reach since the spectrum is
denser there.  The second half compares the angle between the Krylov
subspace and a wanted pair with its Chebyshev-type bound on a small
random pencil.
"""

import numpy as np

from skewpencil import SolverConfig, SparsePencil, gen_skew_tridiag, gen_toeplitz_spd, solve
from skewpencil.lanczos import extend, init_state
from skewpencil.oracle import chebyshev_bound, dense_pencil_spectrum, gap_metric, tan_b_angles

n = 100
pencil = SparsePencil(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0))
rep = solve(pencil, SolverConfig(k=2, which="smallest"))
sigmas = dense_pencil_spectrum(pencil.a_matrix, pencil.b_matrix).sigmas
print("smallest thetas:", rep.thetas, " reference:", sigmas[::-1][:2])
print(f"restarts: {rep.restarts}, gap for the two smallest: {gap_metric(sigmas, 2, 'smallest'):.2e}")

# bound check on a random pencil
rng = np.random.default_rng(0)
n = 40
R = rng.standard_normal((n, n))
a = (R - R.T) / 2
b = np.diag(np.linspace(1, 10, n))
spec = dense_pencil_spectrum(a, b)
start = rng.standard_normal(n)
for m in (2, 4, 6, 8, 10):
    state = init_state(SparsePencil(a, b), start, m, policy="full")
    extend(state, m)
    subspace = np.hstack([state.P[:, :m], state.Q[:, :m]])
    first = np.column_stack([state.P[:, 0], state.Q[:, 0]])
    X = spec.basis(1)
    measured = np.linalg.norm(tan_b_angles(subspace, X, b))
    bound = chebyshev_bound(spec.sigmas, 1, m, np.linalg.norm(tan_b_angles(first, X, b)))
    print(f"m = {m:2d}: tan angle {measured:.2e} <= bound {bound:.2e}")
