"""
How much reorthogonalization is needed
======================================

Without any reorthogonalization the two Lanczos bases lose B-orthogonality
quickly once Ritz values converge.  Partial reorthogonalization tracks the
loss with cheap recurrences and only projects when an estimate crosses
``sqrt(eps / m)``; full reorthogonalization projects against everything at
every step.
"""

import numpy as np

from skewpencil import SolverConfig, SparsePencil, gen_skew_tridiag, gen_toeplitz_spd, solve
from skewpencil.lanczos import EPS, measure_levels

n = 2000
# rho close to 2 makes B ill conditioned
pencil = SparsePencil(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 2.000001, 1.0))

for policy in ("none", "partial", "full"):
    worst = []

    def observer(event, state, payload):
        if event == "step":
            worst.append(max(measure_levels(state)))

    rep = solve(pencil, SolverConfig(k=5, m=30, reorth_policy=policy, i_max=20), observer=observer)
    print(f"{policy:>8}: converged={rep.converged}  restarts={rep.restarts:3d}  "
          f"projections={rep.reorth_ops:6d}  worst level={max(worst):.1e}")

print(f"semi-orthogonality target sqrt(eps/m) = {np.sqrt(EPS / 30):.1e}")
