"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
quantity next to its pinned tolerance.  Run with ``pytest -s`` to see them.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from skewpencil import (
    SolverConfig,
    SparsePencil,
    gen_skew_tridiag,
    gen_toeplitz_spd,
    kron_sum_condition,
    read_matrix_market,
    solve,
    toeplitz_spd_eigenvalues,
)
from skewpencil.lanczos import EPS, extend, init_state, lbd_residuals, measure_levels
from skewpencil.oracle import (
    accuracy_bound_factor,
    align_pair,
    b_vector_angle,
    chebyshev_bound,
    dense_pencil_spectrum,
    gap_metric,
    projected_coupling_norm,
    sin_b_angles,
    tan_b_angles,
)
from skewpencil.ritz import direct_residual, extract, form_eigenpairs

from conftest import tridiag_pencil

TOL = 1e-8


def report(number, ok, detail):
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def toeplitz_pencil(n, rho, delta=1.0):
    return SparsePencil(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, rho, delta))


def random_case(rng):
    n = int(rng.integers(20, 201))
    R = rng.standard_normal((n, n))
    a = (R - R.T) / 2
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    kappa = 10 ** rng.uniform(0, 6)
    b = (Q * np.logspace(0, -np.log10(kappa), n)) @ Q.T
    b = (b + b.T) / 2
    k = int(rng.integers(1, 6))
    # a short subspace so that most runs restart several times
    m = int(rng.integers(k + 2, min(20, n // 2) + 1))
    return a, b, k, m


@pytest.fixture(scope="module")
def sweep():
    """Fifty random pencils solved with instrumentation for criteria 2, 3, 4, 6 and 8."""
    rng = np.random.default_rng(2024)
    stats = dict(
        theta_rel=0.0,
        residual_ratio=0.0,
        unconverged=0,
        cheap_rel=0.0,
        cheap_rel_above_floor=0.0,
        cheap_abs=0.0,
        level_ratio=0.0,
        lbd=0.0,
        orth=0.0,
        band_excess=0,
        sv=0.0,
        monotone=0.0,
        upper=0.0,
        restarts=0,
        extractions=0,
    )
    t0 = time.perf_counter()
    for _ in range(50):
        a, b, k, m = random_case(rng)
        pencil = SparsePencil(a, b)
        track = {}

        def observer(event, st, payload):
            if event == "step":
                th = np.linalg.svd(st.factor.matrix(), compute_uv=False)[0]
                if track.get("j") == st.j - 1:
                    stats["monotone"] = max(stats["monotone"], (track["theta"] - th) / th)
                track.update(theta=th, j=st.j)
            elif event == "extract":
                stats["extractions"] += 1
                stats["level_ratio"] = max(stats["level_ratio"], max(measure_levels(st)) / np.sqrt(EPS / m))
                pairs = form_eigenpairs(st, payload, range(len(payload)))
                for t, p in zip(payload, pairs):
                    direct = direct_residual(pencil, p)
                    diff = abs(direct - t.residual_norm)
                    stats["cheap_rel"] = max(stats["cheap_rel"], diff / direct if direct > 0 else np.inf * diff)
                    stats["cheap_abs"] = max(stats["cheap_abs"], diff / st.norm_h)
                    if direct > 1e-6 * st.norm_h:
                        stats["cheap_rel_above_floor"] = max(stats["cheap_rel_above_floor"], diff / direct)
                track["g"] = st.factor.matrix()
            elif event == "restart":
                stats["restarts"] += 1
                stats["lbd"] = max(stats["lbd"], lbd_residuals(st).max() / st.norm_h)
                mm = payload.c_tilde.shape[0]
                for X in (payload.c_tilde, payload.d_tilde):
                    stats["orth"] = max(stats["orth"], np.abs(X.T @ X - np.eye(mm)).max())
                    stats["band_excess"] += int(np.any(np.tril(X, -(mm - k) - 1) != 0))
                g = track["g"]
                sv_old = np.linalg.svd(g, compute_uv=False)
                sv_new = np.linalg.svd(payload.g_tilde, compute_uv=False)
                stats["sv"] = max(stats["sv"], np.abs(sv_old - sv_new).max() / sv_old[0])
                track.pop("j", None)

        rep = solve(pencil, SolverConfig(k=k, m=m, tol=TOL), observer=observer)
        sigmas = dense_pencil_spectrum(a, b).sigmas[:k]
        if not rep.converged:
            stats["unconverged"] += 1
            continue
        stats["theta_rel"] = max(stats["theta_rel"], np.max(np.abs(rep.thetas - sigmas) / sigmas))
        stats["upper"] = max(stats["upper"], np.max(rep.thetas - sigmas) / sigmas[0])
        bound = np.sqrt(rep.norms.norm_b) * rep.norms.norm_h * TOL
        stats["residual_ratio"] = max(
            stats["residual_ratio"], max(direct_residual(pencil, p) for p in rep.eigenpairs) / bound
        )
    stats["runtime"] = time.perf_counter() - t0
    return stats


def test_criterion_1_spectral_constants():
    t0 = time.perf_counter()
    ev3 = toeplitz_spd_eigenvalues(1919, 3.0, 1.0)
    ev2 = toeplitz_spd_eigenvalues(1919, 2.000001, 1.0)
    measured = [
        ev3[-1] / ev3[0],
        ev2[-1] / ev2[0],
        kron_sum_condition(32, 3.0, 1.0),
        kron_sum_condition(32, 2.000001, 1.0),
    ]
    expected = ["5.00", "1.09e+06", "4.95", "4.41e+02"]
    got = [f"{x:.3g}" for x in measured]
    ok = [float(g) == float(e) for g, e in zip(got, expected)]
    elapsed = time.perf_counter() - t0
    report(1, all(ok) and elapsed < 10, f"kappa {got} vs {expected}, {elapsed:.2f} s")


def test_criterion_2_oracle_equivalence(sweep):
    ok = (
        sweep["unconverged"] == 0
        and sweep["theta_rel"] <= 1e-9
        and sweep["residual_ratio"] <= 1.0
        and sweep["runtime"] < 60
    )
    report(
        2,
        ok,
        f"{sweep['unconverged']} unconverged, max rel theta error {sweep['theta_rel']:.1e} <= 1e-9, "
        f"max residual/threshold {sweep['residual_ratio']:.2f} <= 1, "
        f"{sweep['restarts']} restarts, {sweep['runtime']:.1f} s < 60 s",
    )


def test_criterion_3_cheap_residual(sweep):
    # the printed form: relative agreement at every extraction, including
    # residuals that are already at roundoff level
    ok = sweep["cheap_rel"] <= 1e-8
    report(
        3,
        ok,
        f"max rel difference {sweep['cheap_rel']:.1e} <= 1e-8 over {sweep['extractions']} extractions; "
        f"above 1e-6*||H||: {sweep['cheap_rel_above_floor']:.1e}; "
        f"max abs difference {sweep['cheap_abs']:.1e}*||H||",
    )


def test_criterion_4_semi_orthogonality(sweep):
    pencil = toeplitz_pencil(2000, 2.000001)
    levels = []

    def observer(event, st, payload):
        # steps happen before the convergence test of their cycle
        if event == "step":
            levels.append(max(measure_levels(st)))

    rep = solve(pencil, SolverConfig(k=5, reorth_policy="none", i_max=20), observer=observer)
    loss = max(levels)
    ok = sweep["level_ratio"] <= 8 and loss > np.sqrt(EPS)
    report(
        4,
        ok,
        f"partial: max level {sweep['level_ratio']:.2e}*sqrt(eps/m) <= 8; "
        f"none: level {loss:.1e} > sqrt(eps) = {np.sqrt(EPS):.1e} (converged={rep.converged})",
    )


def test_criterion_5_partial_vs_full():
    pencil = toeplitz_pencil(2000, 3.0)
    part = solve(pencil, SolverConfig(k=10, reorth_policy="partial"))
    full = solve(pencil, SolverConfig(k=10, reorth_policy="full"))
    rel = np.max(np.abs(part.thetas - full.thetas) / full.thetas) if part.converged and full.converged else np.inf
    ok = rel <= 1e-12 and part.reorth_ops < full.reorth_ops
    report(5, ok, f"theta rel diff {rel:.1e} <= 1e-12, reorth_ops {part.reorth_ops} < {full.reorth_ops}")


def test_criterion_6_restart_consistency(sweep):
    ok = sweep["lbd"] <= 1e-9 and sweep["orth"] <= 1e-13 and sweep["band_excess"] == 0 and sweep["sv"] <= 1e-12
    report(
        6,
        ok,
        f"{sweep['restarts']} restarts: relation {sweep['lbd']:.1e}*||H|| <= 1e-9, "
        f"orthogonality {sweep['orth']:.1e} <= 1e-13, {sweep['band_excess']} bandwidth violations, "
        f"singular values {sweep['sv']:.1e}*theta_1 <= 1e-12",
    )


def test_criterion_7_breakdown_exactness():
    details, ok = [], True
    for n in (4, 6):
        ell = n // 2
        breakdowns = []

        def observer(event, st, payload):
            if event == "extract" and st.breakdown is not None:
                breakdowns.append(st.breakdown[1])

        rep = solve(tridiag_pencil(n), SolverConfig(k=ell), observer=observer)
        exact = 2 * np.cos(np.arange(1, ell + 1) * np.pi / (n + 1))
        err = np.max(np.abs(rep.thetas - exact)) if rep.converged else np.inf
        step = breakdowns[0] if breakdowns else None
        ok &= err <= 1e-12 and step is not None and step <= ell
        details.append(f"S{n}: breakdown at step {step} <= {ell}, error {err:.1e}")
    report(7, ok, "; ".join(details))


def test_criterion_8_monotone_interlacing(sweep):
    ok = sweep["monotone"] <= 1e-13 and sweep["upper"] <= 1e-9
    report(
        8,
        ok,
        f"max theta_1 decrease {sweep['monotone']:.1e}*theta_1 <= 1e-13, "
        f"max theta - sigma {sweep['upper']:.1e}*sigma_1 <= 1e-9",
    )


def test_criterion_9_a_priori_bounds():
    rng = np.random.default_rng(9)
    counts = {"convergence": [0, 0], "accuracy": [0, 0], "eigenvalue": [0, 0]}
    t0 = time.perf_counter()
    for _ in range(20):
        n = int(rng.integers(12, 61))
        R = rng.standard_normal((n, n))
        a = (R - R.T) / 2
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        b = (Q * np.logspace(0, -rng.uniform(0, 3), n)) @ Q.T
        b = (b + b.T) / 2
        spec = dense_pencil_spectrum(a, b)
        m = int(rng.integers(2, spec.ell))
        st = init_state(SparsePencil(a, b), rng.standard_normal(n), m, cond_b=np.linalg.cond(b), policy="full")
        extend(st, m)
        P, Qb = st.P[:, :m], st.Q[:, :m]
        subspace = np.hstack([P, Qb])
        start = np.column_stack([st.P[:, 0], st.Q[:, 0]])
        trip = extract(st.factor)
        thetas = np.array([t.theta for t in trip])
        coupling = projected_coupling_norm(a, b, subspace)
        for j in range(1, min(m, 4) + 1):
            X = spec.basis(j)
            sigma = spec.sigmas[j - 1]
            if np.linalg.cond(X.T @ b @ start) < 1e8:
                lhs = np.linalg.norm(tan_b_angles(subspace, X, b))
                rhs = chebyshev_bound(spec.sigmas, j, m, np.linalg.norm(tan_b_angles(start, X, b)))
                counts["convergence"][0] += 1
                counts["convergence"][1] += lhs <= rhs * (1 + 1e-8) + 1e-10
            jp = int(np.argmin(np.abs(thetas - sigma)))
            u, v = P @ trip[jp].c, Qb @ trip[jp].d
            sin_pair = sin_b_angles(np.column_stack([u, v]), X, b)
            lhs = np.linalg.norm(sin_pair)
            rhs = accuracy_bound_factor(coupling, sigma, thetas, jp) * np.linalg.norm(sin_b_angles(subspace, X, b))
            counts["accuracy"][0] += 1
            counts["accuracy"][1] += lhs <= rhs * (1 + 1e-8) + 1e-10
            aligned = align_pair(X, u, b)
            if b_vector_angle(u, aligned[:, 0], b) <= np.pi / 4 and b_vector_angle(v, aligned[:, 1], b) <= np.pi / 4:
                lhs = abs(thetas[jp] - sigma)
                rhs = (spec.sigmas[0] + sigma) * sin_pair[0] ** 2
                counts["eigenvalue"][0] += 1
                counts["eigenvalue"][1] += lhs <= rhs * (1 + 1e-8) + 1e-12 * spec.sigmas[0]
    elapsed = time.perf_counter() - t0
    ok = all(total > 0 and held == total for total, held in counts.values()) and elapsed < 120
    detail = ", ".join(f"{name} {held}/{total}" for name, (total, held) in counts.items())
    report(9, ok, f"{detail} held, {elapsed:.1f} s < 120 s")


def test_criterion_10_smallest_mode():
    pencil = tridiag_pencil(100, rho=3)
    rep = solve(pencil, SolverConfig(k=2, which="smallest"))
    smallest = dense_pencil_spectrum(pencil.a_matrix, pencil.b_matrix).sigmas[::-1][:2]
    rel = np.max(np.abs(rep.thetas - smallest) / smallest) if rep.converged else np.inf
    report(10, rel <= 1e-8, f"converged={rep.converged}, rel error {rel:.1e} <= 1e-8")


PLSK = Path(os.environ.get("SKEWPENCIL_PLSK1919", Path(__file__).parent / "data" / "plsk1919.mtx"))


@pytest.mark.skipif(not PLSK.exists(), reason="plsk1919.mtx not available")
def test_plsk1919_gap():
    a = read_matrix_market(PLSK)
    spec = dense_pencil_spectrum(a, gen_toeplitz_spd(a.shape[0], 3.0, 1.0))
    gap = gap_metric(spec.sigmas, 10)
    report("plsk1919", f"{gap:.2g}" == "0.0094", f"gap(10) = {gap:.3e} vs 9.42e-3 to 2 digits")
