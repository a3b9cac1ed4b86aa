"""Acceptance suite: every criterion runs at its stated tolerance and prints
one PASS line.  Run with `pytest tests/test_acceptance.py -v -s`.
"""

import os
import time

import numpy as np
import pytest

import robustdrift as rd
from robustdrift.cli import main
from robustdrift.filters import FilterState, FiltrationKind
from robustdrift.simulation import substream

from conftest import make_market

N_ROW_TARGET = np.array([1.6179, 1.5996, 2.0196, 2.0426])
JOBS = min(4, os.cpu_count() or 1)


def _report(name, detail=""):
    print(f"\nACCEPTANCE {name}: PASS {detail}")


# -- 1: deterministic no-observation row ------------------------------------


def test_criterion_1_deterministic_row(table1_config, tmp_path, capsys):
    import json

    start = time.perf_counter()
    code = main(
        ["study", "--kinds", "N", "--paths", "5", "--out", str(tmp_path)]
    )
    elapsed = time.perf_counter() - start
    assert code == 0
    payload = json.loads((tmp_path / "study.json").read_text())
    cells = payload["study"]["cells"]["N"]
    values = np.array([cells[c]["mean"] for c in payload["study"]["columns"]])
    stds = np.array([cells[c]["std"] for c in payload["study"]["columns"]])
    np.testing.assert_allclose(values, N_ROW_TARGET, atol=0.01)
    assert np.all(stds <= 1e-8)
    assert elapsed < 5.0
    with capsys.disabled():
        _report("1 (deterministic row)", f"values={values.round(4)} in {elapsed:.2f}s")


def test_grid_convergence_supplement(table1_config):
    values = {}
    for n_steps in (250, 500):
        rep = rd.run_study(
            table1_config.market, table1_config.drift, [FiltrationKind.N],
            n_experts=10, n_sims=1, seed=1, n_steps=n_steps,
        )
        values[n_steps] = rep.means[FiltrationKind.N]
    assert np.abs(values[250] - values[500]).max() < 1e-3


# -- 2: qualitative ordering at desk scale -----------------------------------


def test_criterion_2_ordering(table1_config, capsys):
    start = time.perf_counter()
    report = rd.run_study(
        table1_config.market,
        table1_config.drift,
        tuple(FiltrationKind),
        n_experts=10,
        n_sims=2000,
        seed=table1_config.seed,
        mode="plug_in",
        n_steps=table1_config.n_steps,
        eta=table1_config.eta,
        n_jobs=JOBS,
    )
    elapsed = time.perf_counter() - start
    assert elapsed < 600.0

    robust = {k: report.means[k][0] for k in FiltrationKind}
    assert robust[FiltrationKind.N] < robust[FiltrationKind.R]
    assert robust[FiltrationKind.N] < robust[FiltrationKind.E]
    assert robust[FiltrationKind.C] == max(robust.values())

    gaps = {}
    for kind in (FiltrationKind.R, FiltrationKind.E, FiltrationKind.C):
        gap = report.means[kind][0] - report.means[kind][1]
        se = report.standard_errors(kind)
        combined = np.hypot(se[0], se[1])
        assert gap > 2.0 * combined, f"{kind}: gap {gap} vs 2se {2 * combined}"
        gaps[kind.value] = round(float(gap / combined), 1)
    with capsys.disabled():
        _report(
            "2 (ordering)",
            f"robust col={[round(float(robust[k]), 4) for k in FiltrationKind]}, "
            f"gap/se={gaps}, {elapsed:.0f}s on {JOBS} jobs",
        )


# -- 3: solver equals the independent oracle ---------------------------------


def test_criterion_3_oracle_equivalence(capsys):
    rng = np.random.default_rng(2024)
    worst_mu = 0.0
    worst_val = 0.0
    for _ in range(50):
        L = 0.3 * rng.normal(size=(2, 2))
        Gamma = L @ L.T + 0.01 * np.eye(2)
        nu = rng.normal(0.05, 0.1, size=2)
        kappa = rng.uniform(0.01, 0.5)
        gamma = float(rng.choice([0.0, 0.5, -1.0]))
        h = float(rng.choice([0.5, 1.0]))
        market = make_market(gamma=gamma, h=h)
        geom = rd.constraint_geometry(market)
        K = rd.Ellipsoid.from_shape(nu, Gamma, kappa)
        sol = rd.worst_case_drift(K, geom, market)
        mu_o, val_o = rd.brute_force_oracle(K, geom, market, n_angle=3600)
        mu_err = np.linalg.norm(mu_o - sol.mu_star)
        val_err = abs(val_o - sol.value) / abs(sol.value)
        assert mu_err <= 1e-3
        assert val_err <= 1e-6
        worst_mu = max(worst_mu, mu_err)
        worst_val = max(worst_val, val_err)
    with capsys.disabled():
        _report("3 (oracle equivalence)", f"max mu err {worst_mu:.2e}, max value rel err {worst_val:.2e}")


# -- 4: saddle-point inequalities ---------------------------------------------


def test_criterion_4_saddle_suite(capsys):
    rng = np.random.default_rng(777)
    worst = 0.0
    for i in range(20):
        L = 0.3 * rng.normal(size=(2, 2))
        Gamma = L @ L.T + 0.01 * np.eye(2)
        nu = rng.normal(0.05, 0.1, size=2)
        kappa = rng.uniform(0.02, 0.4)
        gamma = float(rng.choice([0.0, 0.5, -1.0]))
        market = make_market(gamma=gamma, h=1.0)
        geom = rd.constraint_geometry(market)
        K = rd.Ellipsoid.from_shape(nu, Gamma, kappa)
        sol = rd.worst_case_drift(K, geom, market)
        report = rd.saddle_check(sol, K, geom, market, n_samples=1000, seed=1000 + i)
        worst = max(worst, report.max_violation)
    assert worst <= 1e-9
    with capsys.disabled():
        _report("4 (saddle suite)", f"max violation {worst:.2e} over 20x1000 pairs")


# -- 5: closed-form algebra -----------------------------------------------------


def test_criterion_5_algebraic_identities(capsys):
    rng = np.random.default_rng(555)
    tol = 1e-9
    for _ in range(1000):
        d = int(rng.integers(2, 4))
        sigma = rng.normal(size=(d, d)) + 2.5 * np.eye(d)
        gamma = float(rng.uniform(-1.5, 0.9))
        h = float(rng.uniform(0.2, 1.5))
        market = make_market(sigma=sigma, d=d, m=d, gamma=gamma, h=h)
        geom = rd.constraint_geometry(market)
        ones = np.ones(d)
        assert np.abs(geom.A @ ones).max() <= tol
        assert abs(ones @ geom.c - 1.0) <= tol
        assert np.abs(geom.D @ market.sigma_sigma_t @ geom.c).max() <= tol

        L = 0.3 * rng.normal(size=(d, d))
        K = rd.Ellipsoid.from_shape(
            rng.normal(0.0, 0.1, size=d), L @ L.T + 0.02 * np.eye(d),
            float(rng.uniform(0.02, 0.5)),
        )
        sol = rd.worst_case_drift(K, geom, market)
        assert abs(sol.pi_star.pi.sum() - h) <= tol
        assert sol.boundary_residual <= tol
        assert sol.dual_gap <= tol
        np.testing.assert_allclose(
            rd.merton_strategy(geom, sol.mu_star, gamma, h).pi,
            sol.pi_star.pi, atol=tol,
        )
        np.testing.assert_allclose(
            rd.linear_minimizer(sol.pi_star, K), sol.mu_star, atol=tol
        )
    with capsys.disabled():
        _report("5 (closed-form algebra)", "1000 instances, all identities <= 1e-9")


# -- 6: filter correctness -------------------------------------------------------


def test_criterion_6_filters(table1_config, capsys):
    scalar = rd.DriftModelParams(
        alpha=[[3.0]], beta=[[0.5]], delta=[0.02], m0=[0.02],
        sigma0=[[0.0]], sigma_r=[[0.1]], expert_cov=[[0.04]],
    )
    # stationary solve
    q_inf = rd.stationary_riccati(scalar)[0, 0]
    assert q_inf == pytest.approx(0.0283095, abs=1e-6)
    # time stepping to t = 5
    state = FilterState(t=0.0, m_hat=np.array([0.02]), q=np.array([[0.0]]))
    dt = 1.0 / 250.0
    for _ in range(5 * 250):
        state = rd.kalman_step(state, state.m_hat * dt, dt, scalar)
    assert state.q[0, 0] == pytest.approx(0.0283095, abs=1e-4)
    # Lyapunov closed form at dt = 1/1000
    state = FilterState(t=0.0, m_hat=np.array([0.02]), q=np.array([[0.0]]))
    for _ in range(1000):
        state = rd.propagate(state, 1e-3, scalar)
    lyapunov_exact = 0.25 / 6.0 * (1.0 - np.exp(-6.0))
    assert state.q[0, 0] == pytest.approx(lyapunov_exact, abs=1e-6)
    # expert update reproduces the scalar example exactly
    st = FilterState(t=0.0, m_hat=np.array([0.02]), q=np.array([[0.04]]))
    up = rd.expert_update(
        st, rd.ExpertOpinion(t_k=0.0, z=np.array([0.06]), cov=np.array([[0.04]]))
    )
    assert up.m_hat[0] == pytest.approx(0.04, abs=1e-12)
    assert up.q[0, 0] == pytest.approx(0.02, abs=1e-12)

    # Monte Carlo consistency: sample covariance of mu_T - m_T vs q_T per kind
    n_scen = 2000
    errors = {}
    for kind in FiltrationKind:
        devs = np.empty((n_scen, 2))
        q_T = None
        for i in range(n_scen):
            trace = rd.simulate_filter_trace(
                table1_config.drift, kind, n_experts=10, seed=(808, i),
                T=1.0, n_steps=250,
            )
            devs[i] = trace.mu_true[-1] - trace.filter.m_hat[-1]
            q_T = trace.filter.q[-1]
        sample_cov = np.cov(devs.T, ddof=1)
        rel = np.linalg.norm(sample_cov - q_T) / np.linalg.norm(q_T)
        assert rel <= 0.10, f"{kind}: {rel:.3f}"
        errors[kind.value] = round(float(rel), 3)
    with capsys.disabled():
        _report("6 (filters)", f"consistency rel Frobenius errors {errors}")


# -- 7: confidence coverage --------------------------------------------------------


def test_criterion_7_coverage(capsys):
    assert rd.chi2_quantile(2, 0.9) == pytest.approx(4.6051702, abs=1e-7)
    assert rd.chi2_quantile(1, 0.95) == pytest.approx(3.8414588, abs=1e-7)

    rng = substream(31415)
    n = 2000
    hits = 0
    for _ in range(n):
        L = 0.2 * rng.normal(size=(2, 2))
        q = L @ L.T + 0.005 * np.eye(2)
        m_hat = rng.normal(0.0, 0.1, size=2)
        mu = rng.multivariate_normal(m_hat, q)
        K = rd.confidence_ellipsoid(FilterState(t=0.0, m_hat=m_hat, q=q), eta=0.1)
        hits += rd.contains(K, mu)
    frequency = hits / n
    assert 0.88 <= frequency <= 0.92
    with capsys.disabled():
        _report("7 (coverage)", f"frequency {frequency:.4f} over {n} exact-Gaussian draws")


# -- 8: constant-set reduction -------------------------------------------------------


def test_criterion_8_constant_set_reduction(table1_config, capsys):
    market = table1_config.market
    geom = rd.constraint_geometry(market)
    path = rd.simulate_scenario(
        market, table1_config.drift, FiltrationKind.R, n_experts=10,
        seed=(99, 0), n_steps=100, freeze_uncertainty=True,
    )
    one_shot = rd.worst_case_drift(path.ellipsoid(0), geom, market)
    spread_mu = np.abs(path.mu_star_path - one_shot.mu_star).max()
    spread_pi = np.abs(path.pi_star_path - one_shot.pi_star.pi).max()
    assert spread_mu <= 1e-10
    assert spread_pi <= 1e-10
    with capsys.disabled():
        _report("8 (constant-set reduction)", f"max drift spread {spread_mu:.2e}")


# -- 9: determinism -----------------------------------------------------------------


def test_criterion_9_determinism(tmp_path, capsys):
    args = [
        "study", "--kinds", "N,R", "--paths", "4", "--steps", "50",
        "--out", str(tmp_path),
    ]
    assert main(args) == 0
    csv_first = (tmp_path / "study.csv").read_bytes()
    json_first = (tmp_path / "study.json").read_bytes()
    assert main(args) == 0
    assert (tmp_path / "study.csv").read_bytes() == csv_first
    assert (tmp_path / "study.json").read_bytes() == json_first

    fargs = ["filter", "--kind", "C", "--steps", "50", "--out", str(tmp_path)]
    assert main(fargs) == 0
    filter_first = (tmp_path / "filter_C.csv").read_bytes()
    assert main(fargs) == 0
    assert (tmp_path / "filter_C.csv").read_bytes() == filter_first

    # thread-count independence via worker processes
    market = make_market(
        sigma=np.array([[0.10, 0.05], [0.05, 0.10]]), gamma=0.5, h=1.0
    )
    model = rd.DriftModelParams(
        alpha=np.diag([3.0, 2.0]), beta=np.array([[0.5, 0.25], [0.25, 0.5]]),
        delta=np.array([0.02, 0.03]), m0=np.array([0.02, 0.03]),
        sigma0=0.01 * np.eye(2), sigma_r=np.array([[0.10, 0.05], [0.05, 0.10]]),
        expert_cov=np.array([[0.125, 0.10], [0.10, 0.125]]),
    )
    kinds = (FiltrationKind.R, FiltrationKind.C)
    serial = rd.run_study(market, model, kinds, 5, 6, seed=3, n_steps=40, n_jobs=1)
    threaded = rd.run_study(market, model, kinds, 5, 6, seed=3, n_steps=40, n_jobs=JOBS)
    for kind in kinds:
        np.testing.assert_array_equal(serial.means[kind], threaded.means[kind])
        np.testing.assert_array_equal(serial.stds[kind], threaded.stds[kind])
    with capsys.disabled():
        _report("9 (determinism)", "byte-identical reruns; job-count independent")
