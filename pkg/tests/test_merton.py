import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import robustdrift as rd
from robustdrift.errors import GridMismatch, NonPositiveWealth

from conftest import make_market

IDENTITY_TOL = 1e-12


# --- constraint geometry -----------------------------------------------


def test_geometry_identity_volatility(identity_market):
    geom = rd.constraint_geometry(identity_market)
    np.testing.assert_allclose(
        geom.A, [[0.5, -0.5], [-0.5, 0.5]], atol=IDENTITY_TOL
    )
    np.testing.assert_allclose(geom.c, [0.5, 0.5], atol=IDENTITY_TOL)


def test_geometry_diagonal_volatility():
    # sigma sigma^T = diag(1, 4): direct matrix arithmetic oracle
    market = make_market(sigma=np.diag([1.0, 2.0]))
    geom = rd.constraint_geometry(market)
    np.testing.assert_allclose(
        geom.A, np.array([[1.0, -1.0], [-1.0, 1.0]]) / 5.0, atol=IDENTITY_TOL
    )
    np.testing.assert_allclose(geom.c, [0.8, 0.2], atol=IDENTITY_TOL)
    assert geom.c.sum() == pytest.approx(1.0, abs=IDENTITY_TOL)


@given(seed=st.integers(0, 10_000), d=st.integers(2, 5))
@settings(max_examples=40, deadline=None)
def test_geometry_kernel_and_affine_identities(seed, d):
    rng = np.random.default_rng(seed)
    sigma = rng.normal(size=(d, d)) + 2.0 * np.eye(d)
    market = make_market(sigma=sigma, d=d, m=d)
    geom = rd.constraint_geometry(market)
    ones = np.ones(d)
    scale = max(1.0, np.abs(geom.A).max())
    assert np.abs(geom.A @ ones).max() <= IDENTITY_TOL * scale
    assert abs(ones @ geom.c - 1.0) <= IDENTITY_TOL * scale
    assert np.abs(geom.D @ market.sigma_sigma_t @ geom.c).max() <= IDENTITY_TOL * scale
    # A symmetric PSD of rank d-1
    np.testing.assert_allclose(geom.A, geom.A.T, atol=IDENTITY_TOL * scale)
    eigs = np.linalg.eigvalsh(geom.A)
    assert abs(eigs[0]) <= 1e-10 * eigs[-1]
    assert eigs[1] > 1e-10 * eigs[-1]


# --- optimal strategy ---------------------------------------------------


def test_merton_strategy_examples(identity_geometry):
    pi = rd.merton_strategy(identity_geometry, [0.1, 0.1], gamma=0.0, h=1.0)
    np.testing.assert_allclose(pi.pi, [0.5, 0.5], atol=IDENTITY_TOL)
    pi = rd.merton_strategy(identity_geometry, [0.2, 0.0], gamma=0.0, h=1.0)
    np.testing.assert_allclose(pi.pi, [0.6, 0.4], atol=IDENTITY_TOL)
    pi = rd.merton_strategy(identity_geometry, [0.2, 0.0], gamma=0.5, h=1.0)
    np.testing.assert_allclose(pi.pi, [0.7, 0.3], atol=IDENTITY_TOL)


@given(
    mu1=st.floats(-0.5, 0.5),
    mu2=st.floats(-0.5, 0.5),
    shift=st.floats(-10.0, 10.0),
    gamma=st.floats(-2.0, 0.9),
    h=st.floats(0.1, 2.0),
)
@settings(max_examples=50, deadline=None)
def test_merton_budget_and_shift_invariance(identity_geometry, mu1, mu2, shift, gamma, h):
    mu = np.array([mu1, mu2])
    pi = rd.merton_strategy(identity_geometry, mu, gamma, h)
    assert pi.budget == pytest.approx(h, abs=1e-12)
    shifted = rd.merton_strategy(identity_geometry, mu + shift, gamma, h)
    np.testing.assert_allclose(pi.pi, shifted.pi, atol=1e-10)


# --- transformed market -------------------------------------------------


def test_transform_h_zero_is_pure_reduction(identity_market):
    mu = np.array([0.07, -0.02])
    tm = rd.transform_market(identity_market, mu, h=0.0, gamma=0.3)
    assert tm.r_tilde[0] == pytest.approx(identity_market.r, abs=IDENTITY_TOL)
    np.testing.assert_allclose(
        tm.mu_tilde[0], [mu[0] - mu[1] + tm.r_tilde[0]], atol=IDENTITY_TOL
    )


def test_transform_hand_example(identity_market):
    # sigma=I2, h=1, gamma=0, r=0, mu=(0.1, 0.1): r~ = 0.1 - 0.5 = -0.4,
    # mu~ = (0.1-0.1) - D sigma sigma^T e_2 + r~ = 1 - 0.4 = 0.6
    tm = rd.transform_market(identity_market, [0.1, 0.1], h=1.0, gamma=0.0)
    assert tm.r_tilde[0] == pytest.approx(-0.4, abs=IDENTITY_TOL)
    assert tm.mu_tilde[0, 0] == pytest.approx(0.6, abs=IDENTITY_TOL)
    np.testing.assert_allclose(tm.sigma_tilde, [[1.0, -1.0]], atol=IDENTITY_TOL)


@given(
    mu1=st.floats(-0.3, 0.3), mu2=st.floats(-0.3, 0.3),
    gamma=st.floats(-1.0, 0.9), h=st.floats(0.2, 1.5),
)
@settings(max_examples=40, deadline=None)
def test_recomposition_identity(mu1, mu2, gamma, h):
    market = make_market(sigma=np.array([[1.0, 0.3], [0.1, 0.8]]), gamma=gamma, h=h)
    geom = rd.constraint_geometry(market)
    mu = np.array([mu1, mu2])
    tm = rd.transform_market(market, mu, h=h, gamma=gamma)
    sst_tilde = tm.sigma_tilde @ tm.sigma_tilde.T
    pi_tilde = np.linalg.solve(sst_tilde, tm.mu_tilde[0] - tm.r_tilde[0]) / (1.0 - gamma)
    lifted = rd.recompose_strategy(geom, pi_tilde, h)
    direct = rd.merton_strategy(geom, mu, gamma, h)
    np.testing.assert_allclose(lifted.pi, direct.pi, atol=1e-10)


# --- expected utility ----------------------------------------------------


def test_expected_utility_log_single_segment(identity_market):
    value = rd.expected_utility(identity_market, [0.5, 0.5], [0.1, 0.1])
    assert value == pytest.approx(-0.15, abs=IDENTITY_TOL)


def test_expected_utility_zero_horizon(identity_market):
    value = rd.expected_utility(
        identity_market, np.empty((0, 2)), np.empty((0, 2)), t=identity_market.T, x=2.0
    )
    assert value == pytest.approx(np.log(2.0), abs=IDENTITY_TOL)


def test_expected_utility_power_single_segment():
    market = make_market(gamma=0.5)
    value = rd.expected_utility(market, [0.5, 0.5], [0.1, 0.1])
    assert value == pytest.approx(2.0 * np.exp(-0.0125), abs=1e-9)
    assert value == pytest.approx(1.975156, abs=1e-6)


def test_expected_utility_errors(identity_market):
    with pytest.raises(NonPositiveWealth):
        rd.expected_utility(identity_market, [0.5, 0.5], [0.1, 0.1], x=0.0)
    with pytest.raises(GridMismatch):
        rd.expected_utility(
            identity_market, np.zeros((3, 2)), np.zeros((2, 2))
        )
    with pytest.raises(GridMismatch):
        rd.expected_utility(identity_market, [0.5, 0.5, 0.0], [0.1, 0.1])


def test_expected_utility_piecewise_matches_segment_sum(identity_market):
    pi = np.array([[0.5, 0.5], [0.7, 0.3], [0.2, 0.8]])
    mu = np.array([[0.1, 0.1], [0.0, 0.2], [-0.1, 0.1]])
    total = rd.expected_utility(identity_market, pi, mu)
    manual = 0.0
    for k in range(3):
        manual += (pi[k] @ mu[k] - 0.5 * pi[k] @ pi[k]) / 3.0
    assert total == pytest.approx(manual, abs=1e-12)


def test_merton_is_grid_optimal():
    # 2001-strategy grid oracle: the closed form beats every (p, h-p)
    market = make_market(sigma=np.array([[1.2, 0.0], [0.4, 0.9]]), gamma=0.5, h=1.0)
    geom = rd.constraint_geometry(market)
    mu = np.array([0.12, -0.04])
    best = rd.merton_strategy(geom, mu, market.gamma, market.h)
    value_best = rd.expected_utility(market, best.pi, mu)

    p_grid = np.linspace(-5.0, 5.0 + market.h, 2001)
    values = np.array(
        [
            rd.expected_utility(market, np.array([p, market.h - p]), mu)
            for p in p_grid
        ]
    )
    assert values.max() <= value_best + 1e-12
    assert abs(p_grid[values.argmax()] - best.pi[0]) <= p_grid[1] - p_grid[0]


def test_expected_utility_matches_monte_carlo():
    # exact lognormal-sampling oracle for constant paths
    market = make_market(
        sigma=np.array([[1.0, 0.2], [0.0, 0.7]]), gamma=0.5, h=1.0, r=0.01
    )
    pi = np.array([0.6, 0.4])
    mu = np.array([0.15, 0.05])
    analytic = rd.expected_utility(market, pi, mu)

    rng = np.random.default_rng(7)
    n = 400_000
    spi = market.sigma.T @ pi
    loc = market.r + pi @ (mu - market.r) - 0.5 * spi @ spi
    draws = np.exp(loc * market.T + np.sqrt(market.T) * np.linalg.norm(spi) * rng.standard_normal(n))
    samples = market.utility(market.x0 * draws)
    se = samples.std(ddof=1) / np.sqrt(n)
    assert abs(samples.mean() - analytic) <= 3.0 * se
