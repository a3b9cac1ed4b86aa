"""Closed-form worst-case drift over an ellipsoidal uncertainty set.

For an ellipsoid K with center nu, factor tau (Gamma = tau tau^T) and
radius kappa, the worst-case drift is

    mu* = nu - tau * sum_i  b_i / (lam_i/(1-gamma) + h/(psi ||tau^{-1} 1||)) v_i,
    b_i = < h tau^T c + lam_i/(1-gamma) tau^{-1} nu , v_i >,

where (lam_i, v_i) is the eigensystem of tau^T A tau (lam_1 = 0 with
eigenvector proportional to tau^{-1} 1) and psi in (0, kappa] is pinned by
the boundary condition ||tau^{-1}(mu* - nu)|| = kappa.  The corresponding
robust strategy is pi* = A mu*/(1-gamma) + h c, which equals
-(h / (psi ||tau^{-1} 1||)) Gamma^{-1} (mu* - nu).

All solver routines are pure; the batched entry point `solve_batch` runs
the same arithmetic over many ellipsoids at once for the simulation
pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EigenFailure,
    NoBracket,
    SaddleViolation,
    UnsupportedDimension,
    ZeroStrategy,
)
from .market import ValidatedMarket
from .merton import Allocation, ConstraintGeometry, expected_utility, merton_strategy, utility_integrand
from .uncertainty import Ellipsoid

# Relative threshold below which the kernel eigenvalue is clamped to zero.
KERNEL_TOL = 1e-10
# Bisection: iteration cap and relative interval tolerance.
PSI_MAX_ITER = 200
PSI_REL_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Sorted eigensystem of tau^T A tau with the kernel vector first."""

    lambdas: np.ndarray  # ascending, lambdas[0] == 0
    vectors: np.ndarray  # orthonormal columns, vectors[:, i] for lambdas[i]
    norm1: float  # ||tau^{-1} 1||


@dataclass(frozen=True, eq=False)
class RobustSolution:
    """Worst-case drift, robust strategy and diagnostics for one ellipsoid."""

    mu_star: np.ndarray
    pi_star: Allocation
    psi: float
    value: float
    spectral: SpectralData
    boundary_residual: float  # | ||tau^{-1}(mu*-nu)|| - kappa | / kappa
    dual_gap: float  # max abs difference of the two pi* representations


@dataclass(frozen=True, eq=False)
class SaddleReport:
    """Outcome of randomized saddle-point verification."""

    n_samples: int
    max_violation: float
    center_value: float


def _solve_vec(mats, vecs):
    """Batched linear solve with vector right-hand sides."""
    return np.linalg.solve(mats, vecs[..., None])[..., 0]


def _spectral_core(taus, A):
    """Batched eigensystem of tau^T A tau; kernel eigenvalue clamped to 0."""
    mats = np.matmul(np.matmul(np.transpose(taus, (0, 2, 1)), A), taus)
    mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
    try:
        lam, vec = np.linalg.eigh(mats)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"symmetric eigensolver did not converge: {exc}") from exc
    top = lam[:, -1]
    if np.any(top <= 0.0):
        raise EigenFailure("tau^T A tau has no positive eigenvalue")
    if np.any(np.abs(lam[:, 0]) > KERNEL_TOL * top):
        raise EigenFailure("kernel eigenvalue of tau^T A tau is not numerically zero")
    if lam.shape[1] > 1 and np.any(lam[:, 1] <= KERNEL_TOL * top):
        raise EigenFailure("tau^T A tau is rank deficient beyond the kernel")
    lam = lam.copy()
    lam[:, 0] = 0.0

    ones = np.broadcast_to(np.ones(taus.shape[1]), taus.shape[:2])
    tinv_one = _solve_vec(taus, ones)
    norm1 = np.linalg.norm(tinv_one, axis=1)
    # orient the kernel eigenvector along tau^{-1} 1
    sign = np.sign(np.einsum("ni,ni->n", vec[:, :, 0], tinv_one))
    sign[sign == 0.0] = 1.0
    vec = vec.copy()
    vec[:, :, 0] *= sign[:, None]
    return lam, vec, norm1


def _projected_loads(lam, vec, taus, nus, c, gamma, h):
    """Coefficients b_i = <h tau^T c + lam_i/(1-gamma) tau^{-1} nu, v_i>."""
    tc = np.einsum("nji,j->ni", taus, c)
    tinv_nu = _solve_vec(taus, nus)
    return h * np.einsum("nij,ni->nj", vec, tc) + (lam / (1.0 - gamma)) * np.einsum(
        "nij,ni->nj", vec, tinv_nu
    )


def _coef(b, lam, norm1, gamma, h, psi):
    return b / (lam / (1.0 - gamma) + (h / (psi * norm1))[:, None])


def _psi_core(b, lam, norm1, gamma, h, kappas):
    """Vectorized bisection for the boundary condition, psi in (0, kappa]."""
    lo = kappas * 1e-12
    hi = kappas.astype(float).copy()

    def radius(psi):
        return np.linalg.norm(_coef(b, lam, norm1, gamma, h, psi), axis=1)

    g_lo = radius(lo) - kappas
    g_hi = radius(hi) - kappas
    if np.any(g_lo > 0.0) or np.any(g_hi < -1e-9 * kappas):
        raise NoBracket(
            "no sign change for the boundary equation; inputs violate the "
            "standing assumptions (g(lo)={}, g(hi)={})".format(g_lo.max(), g_hi.min())
        )
    for _ in range(PSI_MAX_ITER):
        active = (hi - lo) > PSI_REL_TOL * lo
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        g_mid = radius(mid) - kappas
        go_up = active & (g_mid <= 0.0)
        go_dn = active & (g_mid > 0.0)
        lo[go_up] = mid[go_up]
        hi[go_dn] = mid[go_dn]
    return 0.5 * (lo + hi)


def _mu_core(b, lam, vec, norm1, taus, nus, gamma, h, psi):
    coef = _coef(b, lam, norm1, gamma, h, psi)
    return nus - np.einsum("nij,nj->ni", taus, np.einsum("nij,nj->ni", vec, coef))


def eigensystem(tau, A) -> SpectralData:
    """Eigensystem of tau^T A tau, sorted ascending, kernel vector aligned
    with tau^{-1} 1."""
    tau = np.asarray(tau, dtype=float)
    lam, vec, norm1 = _spectral_core(tau[None], np.asarray(A, dtype=float))
    return SpectralData(lambdas=lam[0], vectors=vec[0], norm1=float(norm1[0]))


def solve_psi(spectral: SpectralData, nu, tau, c, gamma: float, h: float, kappa: float) -> float:
    """Root of ||tau^{-1}(mu*(psi) - nu)|| = kappa by bisection on (0, kappa]."""
    tau = np.asarray(tau, dtype=float)
    nu = np.asarray(nu, dtype=float)
    b = _projected_loads(
        spectral.lambdas[None], spectral.vectors[None], tau[None], nu[None],
        np.asarray(c, dtype=float), gamma, h,
    )
    psi = _psi_core(b, spectral.lambdas[None], np.array([spectral.norm1]), gamma, h, np.array([float(kappa)]))
    return float(psi[0])


def worst_case_drift(
    K: Ellipsoid, geom: ConstraintGeometry, market: ValidatedMarket, t: float = 0.0
) -> RobustSolution:
    """Solve the local worst-case problem for one ellipsoid in closed form."""
    gamma, h = market.gamma, market.h
    spectral = eigensystem(K.tau, geom.A)
    b = _projected_loads(
        spectral.lambdas[None], spectral.vectors[None], K.tau[None], K.nu[None],
        geom.c, gamma, h,
    )
    norm1 = np.array([spectral.norm1])
    psi = _psi_core(b, spectral.lambdas[None], norm1, gamma, h, np.array([float(K.kappa)]))
    mu_star = _mu_core(
        b, spectral.lambdas[None], spectral.vectors[None], norm1,
        K.tau[None], K.nu[None], gamma, h, psi,
    )[0]
    pi_star = merton_strategy(geom, mu_star, gamma, h)

    dev = np.linalg.solve(K.tau, mu_star - K.nu)
    residual = abs(np.linalg.norm(dev) - K.kappa) / K.kappa
    pi_dual = -(h / (float(psi[0]) * spectral.norm1)) * np.linalg.solve(
        K.Gamma, mu_star - K.nu
    )
    dual_gap = float(np.max(np.abs(pi_star.pi - pi_dual)))
    value = expected_utility(market, pi_star.pi, mu_star, t=t)
    return RobustSolution(
        mu_star=mu_star,
        pi_star=pi_star,
        psi=float(psi[0]),
        value=value,
        spectral=spectral,
        boundary_residual=float(residual),
        dual_gap=dual_gap,
    )


def solve_batch(nus, taus, kappas, geom: ConstraintGeometry, gamma: float, h: float):
    """Worst-case drift and robust strategy for a batch of ellipsoids.

    nus: (n, d) centers; taus: (n, d, d) factors; kappas: scalar or (n,).
    Returns (mu_star (n, d), pi_star (n, d), psi (n,)).
    """
    nus = np.asarray(nus, dtype=float)
    taus = np.asarray(taus, dtype=float)
    kappas = np.broadcast_to(np.asarray(kappas, dtype=float), nus.shape[:1]).copy()
    lam, vec, norm1 = _spectral_core(taus, geom.A)
    b = _projected_loads(lam, vec, taus, nus, geom.c, gamma, h)
    psi = _psi_core(b, lam, norm1, gamma, h, kappas)
    mu_star = _mu_core(b, lam, vec, norm1, taus, nus, gamma, h, psi)
    pi_star = mu_star @ geom.A.T / (1.0 - gamma) + h * geom.c
    return mu_star, pi_star, psi


def linear_minimizer(pi, K: Ellipsoid) -> np.ndarray:
    """Minimizer of mu -> pi^T mu over the ellipsoid: nu - kappa Gamma pi / sqrt(pi^T Gamma pi)."""
    pi = pi.pi if isinstance(pi, Allocation) else np.asarray(pi, dtype=float)
    gp = K.Gamma @ pi
    quad = float(pi @ gp)
    if quad <= 0.0:
        raise ZeroStrategy("pi^T Gamma pi = 0; direction undefined")
    return K.nu - K.kappa * gp / np.sqrt(quad)


def _values_from_integrand(market, integrand, horizon, x):
    gamma = market.gamma
    if gamma == 0.0:
        return np.log(x) + market.r * horizon + integrand * horizon
    return x**gamma / gamma * np.exp(gamma * (market.r * horizon + integrand * horizon))


def saddle_check(
    solution: RobustSolution,
    K: Ellipsoid,
    geom: ConstraintGeometry,
    market: ValidatedMarket,
    n_samples: int,
    seed: int,
    tol: float = 1e-9,
    t: float = 0.0,
) -> SaddleReport:
    """Randomized check of E_mu*[U(X^pi)] <= E_mu*[U(X^pi*)] <= E_mu[U(X^pi*)].

    Strategies are sampled with d-1 free coordinates uniform on [-2h, 2h]
    (budget enforced through the last coordinate), drifts uniformly inside
    the ellipsoid.  Each sample index gets its own substream so the result
    does not depend on execution order.  Raises SaddleViolation when the
    worst violation exceeds `tol`.
    """
    d, h = market.d, market.h
    center = expected_utility(market, solution.pi_star.pi, solution.mu_star, t=t)
    worst = 0.0
    worst_pair = (None, None)
    for i in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        free = rng.uniform(-2.0 * h, 2.0 * h, size=d - 1)
        pi = np.append(free, h - free.sum())
        z = rng.standard_normal(d)
        radius = rng.uniform() ** (1.0 / d)
        mu = K.nu + K.kappa * radius * (K.tau @ (z / np.linalg.norm(z)))

        left = expected_utility(market, pi, solution.mu_star, t=t) - center
        right = center - expected_utility(market, solution.pi_star.pi, mu, t=t)
        violation = max(left, right)
        if violation > worst:
            worst = violation
            worst_pair = (pi, mu)
    if worst > tol:
        raise SaddleViolation(
            f"saddle inequalities violated by {worst:.3e}",
            pi=worst_pair[0],
            mu=worst_pair[1],
            violation=worst,
        )
    return SaddleReport(n_samples=n_samples, max_violation=worst, center_value=center)


def _boundary_grid(K: Ellipsoid, n_angle: int):
    theta = np.linspace(0.0, 2.0 * np.pi, n_angle, endpoint=False)
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return K.nu[None, :] + K.kappa * circle @ K.tau.T


def brute_force_oracle(
    K: Ellipsoid,
    geom: ConstraintGeometry,
    market: ValidatedMarket,
    n_angle: int = 3600,
    t: float = 0.0,
):
    """Independent d=2 oracle: grid the ellipse boundary, take the closed-form
    best response per drift, and return the minimizing (mu, value).

    The minimum over the ellipsoid is attained on the boundary because the
    optimal value decreases without bound along -1 direction, so an angular
    grid suffices.
    """
    if market.d != 2:
        raise UnsupportedDimension("oracle implemented for d = 2 only")
    mus = _boundary_grid(K, n_angle)
    pis = mus @ geom.A.T / (1.0 - market.gamma) + market.h * geom.c
    integrand = utility_integrand(market, pis, mus)
    values = _values_from_integrand(market, integrand, market.T - t, market.x0)
    j = int(np.argmin(values))
    return mus[j], float(values[j])


def sup_inf_grid_value(
    K: Ellipsoid,
    geom: ConstraintGeometry,
    market: ValidatedMarket,
    n_angle: int,
    n_strategy: int,
    p_range=(-5.0, None),
    t: float = 0.0,
) -> float:
    """Grid estimate of sup_pi inf_mu E_mu[U(X^pi)] for d = 2.

    Strategies are pi = (p, h - p) on an n_strategy grid, drifts on the
    boundary angular grid; used to verify the minimax equality against
    `brute_force_oracle` within combined grid resolution.
    """
    if market.d != 2:
        raise UnsupportedDimension("grid search implemented for d = 2 only")
    lo, hi = p_range
    if hi is None:
        hi = 5.0 + market.h
    p = np.linspace(lo, hi, n_strategy)
    pis = np.stack([p, market.h - p], axis=1)
    mus = _boundary_grid(K, n_angle)
    excess = pis @ (mus - market.r).T  # (n_strategy, n_angle)
    spi = pis @ market.sigma
    quad = np.einsum("ij,ij->i", spi, spi)
    integrand = excess - 0.5 * (1.0 - market.gamma) * quad[:, None]
    inner = integrand.min(axis=1)  # worst boundary drift per strategy
    values = _values_from_integrand(market, inner, market.T - t, market.x0)
    return float(values.max())
