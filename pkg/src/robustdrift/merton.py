"""Closed-form constrained Merton machinery.

The budget constraint <pi, 1> = h is eliminated with the reduction matrix

    D = [ I_{d-1} | -1 ]  in R^{(d-1) x d},

giving

    A = D^T (D sigma sigma^T D^T)^{-1} D,
    c = (I_d - A sigma sigma^T) e_d,

so that the optimal constrained strategy for drift mu is

    pi = A mu / (1 - gamma) + h c

and expected utility of a piecewise-constant (strategy, drift) pair has an
exact integral representation (no quadrature error on the grid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import FactorizationFailed, GridMismatch, NonPositiveWealth
from .market import ValidatedMarket

#: absolute tolerance for the algebraic identities of the geometry
IDENTITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConstraintGeometry:
    """Reduction matrices for the budget-constrained problem."""

    D: np.ndarray
    A: np.ndarray
    c: np.ndarray
    chol: tuple  # cho_factor of D sigma sigma^T D^T

    @property
    def d(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class Allocation:
    """Vector of wealth fractions with <pi, 1> = h."""

    pi: np.ndarray

    @property
    def budget(self) -> float:
        return float(np.sum(self.pi))


@dataclass(frozen=True, eq=False)
class TransformedMarket:
    """Unconstrained (d-1)-asset market equivalent to the constrained one.

    r_tilde and mu_tilde are paths (one row per evaluation segment).
    """

    sigma_tilde: np.ndarray
    r_tilde: np.ndarray
    mu_tilde: np.ndarray


def reduction_matrix(d: int) -> np.ndarray:
    D = np.zeros((d - 1, d))
    D[:, :-1] = np.eye(d - 1)
    D[:, -1] = -1.0
    return D


def constraint_geometry(market: ValidatedMarket) -> ConstraintGeometry:
    """Build D, A and c for the market's volatility matrix."""
    d = market.d
    D = reduction_matrix(d)
    sst = market.sigma_sigma_t
    try:
        chol = cho_factor(D @ sst @ D.T, lower=True)
    except np.linalg.LinAlgError as exc:  # unreachable for full-rank sigma
        raise FactorizationFailed(f"D sigma sigma^T D^T is singular: {exc}") from exc
    A = D.T @ cho_solve(chol, D)
    A = 0.5 * (A + A.T)
    e_d = np.zeros(d)
    e_d[-1] = 1.0
    c = e_d - A @ (sst @ e_d)
    A.setflags(write=False)
    c.setflags(write=False)
    D.setflags(write=False)
    return ConstraintGeometry(D=D, A=A, c=c, chol=chol)


def merton_strategy(geom: ConstraintGeometry, mu, gamma: float, h: float) -> Allocation:
    """Optimal constrained strategy pi = A mu / (1 - gamma) + h c."""
    mu = np.asarray(mu, dtype=float)
    return Allocation(pi=geom.A @ mu / (1.0 - gamma) + h * geom.c)


def transform_market(market: ValidatedMarket, mu_path, h: float, gamma: float) -> TransformedMarket:
    """Map a drift path to the equivalent unconstrained market parameters.

    For each segment value mu_s:

        r_tilde_s  = (1-h) r + h e_d^T mu_s - (1-gamma)/2 * ||h sigma^T e_d||^2
        mu_tilde_s = D mu_s - h (1-gamma) D sigma sigma^T e_d + r_tilde_s 1
    """
    mu_path = np.atleast_2d(np.asarray(mu_path, dtype=float))
    D = reduction_matrix(market.d)
    sst = market.sigma_sigma_t
    e_d = np.zeros(market.d)
    e_d[-1] = 1.0
    sig_e = market.sigma.T @ e_d
    r_tilde = (
        (1.0 - h) * market.r
        + h * mu_path[:, -1]
        - 0.5 * (1.0 - gamma) * h * h * float(sig_e @ sig_e)
    )
    mu_tilde = (
        mu_path @ D.T
        - h * (1.0 - gamma) * (D @ (sst @ e_d))[None, :]
        + r_tilde[:, None]
    )
    return TransformedMarket(sigma_tilde=D @ market.sigma, r_tilde=r_tilde, mu_tilde=mu_tilde)


def recompose_strategy(geom: ConstraintGeometry, pi_tilde, h: float) -> Allocation:
    """Lift a (d-1)-dimensional strategy back to the constrained market."""
    pi_tilde = np.asarray(pi_tilde, dtype=float)
    e_d = np.zeros(geom.d)
    e_d[-1] = 1.0
    return Allocation(pi=geom.D.T @ pi_tilde + h * e_d)


def _paths_to_segments(pi_path, mu_path, d):
    pi = np.asarray(pi_path, dtype=float)
    mu = np.asarray(mu_path, dtype=float)
    if pi.ndim == 1:
        pi = pi[None, :]
    if mu.ndim == 1:
        mu = mu[None, :]
    if pi.shape[-1] != d or mu.shape[-1] != d:
        raise GridMismatch(f"paths must have {d} columns, got {pi.shape} and {mu.shape}")
    n = max(pi.shape[0], mu.shape[0])
    if pi.shape[0] not in (1, n) or mu.shape[0] not in (1, n):
        raise GridMismatch(
            f"strategy path ({pi.shape[0]} segments) and drift path "
            f"({mu.shape[0]} segments) are on incompatible grids"
        )
    if pi.shape[0] == 1:
        pi = np.broadcast_to(pi, (n, d))
    if mu.shape[0] == 1:
        mu = np.broadcast_to(mu, (n, d))
    return pi, mu, n


def utility_integrand(market: ValidatedMarket, pi_path, mu_path) -> np.ndarray:
    """Per-segment value of pi^T (mu - r 1) - (1-gamma)/2 ||sigma^T pi||^2.

    The (1-gamma)/2 coefficient absorbs both the Ito correction and the
    Gaussian moment term, so summing this integrand gives the exact
    expectation for deterministic segment values (any gamma < 1).
    """
    pi, mu, _ = _paths_to_segments(pi_path, mu_path, market.d)
    excess = np.einsum("ij,ij->i", pi, mu - market.r)
    spi = pi @ market.sigma
    quad = np.einsum("ij,ij->i", spi, spi)
    return excess - 0.5 * (1.0 - market.gamma) * quad


def expected_utility(market: ValidatedMarket, pi_path, mu_path, t: float = 0.0, x=None) -> float:
    """Expected terminal utility for piecewise-constant paths on [t, T].

    Both paths live on the same uniform grid of segments covering [t, T];
    a single row (or 1-D vector) is treated as constant in time.  With
    t = T and empty paths the utility of current wealth is returned.
    """
    if x is None:
        x = market.x0
    if not x > 0.0:
        raise NonPositiveWealth(f"wealth x={x} must be > 0")
    horizon = market.T - t
    if horizon < 0.0:
        raise GridMismatch(f"evaluation time t={t} is beyond the horizon T={market.T}")

    pi = np.asarray(pi_path, dtype=float)
    mu = np.asarray(mu_path, dtype=float)
    if horizon == 0.0 and pi.size == 0 and mu.size == 0:
        integral = 0.0
    else:
        values = utility_integrand(market, pi, mu)
        if horizon == 0.0:
            integral = 0.0
        elif len(values) == 0:
            raise GridMismatch(f"empty paths but a positive horizon T - t = {horizon}")
        else:
            integral = float(np.sum(values)) * (horizon / len(values))

    gamma = market.gamma
    if gamma == 0.0:
        return float(np.log(x) + market.r * horizon + integral)
    return float(x**gamma / gamma * np.exp(gamma * (market.r * horizon + integral)))
