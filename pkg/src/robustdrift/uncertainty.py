"""Ellipsoidal uncertainty sets and their construction from filter output.

K = { mu : (mu - nu)^T Gamma^{-1} (mu - nu) <= kappa^2 } with Gamma = tau tau^T.
Confidence-region construction takes nu from the conditional mean, Gamma from
the conditional covariance and kappa as the square root of a chi-square
quantile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv

from .errors import DegenerateCovariance, FactorizationFailed, OutOfDomain
from .filters import FilterState

# Relative eigenvalue floor below which a covariance is considered flat.
DEGENERACY_TOL = 1e-12
# Jitter applied in pipeline mode when regularizing a degenerate covariance;
# absolute fallback covers the exactly-zero case.
REG_JITTER = 1e-10
REG_ABS_FLOOR = 1e-12
# Membership slack for boundary points.
MEMBERSHIP_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Uncertainty set with center nu, shape Gamma = tau tau^T and radius kappa."""

    nu: np.ndarray
    Gamma: np.ndarray
    kappa: float
    tau: np.ndarray

    @classmethod
    def from_shape(cls, nu, Gamma, kappa: float) -> "Ellipsoid":
        """Build an ellipsoid, factorizing Gamma = tau tau^T (lower triangular)."""
        nu = np.asarray(nu, dtype=float)
        Gamma = np.asarray(Gamma, dtype=float)
        if not kappa > 0.0:
            raise OutOfDomain(f"kappa={kappa} must be > 0")
        try:
            tau = np.linalg.cholesky(0.5 * (Gamma + Gamma.T))
        except np.linalg.LinAlgError as exc:
            raise FactorizationFailed(f"Gamma is not positive definite: {exc}") from exc
        return cls(nu=nu, Gamma=Gamma, kappa=float(kappa), tau=tau)

    @property
    def d(self) -> int:
        return self.nu.shape[0]


def chi2_quantile(d: int, p: float) -> float:
    """p-quantile of the chi-square distribution with d degrees of freedom.

    Computed through the inverse regularized lower incomplete gamma function.
    """
    if d < 1 or int(d) != d:
        raise OutOfDomain(f"degrees of freedom d={d} must be a positive integer")
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"probability p={p} must lie in (0, 1)")
    return float(2.0 * gammaincinv(d / 2.0, p))


def regularize_covariance(q: np.ndarray) -> np.ndarray:
    """Jitter a flat covariance just enough to make factorization possible."""
    d = q.shape[0]
    jitter = max(REG_JITTER * float(np.trace(q)) / d, REG_ABS_FLOOR)
    return q + jitter * np.eye(d)


def confidence_ellipsoid(state: FilterState, eta: float, regularize: bool = False) -> Ellipsoid:
    """Confidence-region ellipsoid for the hidden drift at the state's time.

    Center is the conditional mean, shape the conditional covariance, radius
    sqrt of the (1 - eta) chi-square quantile with d degrees of freedom.
    A covariance whose smallest eigenvalue falls below
    DEGENERACY_TOL * trace/d raises DegenerateCovariance unless
    `regularize` is set (pipeline mode), in which case a scaled identity
    jitter is added before factorization.
    """
    if not 0.0 < eta < 1.0:
        raise OutOfDomain(f"eta={eta} must lie in (0, 1)")
    d = state.m_hat.shape[0]
    q = 0.5 * (state.q + state.q.T)
    floor = DEGENERACY_TOL * float(np.trace(q)) / d
    if np.linalg.eigvalsh(q)[0] < floor or floor <= 0.0:
        if not regularize:
            raise DegenerateCovariance(
                f"conditional covariance at t={state.t} is numerically flat"
            )
        q = regularize_covariance(q)
    kappa = np.sqrt(chi2_quantile(d, 1.0 - eta))
    return Ellipsoid.from_shape(state.m_hat, q, kappa)


def contains(K: Ellipsoid, mu) -> bool:
    """Membership test ||tau^{-1}(mu - nu)|| <= kappa, with boundary slack."""
    dev = np.linalg.solve(K.tau, np.asarray(mu, dtype=float) - K.nu)
    return bool(np.linalg.norm(dev) <= K.kappa * (1.0 + MEMBERSHIP_SLACK))
