"""Static model parameters and their validation.

Everything downstream (geometry, solver, filters, simulation) consumes a
``ValidatedMarket``; invalid parameter sets cannot reach numerical code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadDimension,
    BadRiskAversion,
    NonPositive,
    NonPositiveWealth,
    RankDeficient,
    ValidationError,
)

# Smallest singular value of sigma must exceed this fraction of the largest.
RANK_TOL = 1e-10

# Symmetry / PSD slack used in parameter checks, relative to matrix scale.
_SYM_TOL = 1e-10


def _readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MarketParams:
    """Market description: d risky assets driven by m Brownian motions.

    sigma is the d x m return volatility matrix, gamma the risk aversion
    (gamma = 0 selects log utility), h the budget level of the constraint
    <pi, 1> = h, T the horizon and x0 the initial wealth.
    """

    d: int
    m: int
    r: float
    sigma: np.ndarray
    gamma: float
    h: float
    T: float
    x0: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", _readonly(self.sigma))

    @property
    def sigma_sigma_t(self) -> np.ndarray:
        return self.sigma @ self.sigma.T

    @property
    def utility(self) -> "UtilityKind":
        return UtilityKind(self.gamma)


@dataclass(frozen=True, eq=False)
class ValidatedMarket(MarketParams):
    """Marker type: a MarketParams that passed validate_market."""


@dataclass(frozen=True, eq=False)
class DriftModelParams:
    """Mean-reverting hidden drift plus observation channels.

    The drift follows d mu = alpha (delta - mu) dt + beta dB with
    mu_0 ~ N(m0, sigma0).  Returns observe the drift through volatility
    sigma_r; discrete expert views share the covariance expert_cov.
    """

    alpha: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    m0: np.ndarray
    sigma0: np.ndarray
    sigma_r: np.ndarray
    expert_cov: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "delta", "m0", "sigma0", "sigma_r", "expert_cov"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def d(self) -> int:
        return self.delta.shape[0]


@dataclass(frozen=True)
class UtilityKind:
    """Power utility x^gamma / gamma, or log x when gamma = 0."""

    gamma: float

    @property
    def log_case(self) -> bool:
        return self.gamma == 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise NonPositiveWealth("utility defined for wealth > 0 only")
        if self.log_case:
            return np.log(x)
        return x**self.gamma / self.gamma


def _is_symmetric(mat, tol=_SYM_TOL):
    scale = max(1.0, float(np.abs(mat).max()))
    return float(np.abs(mat - mat.T).max()) <= tol * scale


def validate_market(raw: MarketParams) -> ValidatedMarket:
    """Check the standing market assumptions and return a validated value.

    Raises the specific error class when a single assumption fails, or a
    ValidationError listing every violation when several fail at once.
    Validating an already validated market returns it unchanged.
    """
    if isinstance(raw, ValidatedMarket):
        return raw

    problems: list[tuple[type, str]] = []
    if raw.d < 2:
        problems.append((BadDimension, f"need at least 2 risky assets, got d={raw.d}"))
    if raw.m < raw.d:
        problems.append((BadDimension, f"Brownian dimension m={raw.m} must be >= d={raw.d}"))
    if raw.sigma.shape != (raw.d, raw.m):
        problems.append(
            (BadDimension, f"sigma has shape {raw.sigma.shape}, expected ({raw.d}, {raw.m})")
        )
    elif raw.d >= 1 and raw.m >= 1:
        svals = np.linalg.svd(raw.sigma, compute_uv=False)
        if svals[0] <= 0.0 or svals[-1] <= RANK_TOL * svals[0]:
            problems.append(
                (RankDeficient, f"sigma is rank deficient (singular values {svals})")
            )
    if not raw.gamma < 1.0:
        problems.append((BadRiskAversion, f"risk aversion gamma={raw.gamma} must be < 1"))
    for name in ("h", "T", "x0"):
        value = getattr(raw, name)
        if not value > 0.0:
            problems.append((NonPositive, f"{name}={value} must be > 0"))

    if problems:
        messages = [msg for _, msg in problems]
        classes = {cls for cls, _ in problems}
        if len(classes) == 1:
            raise classes.pop()(messages)
        raise ValidationError(messages)

    return ValidatedMarket(
        d=raw.d, m=raw.m, r=raw.r, sigma=raw.sigma,
        gamma=raw.gamma, h=raw.h, T=raw.T, x0=raw.x0,
    )


def validate_drift_model(params: DriftModelParams, market: ValidatedMarket) -> DriftModelParams:
    """Check dimensions and definiteness of the drift-model parameters.

    alpha must be symmetric positive definite, beta beta^T positive
    semidefinite (degenerate beta = 0 is allowed for deterministic-drift
    scenarios), sigma0 symmetric PSD and expert_cov symmetric PD.
    """
    d, m = market.d, market.m
    problems = []

    def shape(name, arr, want):
        if arr.shape != want:
            problems.append(f"{name} has shape {arr.shape}, expected {want}")
            return False
        return True

    shape("alpha", params.alpha, (d, d))
    shape("beta", params.beta, (d, d))
    shape("delta", params.delta, (d,))
    shape("m0", params.m0, (d,))
    shape("sigma0", params.sigma0, (d, d))
    shape("sigma_r", params.sigma_r, (d, m))
    shape("expert_cov", params.expert_cov, (d, d))
    if problems:
        raise ValidationError(problems)

    if not _is_symmetric(params.alpha):
        problems.append("alpha is not symmetric")
    elif np.linalg.eigvalsh(params.alpha)[0] <= 0.0:
        problems.append("alpha is not positive definite")
    bbt = params.beta @ params.beta.T
    if np.linalg.eigvalsh(0.5 * (bbt + bbt.T))[0] < -_SYM_TOL * max(1.0, float(np.trace(bbt))):
        problems.append("beta beta^T is not positive semidefinite")
    if not _is_symmetric(params.sigma0):
        problems.append("sigma0 is not symmetric")
    elif np.linalg.eigvalsh(params.sigma0)[0] < -_SYM_TOL * max(1.0, float(np.trace(params.sigma0))):
        problems.append("sigma0 is not positive semidefinite")
    if not _is_symmetric(params.expert_cov):
        problems.append("expert_cov is not symmetric")
    elif np.linalg.eigvalsh(params.expert_cov)[0] <= 0.0:
        problems.append("expert_cov is not positive definite")

    if problems:
        raise ValidationError(problems)
    return params
