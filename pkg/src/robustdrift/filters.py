"""Drift filters for the four investor information sets.

The hidden drift follows d mu = alpha (delta - mu) dt + beta dB.  Investors
observe nothing (N), return increments (R), discrete expert views (E) or
both (C).  Conditional mean and covariance evolve by the standard
linear-Gaussian recursions:

    propagate:  dm = alpha (delta - m) dt
                dq = (-alpha q - q alpha^T + beta beta^T) dt
    returns:    dm += q (sigma_r sigma_r^T)^{-1} (dR - m dt)
                dq += -q (sigma_r sigma_r^T)^{-1} q dt
    experts:    m <- m + q (q + cov)^{-1} (z - m)
                q <- q - q (q + cov)^{-1} q

Deterministic parts are stepped with an explicit predictor-corrector (Heun)
scheme; the covariance is symmetrized each step and tiny negative
eigenvalues are clipped to zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, SingularUpdate, StepTooLarge
from .market import DriftModelParams

# A step whose covariance eigenvalues dip below -STEP_TOL * scale indicates
# the explicit step is too coarse; smaller dips are treated as round-off.
STEP_TOL = 1e-8
DATE_TOL = 1e-9


class FiltrationKind(enum.Enum):
    """Investor information set: none, returns, experts, combined."""

    N = "N"
    R = "R"
    E = "E"
    C = "C"

    @property
    def uses_returns(self) -> bool:
        return self in (FiltrationKind.R, FiltrationKind.C)

    @property
    def uses_experts(self) -> bool:
        return self in (FiltrationKind.E, FiltrationKind.C)


@dataclass(frozen=True, eq=False)
class FilterState:
    """Conditional mean and covariance of the drift at time t."""

    t: float
    m_hat: np.ndarray
    q: np.ndarray


@dataclass(frozen=True, eq=False)
class ExpertOpinion:
    """Unbiased noisy view z of the drift at date t_k with covariance cov."""

    t_k: float
    z: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True, eq=False)
class FilterPath:
    """Filter output on the full grid: m_hat[i], q[i] at grid[i]."""

    grid: np.ndarray
    m_hat: np.ndarray  # (n_points, d)
    q: np.ndarray  # (n_points, d, d)

    def __len__(self) -> int:
        return len(self.grid)

    def state(self, i: int) -> FilterState:
        return FilterState(t=float(self.grid[i]), m_hat=self.m_hat[i], q=self.q[i])


def _repair_psd(q: np.ndarray, dt: float) -> np.ndarray:
    q = 0.5 * (q + q.T)
    w = np.linalg.eigvalsh(q)
    if w[0] >= 0.0:
        return q
    scale = max(1.0, float(np.trace(q)))
    if w[0] < -STEP_TOL * scale:
        raise StepTooLarge(
            f"covariance step produced eigenvalue {w[0]:.3e}; reduce dt={dt}"
        )
    w2, vec = np.linalg.eigh(q)
    return (vec * np.clip(w2, 0.0, None)) @ vec.T


def _mean_drift(m, model):
    return model.alpha @ (model.delta - m)


def _cov_drift(q, model, obs_info=None):
    out = -model.alpha @ q - q @ model.alpha.T + model.beta @ model.beta.T
    if obs_info is not None:
        out = out - q @ obs_info @ q
    return out


def propagate(state: FilterState, dt: float, model: DriftModelParams) -> FilterState:
    """Heun step of the no-observation mean/covariance dynamics."""
    m, q = state.m_hat, state.q
    km1 = _mean_drift(m, model)
    kq1 = _cov_drift(q, model)
    kq2 = _cov_drift(q + dt * kq1, model)
    m_new = m + 0.5 * dt * (km1 + _mean_drift(m + dt * km1, model))
    q_new = _repair_psd(q + 0.5 * dt * (kq1 + kq2), dt)
    return FilterState(t=state.t + dt, m_hat=m_new, q=q_new)


def _obs_info(model):
    srr = model.sigma_r @ model.sigma_r.T
    try:
        return np.linalg.inv(srr)
    except np.linalg.LinAlgError as exc:
        raise SingularUpdate(f"sigma_r sigma_r^T is singular: {exc}") from exc


def kalman_step(
    state: FilterState, dR, dt: float, model: DriftModelParams, obs_info=None
) -> FilterState:
    """One explicit filter step with a return increment dR over dt.

    The deterministic mean dynamics use the same Heun update as `propagate`
    (so a zero innovation reduces exactly to propagation); the innovation
    enters with the left-endpoint gain q (sigma_r sigma_r^T)^{-1}.
    """
    if obs_info is None:
        obs_info = _obs_info(model)
    m, q = state.m_hat, state.q
    dR = np.asarray(dR, dtype=float)

    km1 = _mean_drift(m, model)
    m_det = m + 0.5 * dt * (km1 + _mean_drift(m + dt * km1, model))
    m_new = m_det + q @ (obs_info @ (dR - m * dt))

    kq1 = _cov_drift(q, model, obs_info)
    kq2 = _cov_drift(q + dt * kq1, model, obs_info)
    q_new = _repair_psd(q + 0.5 * dt * (kq1 + kq2), dt)
    return FilterState(t=state.t + dt, m_hat=m_new, q=q_new)


def expert_update(state: FilterState, opinion: ExpertOpinion) -> FilterState:
    """Conjugate Gaussian update at an information date.

    Requires the opinion date to coincide with the state's time.  The
    posterior covariance never exceeds the prior in the Loewner order.
    """
    if abs(opinion.t_k - state.t) > DATE_TOL * max(1.0, abs(state.t)):
        raise GridMismatch(
            f"expert date {opinion.t_k} does not match filter time {state.t}"
        )
    q = state.q
    try:
        gain = np.linalg.solve(q + opinion.cov, q).T  # q (q + cov)^{-1}
    except np.linalg.LinAlgError as exc:
        raise SingularUpdate(f"q + expert covariance is singular: {exc}") from exc
    m_new = state.m_hat + gain @ (opinion.z - state.m_hat)
    q_new = _repair_psd(q - gain @ q, dt=0.0)
    return FilterState(t=state.t, m_hat=m_new, q=q_new)


def stationary_riccati(model: DriftModelParams) -> np.ndarray:
    """Stationary covariance of the return-observation filter.

    Solves -alpha q - q alpha^T + beta beta^T - q (sigma_r sigma_r^T)^{-1} q = 0
    as an algebraic Riccati equation.
    """
    from scipy.linalg import solve_continuous_are

    d = model.d
    return solve_continuous_are(
        -model.alpha, np.eye(d), model.beta @ model.beta.T, model.sigma_r @ model.sigma_r.T
    )


def run_filter(
    kind: FiltrationKind,
    returns,
    experts,
    model: DriftModelParams,
    grid,
) -> FilterPath:
    """Run the filter of the given kind along a uniform grid.

    `returns` holds one increment per grid step (ignored unless the kind
    observes returns); `experts` is a list of ExpertOpinion whose dates must
    sit on grid points (ignored unless the kind observes experts).
    """
    grid = np.asarray(grid, dtype=float)
    n_steps = len(grid) - 1
    if n_steps < 1:
        raise GridMismatch("grid needs at least two points")
    dt = float(grid[1] - grid[0])
    if not np.allclose(np.diff(grid), dt, rtol=0.0, atol=DATE_TOL):
        raise GridMismatch("grid is not uniform")
    returns = np.asarray(returns, dtype=float) if returns is not None else None
    if kind.uses_returns:
        if returns is None or returns.shape[0] != n_steps:
            raise GridMismatch(
                f"need one return increment per step ({n_steps}), got "
                f"{None if returns is None else returns.shape}"
            )
        info = _obs_info(model)

    by_index: dict[int, list[ExpertOpinion]] = {}
    if kind.uses_experts:
        for op in experts or []:
            idx = int(round((op.t_k - grid[0]) / dt))
            if idx < 0 or idx > n_steps or abs(grid[idx] - op.t_k) > DATE_TOL:
                raise GridMismatch(f"expert date {op.t_k} is not on the grid")
            by_index.setdefault(idx, []).append(op)

    d = model.d
    m_path = np.empty((n_steps + 1, d))
    q_path = np.empty((n_steps + 1, d, d))
    state = FilterState(t=float(grid[0]), m_hat=model.m0.copy(), q=model.sigma0.copy())
    for op in by_index.get(0, []):
        state = expert_update(state, op)
    m_path[0], q_path[0] = state.m_hat, state.q

    for i in range(n_steps):
        if kind.uses_returns:
            state = kalman_step(state, returns[i], dt, model, obs_info=info)
        else:
            state = propagate(state, dt, model)
        # nudge accumulated float time onto the grid point
        state = FilterState(t=float(grid[i + 1]), m_hat=state.m_hat, q=state.q)
        for op in by_index.get(i + 1, []):
            state = expert_update(state, op)
        m_path[i + 1], q_path[i + 1] = state.m_hat, state.q

    return FilterPath(grid=grid, m_hat=m_path, q=q_path)
