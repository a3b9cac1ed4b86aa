"""Scenario simulation and the robust-versus-naive utility study.

One scenario draws a hidden mean-reverting drift path, return increments and
expert views, runs the chosen investor's filter, builds the confidence
ellipsoid at every grid point and solves the local worst-case problem there.
The realized processes are evaluated in four combinations

    (pi*, mu*), (pi_hat, mu*), (pi*, nu), (pi_hat, nu)

with nu the filter mean, either by the exact piecewise-constant formula
(plug_in) or by inner Monte Carlo over the wealth SDE (sde_mc).

All randomness derives from a master seed through per-scenario substreams,
so results are reproducible bit for bit regardless of scheduling, and all
investor kinds share each scenario's draws (common random numbers).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import ModeUnsupported, ValidationError
from .filters import ExpertOpinion, FilterPath, FiltrationKind, run_filter
from .market import DriftModelParams, ValidatedMarket
from .merton import ConstraintGeometry, constraint_geometry, expected_utility
from .solver import solve_batch
from .uncertainty import DEGENERACY_TOL, Ellipsoid, chi2_quantile, regularize_covariance

MODES = ("plug_in", "sde_mc")

#: study column order
COLUMNS = ("u_worst_robust", "u_worst_naive", "u_ref_robust", "u_ref_naive")


def substream(seed, *key) -> np.random.Generator:
    """Deterministic child generator for (seed, *key); thread-schedule free."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _psd_factor(mat):
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    return v * np.sqrt(np.clip(w, 0.0, None))


def expert_dates(n_experts: int, n_steps: int) -> np.ndarray:
    """Grid indices of equidistant interior information dates."""
    k = np.arange(1, n_experts + 1)
    return np.rint(k * n_steps / (n_experts + 1)).astype(int)


def draw_primitives(model: DriftModelParams, T: float, n_steps: int, n_experts: int, seed):
    """Scenario primitives shared by every investor kind for one seed.

    Returns (grid, mu_true, returns, experts): an Euler-Maruyama path of the
    hidden drift, return increments under the true drift, and expert views
    at equidistant interior dates.
    """
    if n_experts < 0:
        raise ValidationError("n_experts must be >= 0")
    d = model.d
    m = model.sigma_r.shape[1]
    dt = T / n_steps
    grid = np.linspace(0.0, T, n_steps + 1)

    rng = substream(seed)
    z0 = rng.standard_normal(d)
    drift_shocks = rng.standard_normal((n_steps, d))
    return_shocks = rng.standard_normal((n_steps, m))
    expert_shocks = rng.standard_normal((n_experts, d))

    mu_true = np.empty((n_steps + 1, d))
    mu_true[0] = model.m0 + _psd_factor(model.sigma0) @ z0
    sq_dt = np.sqrt(dt)
    for i in range(n_steps):
        mu_true[i + 1] = (
            mu_true[i]
            + model.alpha @ (model.delta - mu_true[i]) * dt
            + model.beta @ drift_shocks[i] * sq_dt
        )
    returns = mu_true[:-1] * dt + return_shocks @ model.sigma_r.T * sq_dt

    expert_factor = _psd_factor(model.expert_cov)
    experts = tuple(
        ExpertOpinion(
            t_k=float(grid[idx]),
            z=mu_true[idx] + expert_factor @ expert_shocks[j],
            cov=model.expert_cov,
        )
        for j, idx in enumerate(expert_dates(n_experts, n_steps))
    )
    return grid, mu_true, returns, experts


def _ellipsoid_shapes(fpath: FilterPath, d: int) -> np.ndarray:
    """Conditional covariances, regularized wherever numerically flat."""
    gammas = 0.5 * (fpath.q + np.transpose(fpath.q, (0, 2, 1)))
    eigmin = np.linalg.eigvalsh(gammas)[:, 0]
    floor = DEGENERACY_TOL * np.trace(gammas, axis1=1, axis2=2) / d
    for i in np.nonzero((eigmin < floor) | (floor <= 0.0))[0]:
        gammas[i] = regularize_covariance(gammas[i])
    return gammas


@dataclass(frozen=True, eq=False)
class FilterTrace:
    """Filter-only scenario output (no optimization): data behind band plots."""

    kind: FiltrationKind
    grid: np.ndarray
    mu_true: np.ndarray
    filter: FilterPath
    kappa: float
    gammas: np.ndarray


def simulate_filter_trace(
    model: DriftModelParams,
    kind: FiltrationKind,
    n_experts: int,
    seed,
    T: float = 1.0,
    n_steps: int = 250,
    eta: float = 0.1,
) -> FilterTrace:
    """Simulate one scenario and run only the filter of the given kind.

    Works for any model dimension d >= 1 since no portfolio geometry is
    involved.
    """
    grid, mu_true, returns, experts = draw_primitives(model, T, n_steps, n_experts, seed)
    fpath = run_filter(kind, returns, experts, model, grid)
    gammas = _ellipsoid_shapes(fpath, model.d)
    kappa = float(np.sqrt(chi2_quantile(model.d, 1.0 - eta)))
    return FilterTrace(
        kind=kind, grid=grid, mu_true=mu_true, filter=fpath, kappa=kappa, gammas=gammas
    )


@dataclass(frozen=True, eq=False)
class ScenarioPath:
    """Everything realized along one scenario on the uniform grid."""

    kind: FiltrationKind
    seed: object
    grid: np.ndarray
    mu_true: np.ndarray  # (n_points, d)
    returns: np.ndarray  # (n_steps, d)
    experts: tuple
    filter: FilterPath
    kappa: float
    gammas: np.ndarray  # (n_points, d, d), regularized ellipsoid shapes
    taus: np.ndarray  # (n_points, d, d)
    nus: np.ndarray  # (n_points, d), ellipsoid centers used for solving
    mu_star_path: np.ndarray
    pi_star_path: np.ndarray
    pi_hat_path: np.ndarray
    psi_path: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.grid) - 1

    def ellipsoid(self, i: int) -> Ellipsoid:
        return Ellipsoid(
            nu=self.nus[i], Gamma=self.gammas[i], kappa=self.kappa, tau=self.taus[i]
        )


def simulate_scenario(
    market: ValidatedMarket,
    model: DriftModelParams,
    kind: FiltrationKind,
    n_experts: int,
    seed,
    n_steps: int = 250,
    eta: float = 0.1,
    geom: ConstraintGeometry | None = None,
    freeze_uncertainty: bool = False,
) -> ScenarioPath:
    """Simulate one scenario and run the filter/ellipsoid/solver pipeline.

    The raw draws (initial drift, drift shocks, return shocks, expert noise)
    depend only on `seed`, never on `kind`, so different investors can be
    compared on identical scenarios.  With `freeze_uncertainty` the t=0
    ellipsoid is reused at every grid point (constant-set reduction).
    """
    if geom is None:
        geom = constraint_geometry(market)
    grid, mu_true, returns, experts = draw_primitives(
        model, market.T, n_steps, n_experts, seed
    )
    fpath = run_filter(kind, returns, experts, model, grid)
    gammas = _ellipsoid_shapes(fpath, market.d)
    nus = fpath.m_hat.copy()
    if freeze_uncertainty:
        gammas = np.broadcast_to(gammas[0], gammas.shape).copy()
        nus = np.broadcast_to(nus[0], nus.shape).copy()
    taus = np.linalg.cholesky(gammas)
    kappa = float(np.sqrt(chi2_quantile(market.d, 1.0 - eta)))

    mu_star, pi_star, psi = solve_batch(nus, taus, kappa, geom, market.gamma, market.h)
    pi_hat = fpath.m_hat @ geom.A.T / (1.0 - market.gamma) + market.h * geom.c

    return ScenarioPath(
        kind=kind,
        seed=seed,
        grid=grid,
        mu_true=mu_true,
        returns=returns,
        experts=experts,
        filter=fpath,
        kappa=kappa,
        gammas=gammas,
        taus=taus,
        nus=nus,
        mu_star_path=mu_star,
        pi_star_path=pi_star,
        pi_hat_path=pi_hat,
        psi_path=psi,
    )


def _pairs(path: ScenarioPath):
    pi_star = path.pi_star_path[:-1]
    pi_hat = path.pi_hat_path[:-1]
    mu_star = path.mu_star_path[:-1]
    nu = path.filter.m_hat[:-1]
    return ((pi_star, mu_star), (pi_hat, mu_star), (pi_star, nu), (pi_hat, nu))


def evaluate_utilities(
    path: ScenarioPath,
    market: ValidatedMarket,
    mode: str = "plug_in",
    seed=None,
    inner: int = 200,
) -> np.ndarray:
    """The four study quantities for one scenario, in COLUMNS order.

    plug_in integrates the realized piecewise-constant paths exactly.
    sde_mc simulates terminal wealth with the exact-exponential step under
    the designated drift and averages utility over `inner` paths (one shared
    noise block across the four combinations).
    """
    if mode == "plug_in":
        return np.array(
            [expected_utility(market, pi, mu) for pi, mu in _pairs(path)]
        )
    if mode != "sde_mc":
        raise ModeUnsupported(f"mode must be one of {MODES}, got {mode!r}")

    if seed is None:
        base = path.seed if isinstance(path.seed, tuple) else (path.seed,)
        seed = base + (0x5DE,)
    n_steps = path.n_steps
    dt = market.T / n_steps
    shocks = substream(seed).standard_normal((inner, n_steps, market.m))
    util = market.utility
    out = np.empty(4)
    for j, (pi, mu) in enumerate(_pairs(path)):
        drift = (
            market.r
            + np.einsum("ij,ij->i", pi, mu - market.r)
            - 0.5 * np.einsum("ij,ij->i", pi @ market.sigma, pi @ market.sigma)
        )
        log_x = (
            np.log(market.x0)
            + drift.sum() * dt
            + np.sqrt(dt) * np.einsum("kim,im->k", shocks, pi @ market.sigma)
        )
        out[j] = float(np.mean(util(np.exp(log_x))))
    return out


def _scenario_values(
    i: int,
    market: ValidatedMarket,
    model: DriftModelParams,
    geom: ConstraintGeometry,
    kinds,
    n_experts: int,
    master_seed: int,
    mode: str,
    n_steps: int,
    eta: float,
    inner: int,
) -> np.ndarray:
    out = np.empty((len(kinds), 4))
    for k, kind in enumerate(kinds):
        path = simulate_scenario(
            market, model, kind, n_experts, seed=(master_seed, i),
            n_steps=n_steps, eta=eta, geom=geom,
        )
        out[k] = evaluate_utilities(
            path, market, mode=mode, seed=(master_seed, i, 1), inner=inner
        )
    return out


@dataclass(frozen=True, eq=False)
class StudyReport:
    """Sample means and standard deviations of the four study columns."""

    kinds: tuple
    means: dict  # kind -> (4,) array in COLUMNS order
    stds: dict  # kind -> (4,) array
    n_sims: int
    n_experts: int
    seed: int
    n_steps: int
    eta: float
    mode: str

    def standard_errors(self, kind) -> np.ndarray:
        return self.stds[kind] / np.sqrt(self.n_sims)


def run_study(
    market: ValidatedMarket,
    model: DriftModelParams,
    kinds,
    n_experts: int,
    n_sims: int,
    seed: int,
    mode: str = "plug_in",
    n_steps: int = 250,
    eta: float = 0.1,
    inner: int = 200,
    n_jobs: int = 1,
) -> StudyReport:
    """Run n_sims scenarios per investor kind and aggregate the four columns.

    Scenario i uses substream (seed, i) for every kind, so the comparison
    across kinds is driven by information alone.  Results are independent
    of n_jobs.
    """
    if n_sims < 1:
        raise ValidationError(f"n_sims={n_sims} must be >= 1")
    if mode not in MODES:
        raise ModeUnsupported(f"mode must be one of {MODES}, got {mode!r}")
    kinds = tuple(kinds)
    geom = constraint_geometry(market)
    worker = partial(
        _scenario_values,
        market=market,
        model=model,
        geom=geom,
        kinds=kinds,
        n_experts=n_experts,
        master_seed=seed,
        mode=mode,
        n_steps=n_steps,
        eta=eta,
        inner=inner,
    )
    values = np.empty((n_sims, len(kinds), 4))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            for i, res in enumerate(pool.map(worker, range(n_sims), chunksize=16)):
                values[i] = res
    else:
        for i in range(n_sims):
            values[i] = worker(i)

    means = {}
    stds = {}
    for k, kind in enumerate(kinds):
        means[kind] = values[:, k, :].mean(axis=0)
        stds[kind] = (
            values[:, k, :].std(axis=0, ddof=1) if n_sims > 1 else np.zeros(4)
        )
    return StudyReport(
        kinds=kinds,
        means=means,
        stds=stds,
        n_sims=n_sims,
        n_experts=n_experts,
        seed=seed,
        n_steps=n_steps,
        eta=eta,
        mode=mode,
    )
