"""Robust utility maximization under ellipsoidal drift uncertainty.

Closed-form worst-case drift and constrained strategies, drift filters for
return and expert-view information, confidence-region uncertainty sets, and
a reproducible simulation study comparing robust against naive investing.
"""

__version__ = "0.1.0"

from .config import RunConfig, from_dict, parse_config
from .errors import RobustDriftError, ValidationError
from .filters import (
    ExpertOpinion,
    FilterPath,
    FilterState,
    FiltrationKind,
    expert_update,
    kalman_step,
    propagate,
    run_filter,
    stationary_riccati,
)
from .market import (
    DriftModelParams,
    MarketParams,
    UtilityKind,
    ValidatedMarket,
    validate_drift_model,
    validate_market,
)
from .merton import (
    Allocation,
    ConstraintGeometry,
    TransformedMarket,
    constraint_geometry,
    expected_utility,
    merton_strategy,
    recompose_strategy,
    transform_market,
)
from .simulation import (
    COLUMNS,
    ScenarioPath,
    StudyReport,
    evaluate_utilities,
    run_study,
    simulate_filter_trace,
    simulate_scenario,
)
from .solver import (
    RobustSolution,
    SpectralData,
    brute_force_oracle,
    eigensystem,
    linear_minimizer,
    saddle_check,
    solve_batch,
    solve_psi,
    sup_inf_grid_value,
    worst_case_drift,
)
from .uncertainty import Ellipsoid, chi2_quantile, confidence_ellipsoid, contains

__all__ = [
    "Allocation",
    "COLUMNS",
    "ConstraintGeometry",
    "DriftModelParams",
    "Ellipsoid",
    "ExpertOpinion",
    "FilterPath",
    "FilterState",
    "FiltrationKind",
    "MarketParams",
    "RobustDriftError",
    "RobustSolution",
    "RunConfig",
    "ScenarioPath",
    "SpectralData",
    "StudyReport",
    "TransformedMarket",
    "UtilityKind",
    "ValidatedMarket",
    "ValidationError",
    "brute_force_oracle",
    "chi2_quantile",
    "confidence_ellipsoid",
    "constraint_geometry",
    "contains",
    "eigensystem",
    "evaluate_utilities",
    "expected_utility",
    "expert_update",
    "from_dict",
    "kalman_step",
    "linear_minimizer",
    "merton_strategy",
    "parse_config",
    "propagate",
    "recompose_strategy",
    "run_filter",
    "run_study",
    "saddle_check",
    "simulate_filter_trace",
    "simulate_scenario",
    "solve_batch",
    "solve_psi",
    "stationary_riccati",
    "sup_inf_grid_value",
    "transform_market",
    "validate_drift_model",
    "validate_market",
    "worst_case_drift",
]
