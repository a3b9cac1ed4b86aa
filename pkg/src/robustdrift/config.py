"""Run configuration: strict TOML schema, validation and round-tripping.

The file has three tables.  [market] and [drift] hold the model parameters,
[study] the experiment controls.  Unknown keys anywhere are hard errors and
the seed is mandatory, so a config plus a seed pins a run completely.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .filters import FiltrationKind
from .market import (
    DriftModelParams,
    MarketParams,
    ValidatedMarket,
    validate_drift_model,
    validate_market,
)
from .simulation import MODES

_MARKET_KEYS = ("d", "m", "r", "sigma", "gamma", "h", "T", "x0")
_DRIFT_KEYS = ("alpha", "beta", "delta", "m0", "sigma0", "sigma_r", "sigma_j")
_STUDY_KEYS = (
    "eta", "n_experts", "n_sims", "n_steps", "seed", "kinds", "mode",
    "output_dir", "emit",
)
_STUDY_DEFAULTS = {
    "eta": 0.1,
    "n_experts": 10,
    "n_sims": 2000,
    "n_steps": 250,
    "kinds": ["N", "R", "E", "C"],
    "mode": "plug_in",
    "output_dir": "out",
    "emit": "both",
}
_EMIT = ("csv", "json", "both")


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Validated run configuration."""

    market: ValidatedMarket
    drift: DriftModelParams
    sigma_j: np.ndarray
    eta: float
    n_experts: int
    n_sims: int
    n_steps: int
    seed: int
    kinds: tuple
    mode: str
    output_dir: str
    emit: str

    def to_dict(self) -> dict:
        """Plain nested dict that re-parses to an equal config (bit exact)."""
        mk = self.market
        dr = self.drift
        return {
            "market": {
                "d": mk.d, "m": mk.m, "r": mk.r,
                "sigma": mk.sigma.tolist(),
                "gamma": mk.gamma, "h": mk.h, "T": mk.T, "x0": mk.x0,
            },
            "drift": {
                "alpha": dr.alpha.tolist(),
                "beta": dr.beta.tolist(),
                "delta": dr.delta.tolist(),
                "m0": dr.m0.tolist(),
                "sigma0": dr.sigma0.tolist(),
                "sigma_r": dr.sigma_r.tolist(),
                "sigma_j": self.sigma_j.tolist(),
            },
            "study": {
                "eta": self.eta,
                "n_experts": self.n_experts,
                "n_sims": self.n_sims,
                "n_steps": self.n_steps,
                "seed": self.seed,
                "kinds": [k.value for k in self.kinds],
                "mode": self.mode,
                "output_dir": self.output_dir,
                "emit": self.emit,
            },
        }


def _require_keys(table: dict, allowed, section: str):
    for key in table:
        if key not in allowed:
            raise ParseError(f"unknown key {key!r} in [{section}]")


def _get(table: dict, key: str, section: str, missing: list):
    if key not in table:
        missing.append(f"[{section}] is missing {key!r}")
        return None
    return table[key]


def _as_float(value, name: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    return float(value)


def _as_int(value, name: str):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    return int(value)


def _as_matrix(value, name: str):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not a numeric array: {exc}") from None
    return arr


def from_dict(data: dict) -> RunConfig:
    """Build and validate a RunConfig from a nested plain dict."""
    if not isinstance(data, dict):
        raise ParseError("top level must be a table")
    _require_keys(data, ("market", "drift", "study"), "top level")
    missing: list[str] = []
    sections = {}
    for section in ("market", "drift", "study"):
        table = data.get(section)
        if table is None:
            missing.append(f"missing [{section}] table")
            sections[section] = {}
        else:
            sections[section] = table
    _require_keys(sections["market"], _MARKET_KEYS, "market")
    _require_keys(sections["drift"], _DRIFT_KEYS, "drift")
    _require_keys(sections["study"], _STUDY_KEYS, "study")

    mk = {k: _get(sections["market"], k, "market", missing) for k in _MARKET_KEYS}
    dr = {k: _get(sections["drift"], k, "drift", missing) for k in _DRIFT_KEYS}
    st = dict(_STUDY_DEFAULTS)
    st.update(sections["study"])
    if "seed" not in st:
        missing.append("[study] is missing 'seed' (runs must be reproducible)")
    if missing:
        raise ValidationError(missing)

    market = validate_market(
        MarketParams(
            d=_as_int(mk["d"], "market.d"),
            m=_as_int(mk["m"], "market.m"),
            r=_as_float(mk["r"], "market.r"),
            sigma=_as_matrix(mk["sigma"], "market.sigma"),
            gamma=_as_float(mk["gamma"], "market.gamma"),
            h=_as_float(mk["h"], "market.h"),
            T=_as_float(mk["T"], "market.T"),
            x0=_as_float(mk["x0"], "market.x0"),
        )
    )
    n_experts_raw = st["n_experts"]
    sigma_j = _as_matrix(dr["sigma_j"], "drift.sigma_j")
    # sigma_j is the continuous-observation volatility; n discrete views on
    # [0, T] carrying the same information each have covariance
    # (n / T) sigma_j sigma_j^T.  With no experts the factor is moot.
    views_per_time = (
        n_experts_raw / market.T if isinstance(n_experts_raw, int) and n_experts_raw > 0 else 1.0
    )
    drift = validate_drift_model(
        DriftModelParams(
            alpha=_as_matrix(dr["alpha"], "drift.alpha"),
            beta=_as_matrix(dr["beta"], "drift.beta"),
            delta=_as_matrix(dr["delta"], "drift.delta"),
            m0=_as_matrix(dr["m0"], "drift.m0"),
            sigma0=_as_matrix(dr["sigma0"], "drift.sigma0"),
            sigma_r=_as_matrix(dr["sigma_r"], "drift.sigma_r"),
            expert_cov=views_per_time * (sigma_j @ sigma_j.T),
        ),
        market,
    )

    eta = _as_float(st["eta"], "study.eta")
    if not 0.0 < eta < 1.0:
        raise ValidationError(f"study.eta={eta} must lie in (0, 1)")
    mode = st["mode"]
    if mode not in MODES:
        raise ValidationError(f"study.mode={mode!r} must be one of {MODES}")
    emit = st["emit"]
    if emit not in _EMIT:
        raise ValidationError(f"study.emit={emit!r} must be one of {_EMIT}")
    try:
        kinds = tuple(FiltrationKind(k) for k in st["kinds"])
    except ValueError as exc:
        raise ValidationError(f"study.kinds: {exc}") from None
    n_experts = _as_int(st["n_experts"], "study.n_experts")
    n_sims = _as_int(st["n_sims"], "study.n_sims")
    n_steps = _as_int(st["n_steps"], "study.n_steps")
    if n_experts < 0:
        raise ValidationError("study.n_experts must be >= 0")
    if n_steps < 1:
        raise ValidationError("study.n_steps must be >= 1")

    sigma_j.setflags(write=False)
    return RunConfig(
        market=market,
        drift=drift,
        sigma_j=sigma_j,
        eta=eta,
        n_experts=n_experts,
        n_sims=n_sims,
        n_steps=n_steps,
        seed=_as_int(st["seed"], "study.seed"),
        kinds=kinds,
        mode=mode,
        output_dir=str(st["output_dir"]),
        emit=emit,
    )


def parse_config(path) -> RunConfig:
    """Parse and validate a TOML run configuration file."""
    try:
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ParseError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ParseError(f"cannot read config file: {exc}") from None
    return from_dict(data)
