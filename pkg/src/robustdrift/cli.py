"""Command-line front end.

Subcommands: solve (one-shot constant-set problem), filter (filter trace for
one investor kind), simulate (single scenario with traces), study (the full
robust-versus-naive comparison).  Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config
from .errors import OutOfDomain, ParseError, RobustDriftError, ValidationError
from .filters import FiltrationKind
from .merton import constraint_geometry
from .reporting import (
    ReportBundle,
    fmt,
    study_json_dict,
    write_filter_csv,
    write_json,
    write_scenario_csv,
    write_study_csv,
)
from .simulation import (
    MODES,
    evaluate_utilities,
    run_study,
    simulate_filter_trace,
    simulate_scenario,
)
from .solver import brute_force_oracle, worst_case_drift
from .uncertainty import Ellipsoid

DEFAULT_CONFIG_NAME = "table1.toml"


def default_config_path() -> Path:
    return Path(resources.files("robustdrift") / "configs" / DEFAULT_CONFIG_NAME)


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ParseError(f"cannot parse vector {text!r}: {exc}") from None


def _parse_matrix(text: str) -> np.ndarray:
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
        return np.array(rows, dtype=float)
    except ValueError as exc:
        raise ParseError(f"cannot parse matrix {text!r}: {exc}") from None


def _load_config(args) -> RunConfig:
    path = Path(args.config) if args.config else default_config_path()
    config = parse_config(path)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "paths", None) is not None:
        if args.paths < 1:
            raise ValidationError(f"--paths must be >= 1, got {args.paths}")
        overrides["n_sims"] = args.paths
    if getattr(args, "steps", None) is not None:
        if args.steps < 1:
            raise ValidationError(f"--steps must be >= 1, got {args.steps}")
        overrides["n_steps"] = args.steps
    if getattr(args, "mode", None) is not None:
        if args.mode not in MODES:
            raise ValidationError(f"--mode must be one of {MODES}, got {args.mode!r}")
        overrides["mode"] = args.mode
    if getattr(args, "kinds", None) is not None:
        try:
            overrides["kinds"] = tuple(
                FiltrationKind(k.strip()) for k in args.kinds.split(",")
            )
        except ValueError as exc:
            raise ValidationError(f"--kinds: {exc}") from None
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def cmd_solve(config: RunConfig, nu, Gamma, kappa, oracle=False, out_dir=None) -> ReportBundle:
    """Solve the constant-set worst-case problem and write solve.json."""
    market = config.market
    geom = constraint_geometry(market)
    K = Ellipsoid.from_shape(nu, Gamma, kappa)
    solution = worst_case_drift(K, geom, market)

    diagnostics = {
        "nu": K.nu.tolist(),
        "Gamma": K.Gamma.tolist(),
        "kappa": K.kappa,
        "mu_star": solution.mu_star.tolist(),
        "pi_star": solution.pi_star.pi.tolist(),
        "psi": solution.psi,
        "lambdas": solution.spectral.lambdas.tolist(),
        "norm_tau_inv_one": solution.spectral.norm1,
        "value": solution.value,
        "boundary_residual": solution.boundary_residual,
        "dual_gap": solution.dual_gap,
    }
    print(f"mu_star = [{', '.join(fmt(v) for v in solution.mu_star)}]")
    print(f"pi_star = [{', '.join(fmt(v) for v in solution.pi_star.pi)}]")
    print(f"psi     = {fmt(solution.psi)}")
    print(f"lambdas = [{', '.join(fmt(v) for v in solution.spectral.lambdas)}]")
    print(f"value   = {fmt(solution.value)}")

    if oracle:
        mu_o, value_o = brute_force_oracle(K, geom, market, n_angle=3600)
        diagnostics["oracle"] = {
            "mu": mu_o.tolist(),
            "value": value_o,
            "mu_distance": float(np.linalg.norm(mu_o - solution.mu_star)),
            "value_rel_diff": abs(value_o - solution.value) / abs(solution.value),
        }
        print(f"oracle mu distance   = {fmt(diagnostics['oracle']['mu_distance'])}")
        print(f"oracle value reldiff = {fmt(diagnostics['oracle']['value_rel_diff'])}")

    bundle = ReportBundle(
        command="solve",
        version=__version__,
        config_echo=config.to_dict(),
        diagnostics=diagnostics,
    )
    out = Path(out_dir if out_dir is not None else config.output_dir)
    target = out / "solve.json"
    write_json(target, bundle.to_json_dict())
    bundle.files.append(str(target))
    return bundle


def cmd_study(config: RunConfig, n_jobs: int = 1) -> ReportBundle:
    """Run the study and write study.csv / study.json."""
    report = run_study(
        config.market,
        config.drift,
        config.kinds,
        n_experts=config.n_experts,
        n_sims=config.n_sims,
        seed=config.seed,
        mode=config.mode,
        n_steps=config.n_steps,
        eta=config.eta,
        n_jobs=n_jobs,
    )
    bundle = ReportBundle(
        command="study",
        version=__version__,
        config_echo=config.to_dict(),
        study=study_json_dict(report),
    )
    out = Path(config.output_dir)
    if config.emit in ("csv", "both"):
        write_study_csv(out / "study.csv", report)
        bundle.files.append(str(out / "study.csv"))
    if config.emit in ("json", "both"):
        write_json(out / "study.json", bundle.to_json_dict())
        bundle.files.append(str(out / "study.json"))
    for kind in report.kinds:
        cells = " ".join(
            fmt(report.means[kind][j]) for j in range(4)
        )
        print(f"{kind.value}: {cells}")
    return bundle


def cmd_filter(config: RunConfig, kind: FiltrationKind, seed=None) -> ReportBundle:
    """Emit the per-grid-point filter trace CSV for one investor kind."""
    trace = simulate_filter_trace(
        config.drift,
        kind,
        n_experts=config.n_experts,
        seed=config.seed if seed is None else seed,
        T=config.market.T,
        n_steps=config.n_steps,
        eta=config.eta,
    )
    bundle = ReportBundle(
        command="filter", version=__version__, config_echo=config.to_dict()
    )
    out = Path(config.output_dir)
    target = out / f"filter_{kind.value}.csv"
    write_filter_csv(target, trace)
    bundle.files.append(str(target))
    print(f"wrote {target}")
    return bundle


def cmd_simulate(config: RunConfig, kind: FiltrationKind, seed=None) -> ReportBundle:
    """Simulate one scenario, write its trace CSV and utility summary JSON."""
    use_seed = config.seed if seed is None else seed
    path = simulate_scenario(
        config.market,
        config.drift,
        kind,
        n_experts=config.n_experts,
        seed=use_seed,
        n_steps=config.n_steps,
        eta=config.eta,
    )
    values = evaluate_utilities(
        path, config.market, mode=config.mode, seed=(use_seed, 1)
    )
    diagnostics = {
        "kind": kind.value,
        "utilities": {
            "u_worst_robust": values[0],
            "u_worst_naive": values[1],
            "u_ref_robust": values[2],
            "u_ref_naive": values[3],
        },
        "kappa": path.kappa,
    }
    bundle = ReportBundle(
        command="simulate",
        version=__version__,
        config_echo=config.to_dict(),
        diagnostics=diagnostics,
    )
    out = Path(config.output_dir)
    csv_target = out / f"scenario_{kind.value}.csv"
    json_target = out / f"scenario_{kind.value}.json"
    if config.emit in ("csv", "both"):
        write_scenario_csv(csv_target, path)
        bundle.files.append(str(csv_target))
    if config.emit in ("json", "both"):
        write_json(json_target, bundle.to_json_dict())
        bundle.files.append(str(json_target))
    for name, value in diagnostics["utilities"].items():
        print(f"{name} = {fmt(value)}")
    return bundle


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustdrift",
        description="Worst-case portfolio optimization under drift uncertainty",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_mode=True, with_kinds=False):
        p.add_argument("--config", help="TOML config file (default: bundled table1)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--steps", type=int, help="override the grid size")
        p.add_argument("--out", help="override the output directory")
        if with_mode:
            p.add_argument("--mode", choices=MODES, help="evaluation mode")
        if with_kinds:
            p.add_argument("--kinds", help="comma list of investor kinds, e.g. N,R,E,C")

    p_solve = sub.add_parser("solve", help="one-shot constant-set solve")
    common(p_solve, with_mode=False)
    p_solve.add_argument("--nu", required=True, help="center, e.g. '0.1,0.1'")
    p_solve.add_argument("--Gamma", required=True, help="shape matrix, e.g. '1,0;0,1'")
    p_solve.add_argument("--kappa", type=float, required=True, help="radius > 0")
    p_solve.add_argument(
        "--oracle", action="store_true", help="cross-check against the d=2 grid oracle"
    )

    p_filter = sub.add_parser("filter", help="filter trace for one investor kind")
    common(p_filter, with_mode=False)
    p_filter.add_argument("--kind", required=True, help="one of N, R, E, C")

    p_sim = sub.add_parser("simulate", help="single scenario with traces")
    common(p_sim)
    p_sim.add_argument("--kind", required=True, help="one of N, R, E, C")

    p_study = sub.add_parser("study", help="robust-versus-naive utility study")
    common(p_study, with_kinds=True)
    p_study.add_argument("--paths", type=int, help="number of scenarios per kind")
    p_study.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "solve":
            if not args.kappa > 0.0:
                raise OutOfDomain(f"kappa must be > 0, got {args.kappa}")
            cmd_solve(
                config,
                _parse_vector(args.nu),
                _parse_matrix(args.Gamma),
                args.kappa,
                oracle=args.oracle,
            )
        elif args.command == "filter":
            cmd_filter(config, _to_kind(args.kind))
        elif args.command == "simulate":
            cmd_simulate(config, _to_kind(args.kind))
        elif args.command == "study":
            cmd_study(config, n_jobs=args.jobs)
    except (ParseError, ValidationError, OutOfDomain) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RobustDriftError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


def _to_kind(text: str) -> FiltrationKind:
    try:
        return FiltrationKind(text)
    except ValueError:
        raise ValidationError(
            f"unknown investor kind {text!r}; expected one of N, R, E, C"
        ) from None


if __name__ == "__main__":
    sys.exit(main())
