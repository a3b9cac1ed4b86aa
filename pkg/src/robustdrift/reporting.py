"""Report bundles and CSV/JSON writers.

CSV carries 6 significant digits for humans and plotting; JSON carries full
binary-faithful doubles for regression tests.  All files use LF line endings
and '.' decimals so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .simulation import COLUMNS, FilterTrace, ScenarioPath, StudyReport


def fmt(value) -> str:
    return f"{float(value):.6g}"


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=False)
        fh.write("\n")


@dataclass(eq=False)
class ReportBundle:
    """Everything one command produced: results, diagnostics, config echo."""

    command: str
    version: str
    config_echo: dict
    study: dict | None = None
    diagnostics: dict | None = None
    traces: dict | None = None
    files: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        out = {
            "command": self.command,
            "version": self.version,
            "config": self.config_echo,
        }
        if self.study is not None:
            out["study"] = self.study
        if self.diagnostics is not None:
            out["diagnostics"] = self.diagnostics
        if self.traces is not None:
            out["traces"] = self.traces
        return out


# ---------------------------------------------------------------------------
# study table


def study_header():
    head = ["kind", "n_experts", "n_sims"]
    for col in COLUMNS:
        head += [f"mean_{col}", f"std_{col}"]
    return head


def study_rows(report: StudyReport):
    rows = []
    for kind in report.kinds:
        row = [kind.value, report.n_experts, report.n_sims]
        for j in range(len(COLUMNS)):
            row += [fmt(report.means[kind][j]), fmt(report.stds[kind][j])]
        rows.append(row)
    return rows


def write_study_csv(path, report: StudyReport) -> None:
    write_csv(path, study_header(), study_rows(report))


def study_json_dict(report: StudyReport) -> dict:
    cells = {}
    for kind in report.kinds:
        cells[kind.value] = {
            col: {
                "mean": float(report.means[kind][j]),
                "std": float(report.stds[kind][j]),
            }
            for j, col in enumerate(COLUMNS)
        }
    return {
        "columns": list(COLUMNS),
        "cells": cells,
        "n_sims": report.n_sims,
        "n_experts": report.n_experts,
        "seed": report.seed,
        "n_steps": report.n_steps,
        "eta": report.eta,
        "mode": report.mode,
    }


# ---------------------------------------------------------------------------
# filter trace


def filter_header(d: int):
    if d == 1:
        return ["t", "mu_true", "m_hat", "q", "k_lo", "k_hi"]
    head = ["t"]
    head += [f"mu_true_{i + 1}" for i in range(d)]
    head += [f"m_hat_{i + 1}" for i in range(d)]
    head += [f"q_{i + 1}{i + 1}" for i in range(d)]
    head.append("kappa")
    head += [f"gamma_{i + 1}{j + 1}" for i in range(d) for j in range(i, d)]
    return head


def filter_rows(trace: FilterTrace):
    d = trace.mu_true.shape[1]
    rows = []
    for i, t in enumerate(trace.grid):
        m_hat = trace.filter.m_hat[i]
        q = trace.filter.q[i]
        if d == 1:
            half = trace.kappa * np.sqrt(trace.gammas[i][0, 0])
            rows.append(
                [fmt(t), fmt(trace.mu_true[i, 0]), fmt(m_hat[0]), fmt(q[0, 0]),
                 fmt(m_hat[0] - half), fmt(m_hat[0] + half)]
            )
            continue
        row = [fmt(t)]
        row += [fmt(v) for v in trace.mu_true[i]]
        row += [fmt(v) for v in m_hat]
        row += [fmt(q[j, j]) for j in range(d)]
        row.append(fmt(trace.kappa))
        row += [fmt(trace.gammas[i][a, b]) for a in range(d) for b in range(a, d)]
        rows.append(row)
    return rows


def write_filter_csv(path, trace: FilterTrace) -> None:
    write_csv(path, filter_header(trace.mu_true.shape[1]), filter_rows(trace))


# ---------------------------------------------------------------------------
# single-scenario trace


def scenario_header(d: int):
    head = ["t"]
    for name in ("mu_true", "m_hat", "mu_star", "pi_star", "pi_hat"):
        head += [f"{name}_{i + 1}" for i in range(d)]
    head += [f"q_{i + 1}{i + 1}" for i in range(d)]
    head += ["kappa", "psi"]
    return head


def scenario_rows(path: ScenarioPath):
    d = path.mu_true.shape[1]
    rows = []
    for i, t in enumerate(path.grid):
        row = [fmt(t)]
        for arr in (
            path.mu_true, path.filter.m_hat, path.mu_star_path,
            path.pi_star_path, path.pi_hat_path,
        ):
            row += [fmt(v) for v in arr[i]]
        row += [fmt(path.filter.q[i][j, j]) for j in range(d)]
        row += [fmt(path.kappa), fmt(path.psi_path[i])]
        rows.append(row)
    return rows


def write_scenario_csv(out_path, path: ScenarioPath) -> None:
    write_csv(out_path, scenario_header(path.mu_true.shape[1]), scenario_rows(path))
