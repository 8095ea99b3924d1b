"""Result files: results.csv, per-seed AO traces, chance checks and the run manifest.

Only the orchestrating process writes here, so row order is the order of the
records it is handed.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .config import ExperimentConfig, config_hash, dump_config
from .evaluation import ChanceCheck, ResultRecord, SeedResult
from .placement import AOTrace

TRACE_COLUMNS = (
    "sweep_value", "iteration", "objective_watts", "binary_violation",
    "penalty_comm", "penalty_radar", "penalty_binary", "penalty_pairs",
    "tau1", "tau2", "tau3", "tau4", "solver_status", "accepted",
)

CHANCE_COLUMNS = (
    "seed", "target", "value_w", "threshold_w", "closed_form", "empirical", "band", "within_band",
)


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.10g}"
    return str(value)


def results_header(n_targets: int) -> list[str]:
    return [
        "scheme", "seed", "sweep_name", "sweep_value", "power_w", "power_dbm", "feasible",
        "iterations", "rank_one_all",
        *(f"outage_hat_{e}" for e in range(1, n_targets + 1)),
        "runtime_s",
    ]


def result_row(record: ResultRecord, n_targets: int, record_runtime: bool = False) -> list[str]:
    outage = list(record.outage_hat) + [math.nan] * (n_targets - len(record.outage_hat))
    return [
        record.scheme,
        fmt(record.seed),
        record.sweep_name,
        record.sweep_value,
        fmt(record.power_w),
        fmt(record.power_dbm),
        fmt(record.feasible),
        fmt(record.iterations),
        fmt(record.rank_one_all),
        *(fmt(float(x)) for x in outage[:n_targets]),
        fmt(record.runtime_s) if record_runtime else "",
    ]


def write_results(
    path: Path, records: Sequence[ResultRecord], n_targets: int, record_runtime: bool = False
) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(results_header(n_targets))
        for record in records:
            writer.writerow(result_row(record, n_targets, record_runtime))
    return path


def write_trace(path: Path, traces: Iterable[tuple[str, AOTrace]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for sweep_value, trace in traces:
            for row in trace.rows:
                writer.writerow(
                    [
                        sweep_value, fmt(row.iteration), fmt(row.objective_watts),
                        fmt(row.binary_violation), fmt(row.penalty_comm), fmt(row.penalty_radar),
                        fmt(row.penalty_binary), fmt(row.penalty_pairs), fmt(row.tau1),
                        fmt(row.tau2), fmt(row.tau3), fmt(row.tau4), row.solver_status,
                        fmt(row.accepted),
                    ]
                )
    return path


def write_chance(path: Path, rows: Sequence[ChanceCheck]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CHANCE_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    fmt(row.seed), fmt(row.target), fmt(row.value_w), fmt(row.threshold_w),
                    fmt(row.closed_form), fmt(row.empirical), fmt(row.band), fmt(row.within_band),
                ]
            )
    return path


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    cfg: ExperimentConfig
    started_at: str = field(default_factory=now)
    finished_at: str = ""
    outputs: list[str] = field(default_factory=list)
    timings: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    flagged: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    def add_seeds(self, seeds: Sequence[SeedResult]) -> None:
        for seed in seeds:
            self.timings[str(seed.seed)] = seed.timings

    def document(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "tool_version": __version__,
            "config_hash": config_hash(self.cfg),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "seeds": list(self.cfg.seeds),
            "outputs": self.outputs,
            "flagged": self.flagged,
            "timings": self.timings,
            "config": dump_config(self.cfg),
            **self.extra,
        }

    def write(self, out_dir: Path) -> Path:
        self.finished_at = now()
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.document(), indent=2, sort_keys=True), encoding="utf-8")
        return path
