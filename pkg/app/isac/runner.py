"""Glue between the management commands and the evaluation layer.

Each entry point runs its experiment, writes every artifact into one output
directory and returns a summary the command turns into an exit status.
"""
from __future__ import annotations

import logging
import os
import statistics
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from app.metrics import export_metrics

from .channel import channel_from_paths, export_channel
from .config import ExperimentConfig
from .errors import ConfigError
from .evaluation import (
    ChanceCheck,
    ResultRecord,
    SweepResult,
    draw_paths,
    oracle_gaps,
    run_sweep,
    verify_chance,
)
from .geometry import build_grid
from .reporting import RunManifest, write_chance, write_results, write_trace

logger = logging.getLogger(__name__)


@dataclass
class RunSummary:
    out_dir: Path
    records: list[ResultRecord] = field(default_factory=list)
    flagged: list[str] = field(default_factory=list)
    outputs: list[Path] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.flagged


def prepare_output(out_dir: Path) -> Path:
    """Create ``out_dir`` and make sure files can be written into it."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sentinel = out_dir / f".write-test-{uuid.uuid4().hex}"
    sentinel.write_text("", encoding="utf-8")
    sentinel.unlink()
    return out_dir


def resolve_workers(requested: int) -> int:
    return requested if requested > 0 else (os.cpu_count() or 1)


def _finish(
    command: str, cfg: ExperimentConfig, summary: RunSummary, manifest: RunManifest, run_id: str
) -> RunSummary:
    manifest.flagged = len(summary.flagged)
    manifest.outputs = [p.name for p in summary.outputs] + ["metrics.prom", "manifest.json"]
    manifest.extra.update(summary.details)
    summary.outputs.append(export_metrics(summary.out_dir))
    summary.outputs.append(manifest.write(summary.out_dir))
    logger.info(
        "run_finished",
        extra={"event": "run_finished", "run_id": run_id, "command": command,
               "records": len(summary.records), "flagged": len(summary.flagged)},
    )
    return summary


def _describe(record: ResultRecord) -> str:
    cell = f" {record.sweep_name}={record.sweep_value}" if record.sweep_name else ""
    return f"{record.scheme} seed={record.seed}{cell}"


def export_channels(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """channel_<seed>.json per seed: the lattice channel and the path draw behind it."""
    grid = build_grid(cfg.a, cfg.d, cfg.lam)
    written = []
    for seed in cfg.seeds:
        paths = draw_paths(cfg, seed)
        channel = channel_from_paths(grid, paths, cfg.n_antennas, cfg.noise_var, cfg.sinr_threshold)
        target = Path(out_dir) / f"channel_{seed}.json"
        export_channel(target, channel, paths, seed)
        written.append(target)
    return written


def run_experiment(
    command: str,
    cfg: ExperimentConfig,
    out_dir: Path,
    workers: int = 1,
    record_runtime: bool = False,
    with_channels: bool = False,
) -> RunSummary:
    """Run every scheme, seed and sweep cell of ``cfg``; write results, traces and the manifest."""
    run_id = uuid.uuid4().hex[:12]
    out_dir = prepare_output(out_dir)
    manifest = RunManifest(command, cfg)
    logger.info(
        "run_started",
        extra={"event": "run_started", "run_id": run_id, "command": command, "out": str(out_dir)},
    )
    result: SweepResult = run_sweep(cfg, workers=resolve_workers(workers))
    summary = RunSummary(out_dir, records=result.records)
    summary.flagged = [_describe(r) for r in result.flagged]
    results = write_results(out_dir / "results.csv", result.records, cfg.n_targets, record_runtime)
    summary.outputs.append(results)
    for seed in result.seeds:
        if seed.traces:
            summary.outputs.append(write_trace(out_dir / f"trace_{seed.seed}.csv", seed.traces))
    manifest.add_seeds(result.seeds)
    if with_channels:
        summary.outputs += export_channels(cfg, out_dir)

    if "oracle" in cfg.schemes and "proposed" in cfg.schemes:
        gaps = oracle_gaps(result.records)
        beaten = [g for g in gaps if not g.dominated()]
        summary.flagged += [f"proposed beats oracle seed={g.seed}" for g in beaten]
        summary.details["oracle_gap"] = {
            "pairs": len(gaps),
            "median_relative_gap": statistics.median(g.relative_gap for g in gaps) if gaps else None,
            "max_relative_gap": max((g.relative_gap for g in gaps), default=None),
        }
    return _finish(command, cfg, summary, manifest, run_id)


def run_chance_check(
    cfg: ExperimentConfig, out_dir: Path, samples: int, workers: int = 1
) -> RunSummary:
    """Monte Carlo outage of the proposed design on every seed, against the binomial band."""
    if cfg.n_targets == 0:
        raise ConfigError("system.n_targets", "chance verification needs at least one target")
    run_id = uuid.uuid4().hex[:12]
    out_dir = prepare_output(out_dir)
    cfg = replace(cfg, schemes=("proposed",))
    manifest = RunManifest("isac_verify_chance", cfg)
    checks: list[ChanceCheck] = verify_chance(cfg, samples, workers=resolve_workers(workers))
    summary = RunSummary(out_dir)
    summary.outputs.append(write_chance(out_dir / "chance.csv", checks))
    designed = {c.seed for c in checks}
    summary.flagged = [f"no feasible design for seed={s}" for s in cfg.seeds if s not in designed]
    summary.flagged += [
        f"seed={c.seed} target={c.target} outage {c.empirical:.5f} above {c.band:.5f}"
        for c in checks
        if not c.within_band
    ]
    summary.details["chance"] = {"samples": samples, "checks": len(checks)}
    return _finish("isac_verify_chance", cfg, summary, manifest, run_id)
