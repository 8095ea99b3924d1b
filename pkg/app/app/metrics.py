from __future__ import annotations

from pathlib import Path

from prometheus_client import REGISTRY, Counter, Histogram, write_to_textfile

# Conic layer
CONIC_SOLVES_TOTAL = Counter(
    "isac_conic_solves_total", "Conic programs solved, by program and final status", ["program", "status"]
)
CONIC_SOLVE_SECONDS = Histogram(
    "isac_conic_solve_seconds",
    "Wall-clock time spent inside the conic backend",
    ["program"],
    buckets=(0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 30.0, 120.0),
)

# Beam and placement subproblems
RANK_ONE_FALLBACKS_TOTAL = Counter(
    "isac_rank_one_fallbacks_total", "Beam solves that needed Gaussian randomization"
)
AO_ITERATIONS = Histogram(
    "isac_ao_iterations",
    "Alternating-optimization iterations per run",
    buckets=(0, 1, 2, 3, 5, 8, 13, 21, 34, 55),
)

# Experiment outcomes
INSTANCES_TOTAL = Counter(
    "isac_instances_total", "Scheme runs per instance, by scheme and outcome", ["scheme", "outcome"]
)


def export_metrics(out_dir: Path) -> Path:
    path = Path(out_dir) / "metrics.prom"
    write_to_textfile(str(path), REGISTRY)
    return path
