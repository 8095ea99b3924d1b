"""Schemes, baselines, the exhaustive oracle and seeded sweeps.

One seed fixes one path realization. Every scheme of every sweep cell sees
the channel that realization produces at its own candidate positions, so the
lattice, the fixed array and the selection array are compared on common
channels.
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Any, Sequence

import numpy as np

from app.metrics import INSTANCES_TOTAL

from .beamforming import BeamformingSolution, beamform, evaluate_sinr
from .channel import PathSet, channel_from_paths, generate_paths, sample_user_distances
from .config import ExperimentConfig
from .conic import SolverOptions, SolveStatus
from .errors import InvalidParameterError, OracleSizeError
from .geometry import (
    Aperture,
    Placement,
    build_grid,
    check_min_distance,
    expand_block_matrix,
    snap_to_lattice,
    upa_positions,
)
from .placement import AOConfig, AOTrace, ao_run
from .scenario import Scenario
from .sensing import (
    Target,
    TargetSpec,
    beampattern_mse,
    calibrate_mse_cap,
    make_beam_grid,
    outage_probability,
    pattern_values,
    sample_rcs,
    sensing_snr,
)
from .units import watts_to_dbm

logger = logging.getLogger(__name__)

ORACLE_LIMIT = 10_000
MIN_MC_SAMPLES = 10_000
RECHECK_TOL = 1e-4
SCHEME_INDEX = {"proposed": 0, "baseline_fixed": 1, "baseline_as": 2, "oracle": 3}


def solver_options(cfg: ExperimentConfig) -> SolverOptions:
    """Process settings with the per-experiment overrides applied."""
    options = SolverOptions.from_settings()
    overrides = {
        "backend": cfg.solver_backend,
        "feasibility_tol": cfg.solver_feasibility_tol,
        "psd_tol": cfg.solver_psd_tol,
    }
    return replace(options, **{k: v for k, v in overrides.items() if v is not None})


def ao_config(cfg: ExperimentConfig, seed: int) -> AOConfig:
    return AOConfig(
        penalties=cfg.ao_penalties,
        penalty_growth=cfg.ao_penalty_growth,
        tolerance=cfg.ao_tolerance,
        max_iterations=cfg.ao_max_iterations,
        restarts=cfg.ao_restarts,
        seed=seed,
        headroom=cfg.ao_headroom,
        repair_candidates=cfg.ao_repair_candidates,
    )


def draw_paths(cfg: ExperimentConfig, seed: int) -> PathSet:
    rng = np.random.default_rng(seed)
    distances = sample_user_distances(rng, cfg.n_users, cfg.user_distance_min, cfg.user_distance_max)
    return generate_paths(
        cfg.n_users, cfg.n_paths, cfg.reference_loss, cfg.pathloss_exponent, distances, rng
    )


def make_targets(cfg: ExperimentConfig) -> TargetSpec:
    targets = tuple(
        Target(
            elevation=theta,
            azimuth=phi,
            range_m=range_m,
            snr_threshold=cfg.sensing_snr,
            noise_var=cfg.echo_noise_var,
        )
        for theta, phi, range_m in zip(cfg.target_elevations, cfg.target_azimuths, cfg.target_ranges)
    )
    return TargetSpec(targets, mean_rcs=cfg.mean_rcs, outage=cfg.outage)


def _snapped(points: np.ndarray, d: float) -> np.ndarray:
    snapped = snap_to_lattice(points, d)
    if len(np.unique(np.round(snapped / d).astype(int), axis=0)) != len(points):
        raise InvalidParameterError(
            f"half-wavelength array collapses on a lattice of pitch {d}; use a finer grid.d"
        )
    return snapped


def fixed_array_positions(N: int, wavelength: float, d: float) -> np.ndarray:
    """λ/2 UPA of N elements (one row up to two antennas, two rows beyond)."""
    rows = 1 if N <= 2 else 2
    cols = math.ceil(N / rows)
    return _snapped(upa_positions(rows, cols, wavelength / 2.0)[:N], d)


def selection_array_positions(N: int, wavelength: float, d: float) -> np.ndarray:
    """The 2 x N λ/2 UPA the antenna-selection baseline picks N elements from."""
    return _snapped(upa_positions(2, N, wavelength / 2.0), d)


def oracle_assignments(M: int, N: int) -> int:
    return math.comb(M, N) * math.factorial(N)


@dataclass(frozen=True, eq=False)
class Instance:
    """One seeded draw seen by every scheme."""

    seed: int
    paths: PathSet
    proposed: Scenario
    fixed: Scenario
    selection: Scenario

    @property
    def mse_cap(self) -> float | None:
        return self.proposed.beam_grid.mse_cap


def _scenario(cfg: ExperimentConfig, aperture: Aperture, paths: PathSet, targets, beam_grid) -> Scenario:
    channel = channel_from_paths(aperture, paths, cfg.n_antennas, cfg.noise_var, cfg.sinr_threshold)
    return Scenario(
        aperture=aperture,
        channel=channel,
        targets=targets,
        beam_grid=beam_grid,
        reference_loss=cfg.reference_loss,
        d_min=cfg.d_min,
    )


def calibrate_at(scenario: Scenario, factor: float, options: SolverOptions | None = None) -> float | None:
    """MSE cap from the sensing-only fit with antenna n at candidate n."""
    return calibrate_mse_cap(
        scenario.pattern,
        scenario.pattern_responses[:, : scenario.N],
        scenario.target_responses[:, : scenario.N],
        scenario.target_thresholds,
        factor,
        options,
    )


def build_instance(
    cfg: ExperimentConfig,
    seed: int,
    paths: PathSet | None = None,
    mse_cap: float | None = None,
    calibrate: bool = True,
    options: SolverOptions | None = None,
) -> Instance:
    """Lattice, fixed-array and selection-array scenarios sharing one path draw.

    The MSE cap is, in order: ``mse_cap``, ``beam.mse_cap`` from the config,
    or calibrated at the fixed array when ``calibrate`` is set.
    """
    paths = paths if paths is not None else draw_paths(cfg, seed)
    targets = make_targets(cfg)
    beam_grid = make_beam_grid(
        targets,
        cfg.n_elevation,
        cfg.n_azimuth,
        cfg.half_width_elevation,
        cfg.half_width_azimuth,
    )
    lam = cfg.lam
    grid = build_grid(cfg.a, cfg.d, lam)
    fixed_array = Aperture(fixed_array_positions(cfg.n_antennas, lam, cfg.d), lam)
    fixed = _scenario(cfg, fixed_array, paths, targets, beam_grid)
    cap = mse_cap if mse_cap is not None else cfg.mse_cap
    if cap is None and calibrate:
        cap = calibrate_at(fixed, cfg.mse_factor, options)
    beam_grid = beam_grid.with_mse_cap(cap)
    selection = Aperture(selection_array_positions(cfg.n_antennas, lam, cfg.d), lam)
    return Instance(
        seed=seed,
        paths=paths,
        proposed=_scenario(cfg, grid, paths, targets, beam_grid),
        fixed=fixed.with_beam_grid(beam_grid),
        selection=_scenario(cfg, selection, paths, targets, beam_grid),
    )


@dataclass(frozen=True, eq=False)
class SchemeOutcome:
    scenario: Scenario
    placement: Placement | None
    solution: BeamformingSolution
    iterations: int = 0
    trace: AOTrace | None = None
    evaluated: int = 1

    @property
    def feasible(self) -> bool:
        return self.placement is not None and self.solution.feasible


def _best_of(
    scenario: Scenario,
    subsets: Sequence[Sequence[int]],
    options: SolverOptions | None,
    rng: np.random.Generator,
) -> SchemeOutcome:
    best: tuple[Placement, BeamformingSolution] | None = None
    evaluated = 0
    for subset in subsets:
        placement = Placement.from_indices(subset, scenario.M, scenario.d_min)
        if not check_min_distance(placement, scenario.distances).ok:
            continue
        evaluated += 1
        solution = beamform(scenario, placement, options, rng)
        if solution.feasible and (best is None or solution.power < best[1].power):
            best = (placement, solution)
    if best is None:
        return SchemeOutcome(scenario, None, BeamformingSolution.failed(SolveStatus.INFEASIBLE), evaluated=evaluated)
    return SchemeOutcome(scenario, best[0], best[1], evaluated=evaluated)


def baseline_fixed(
    instance: Instance, options: SolverOptions | None = None, rng: np.random.Generator | None = None
) -> SchemeOutcome:
    """Beams only, antennas on the λ/2 array."""
    scenario = instance.fixed
    return _best_of(scenario, [range(scenario.N)], options, rng or np.random.default_rng(instance.seed))


def baseline_antenna_selection(
    instance: Instance, options: SolverOptions | None = None, rng: np.random.Generator | None = None
) -> SchemeOutcome:
    """Best N-subset of the 2 x N λ/2 array."""
    scenario = instance.selection
    subsets = list(itertools.combinations(range(scenario.M), scenario.N))
    outcome = _best_of(scenario, subsets, options, rng or np.random.default_rng(instance.seed))
    logger.debug(
        "selection_enumerated",
        extra={"event": "selection_enumerated", "seed": instance.seed, "subsets": len(subsets),
               "feasible": outcome.feasible},
    )
    return outcome


def oracle_exhaustive(
    scenario: Scenario,
    options: SolverOptions | None = None,
    rng: np.random.Generator | None = None,
    limit: int = ORACLE_LIMIT,
) -> SchemeOutcome:
    """Beam problem on every distance-feasible unordered placement."""
    count = oracle_assignments(scenario.M, scenario.N)
    if count > limit:
        raise OracleSizeError(
            f"C({scenario.M}, {scenario.N}) * {scenario.N}! = {count} assignments exceeds {limit}"
        )
    subsets = itertools.combinations(range(scenario.M), scenario.N)
    return _best_of(scenario, list(subsets), options, rng or np.random.default_rng(0))


def lattice_placement(scenario: Scenario, positions: np.ndarray, tol: float = 1e-9) -> Placement | None:
    """The candidates sitting exactly at ``positions``, or None if one is off the lattice."""
    candidates = scenario.aperture.positions
    indices = []
    for point in np.atleast_2d(positions):
        gaps = np.linalg.norm(candidates - point, axis=1)
        index = int(np.argmin(gaps))
        if gaps[index] > tol:
            return None
        indices.append(index)
    placement = Placement.from_indices(indices, scenario.M, scenario.d_min)
    if len(set(indices)) != len(indices) or not check_min_distance(placement, scenario.distances).ok:
        return None
    return placement


def run_proposed(
    instance: Instance,
    cfg: ExperimentConfig,
    options: SolverOptions | None = None,
    warm: Sequence[np.ndarray] = (),
) -> SchemeOutcome:
    """AO over the lattice, warm-started from any given antenna positions that lie on it."""
    scenario = instance.proposed
    extras = [p for p in (lattice_placement(scenario, pos) for pos in warm) if p is not None]
    result = ao_run(scenario, ao_config(cfg, instance.seed), options, initial=extras)
    return SchemeOutcome(
        scenario,
        result.placement,
        result.solution,
        iterations=result.iterations,
        trace=result.trace,
    )


def empirical_outage(
    value: float,
    target: Target,
    mean_rcs: float,
    reference_loss: float,
    samples: int,
    rng: np.random.Generator,
) -> float:
    """Fraction of exponential RCS draws whose sensing SNR stays at or below the threshold."""
    rcs = sample_rcs(mean_rcs, rng, samples)
    snr = sensing_snr(rcs, reference_loss, target, value)
    return float(np.mean(snr <= target.snr_threshold))


def transmit_covariance(solution: BeamformingSolution) -> np.ndarray:
    beams = np.atleast_2d(solution.beams)
    return beams.T @ beams.conj() + solution.R


def target_values(scenario: Scenario, solution: BeamformingSolution) -> np.ndarray:
    """Beampattern value at every target for the committed beams."""
    steering = scenario.target_responses @ solution.selection.T
    return pattern_values(steering, transmit_covariance(solution))


def monte_carlo_outage(
    scenario: Scenario,
    solution: BeamformingSolution,
    samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-target empirical outage of a committed design."""
    if samples < MIN_MC_SAMPLES:
        raise InvalidParameterError(f"need at least {MIN_MC_SAMPLES} Monte Carlo samples, got {samples}")
    if not solution.feasible:
        raise InvalidParameterError("outage is only estimated for feasible designs")
    values = target_values(scenario, solution)
    return np.array(
        [
            empirical_outage(value, target, scenario.targets.mean_rcs, scenario.reference_loss, samples, rng)
            for value, target in zip(values, scenario.targets)
        ]
    )


@dataclass(frozen=True)
class RecheckReport:
    ok: bool
    violations: tuple[str, ...] = ()


def recheck(
    scenario: Scenario,
    solution: BeamformingSolution,
    placement: Placement | None = None,
    rel_tol: float = RECHECK_TOL,
) -> RecheckReport:
    """Re-evaluate every constraint from the committed beams, independently of the solver."""
    if not solution.feasible or solution.beams is None:
        return RecheckReport(False, ("not a feasible design",))
    violations: list[str] = []
    if placement is not None:
        report = check_min_distance(placement, scenario.distances)
        violations += [f"distance {n}-{m}" for n, m in report.violations]

    channel = scenario.channel
    B = expand_block_matrix(solution.selection)
    sinr = evaluate_sinr(channel.full, B, solution.beams, solution.R, channel.noise_var)
    for k, (value, threshold) in enumerate(zip(sinr, channel.sinr_threshold)):
        if value < threshold * (1.0 - rel_tol):
            violations.append(f"sinr_{k} {value:.6g} < {threshold:.6g}")

    for e, (value, threshold) in enumerate(zip(target_values(scenario, solution), scenario.target_thresholds)):
        if value < threshold * (1.0 - rel_tol):
            violations.append(f"chance_{e} {value:.6g} < {threshold:.6g}")

    cap = scenario.beam_grid.mse_cap
    if cap is not None:
        # the scaling the design was committed with, not a refit
        responses = scenario.concatenated(scenario.pattern_responses)
        covariance = transmit_covariance(solution)
        mse = beampattern_mse(solution.rho0, scenario.pattern, responses, [], covariance, B)
        if mse > cap * (1.0 + rel_tol):
            violations.append(f"pattern_mse {mse:.6g} > {cap:.6g}")

    power = float(np.sum(np.abs(solution.beams) ** 2) + np.trace(solution.R).real)
    if abs(power - solution.power) > rel_tol * max(solution.power, 1e-300):
        violations.append(f"power {power:.6g} != reported {solution.power:.6g}")
    return RecheckReport(not violations, tuple(violations))


@dataclass(frozen=True)
class ResultRecord:
    scheme: str
    seed: int
    sweep_name: str
    sweep_value: str
    power_w: float
    feasible: bool
    iterations: int = 0
    rank_one: tuple[bool, ...] = ()
    outage_hat: tuple[float, ...] = ()
    runtime_s: float = 0.0
    indices: tuple[int, ...] = ()
    cell: int = 0

    def __post_init__(self) -> None:
        if self.feasible and not self.power_w >= 0:
            raise InvalidParameterError(f"feasible record with power {self.power_w!r}")

    @property
    def power_dbm(self) -> float:
        return watts_to_dbm(self.power_w) if self.feasible else math.nan

    @property
    def rank_one_all(self) -> bool:
        return bool(self.rank_one) and all(self.rank_one)


def _record(
    scheme: str,
    outcome: SchemeOutcome,
    cfg: ExperimentConfig,
    seed: int,
    cell: int,
    sweep_value: str,
    runtime: float,
    rng: np.random.Generator,
) -> ResultRecord:
    feasible = outcome.feasible
    if feasible:
        report = recheck(outcome.scenario, outcome.solution, outcome.placement)
        if not report.ok:
            logger.warning(
                "recheck_failed",
                extra={"event": "recheck_failed", "seed": seed, "scheme": scheme,
                       "violations": list(report.violations)},
            )
            feasible = False
    E = outcome.scenario.E
    outage = (math.nan,) * E
    if feasible and E:
        outage = tuple(float(x) for x in monte_carlo_outage(outcome.scenario, outcome.solution, cfg.mc_samples, rng))
    return ResultRecord(
        scheme=scheme,
        seed=seed,
        sweep_name="" if cfg.sweep_axis == "none" else cfg.sweep_axis,
        sweep_value=sweep_value,
        power_w=outcome.solution.power if feasible else math.nan,
        feasible=feasible,
        iterations=outcome.iterations,
        rank_one=outcome.solution.rank_one if feasible else (),
        outage_hat=outage,
        runtime_s=runtime,
        indices=tuple(outcome.placement.indices) if outcome.placement is not None else (),
        cell=cell,
    )


@dataclass
class SeedResult:
    seed: int
    records: list[ResultRecord] = field(default_factory=list)
    traces: list[tuple[str, AOTrace]] = field(default_factory=list)
    timings: list[dict[str, Any]] = field(default_factory=list)


def _positions(outcome: SchemeOutcome) -> np.ndarray | None:
    if not outcome.feasible:
        return None
    return outcome.scenario.aperture.positions[list(outcome.placement.indices)]


def run_seed(cfg: ExperimentConfig, seed: int, options: SolverOptions | None = None) -> SeedResult:
    """Every sweep cell and scheme of one seed, hardest cell first.

    The MSE cap is calibrated once at the hardest cell. The proposed scheme of
    each cell is warm-started from the previous cell's placement and from the
    baseline arrays.
    """
    result = SeedResult(seed)
    points = cfg.sweep_points
    order = cfg.hardest_first()
    paths = draw_paths(cfg, seed)
    cap = cfg.mse_cap
    if cap is None:
        cap = build_instance(cfg.at(points[order[0]][1]), seed, paths, options=options).mse_cap

    previous: np.ndarray | None = None
    # baselines first so their placements can seed the proposed scheme
    ordered = sorted(cfg.schemes, key=lambda s: s == "proposed")
    for cell in order:
        display, raw = points[cell]
        cell_cfg = cfg.at(raw)
        instance = build_instance(cell_cfg, seed, paths, mse_cap=cap, calibrate=False, options=options)
        warm: list[np.ndarray] = [] if previous is None else [previous]
        for scheme in ordered:
            rng = np.random.default_rng([seed, cell, SCHEME_INDEX[scheme]])
            started = time.perf_counter()
            if scheme == "proposed":
                outcome = run_proposed(instance, cell_cfg, options, warm)
                if outcome.feasible:
                    previous = _positions(outcome)
                if outcome.trace is not None:
                    result.traces.append((display, outcome.trace))
            elif scheme == "baseline_fixed":
                outcome = baseline_fixed(instance, options, rng)
            elif scheme == "baseline_as":
                outcome = baseline_antenna_selection(instance, options, rng)
            else:
                outcome = oracle_exhaustive(instance.proposed, options, rng)
            elapsed = time.perf_counter() - started
            if scheme in ("baseline_fixed", "baseline_as") and outcome.feasible:
                warm.append(_positions(outcome))
            record = _record(scheme, outcome, cell_cfg, seed, cell, display, elapsed, rng)
            result.records.append(record)
            result.timings.append({"scheme": scheme, "sweep_value": display, "seconds": elapsed})
            logger.info(
                "scheme_finished",
                extra={"event": "scheme_finished", "seed": seed, "scheme": scheme,
                       "sweep_value": display, "feasible": record.feasible, "power_w": record.power_w},
            )
    return result


def _run_seed_task(args: tuple[ExperimentConfig, int, SolverOptions | None]) -> SeedResult:
    cfg, seed, options = args
    return run_seed(cfg, seed, options)


def check_oracle_size(cfg: ExperimentConfig, limit: int = ORACLE_LIMIT) -> None:
    """Refuse up front when any sweep cell is too large to enumerate."""
    for _, raw in cfg.sweep_points:
        cell = cfg.at(raw)
        M = build_grid(cell.a, cell.d, cell.lam).M
        if oracle_assignments(M, cell.n_antennas) > limit:
            raise OracleSizeError(
                f"oracle on M={M}, N={cell.n_antennas} needs {oracle_assignments(M, cell.n_antennas)} "
                f"assignments (limit {limit})"
            )


@dataclass
class SweepResult:
    records: list[ResultRecord]
    seeds: list[SeedResult]

    @property
    def flagged(self) -> list[ResultRecord]:
        return [r for r in self.records if not r.feasible]


def run_sweep(
    cfg: ExperimentConfig, workers: int = 1, options: SolverOptions | None = None
) -> SweepResult:
    """All seeds of ``cfg``; seeds fan out over a process pool, results merge in a fixed order."""
    if "oracle" in cfg.schemes:
        check_oracle_size(cfg)
    options = options or solver_options(cfg)
    tasks = [(cfg, seed, options) for seed in cfg.seeds]
    workers = max(1, min(workers, len(tasks)))
    logger.info(
        "sweep_started",
        extra={"event": "sweep_started", "seeds": len(tasks), "workers": workers,
               "axis": cfg.sweep_axis, "schemes": list(cfg.schemes)},
    )
    if workers == 1:
        seeds = [_run_seed_task(task) for task in tasks]
    else:
        with Pool(processes=workers) as pool:
            seeds = list(pool.imap(_run_seed_task, tasks))

    scheme_rank = {scheme: i for i, scheme in enumerate(cfg.schemes)}
    seed_rank = {seed: i for i, seed in enumerate(cfg.seeds)}
    records = sorted(
        (record for seed in seeds for record in seed.records),
        key=lambda r: (scheme_rank[r.scheme], seed_rank[r.seed], r.cell),
    )
    for record in records:
        INSTANCES_TOTAL.labels(scheme=record.scheme, outcome="feasible" if record.feasible else "flagged").inc()
    return SweepResult(records=records, seeds=seeds)


@dataclass(frozen=True)
class ChanceCheck:
    seed: int
    target: int
    value_w: float
    threshold_w: float
    closed_form: float
    empirical: float
    band: float

    @property
    def within_band(self) -> bool:
        return self.empirical <= self.band


def binomial_band(outage: float, samples: int, sigmas: float = 3.0) -> float:
    """Upper edge ν + k·sqrt(ν(1 - ν)/samples) of the Monte Carlo acceptance band."""
    return outage + sigmas * math.sqrt(outage * (1.0 - outage) / samples)


def verify_chance_seed(
    cfg: ExperimentConfig, seed: int, samples: int, options: SolverOptions | None = None
) -> list[ChanceCheck]:
    """Design one seed with the proposed scheme and compare closed-form and sampled outage."""
    instance = build_instance(cfg, seed, options=options)
    outcome = run_proposed(instance, cfg, options)
    if not outcome.feasible:
        logger.warning("chance_design_infeasible", extra={"event": "chance_design_infeasible", "seed": seed})
        return []
    scenario = outcome.scenario
    rng = np.random.default_rng([seed, 1])
    band = binomial_band(scenario.targets.outage, samples)
    checks = []
    for e, (value, target, threshold) in enumerate(
        zip(target_values(scenario, outcome.solution), scenario.targets, scenario.target_thresholds)
    ):
        checks.append(
            ChanceCheck(
                seed=seed,
                target=e + 1,
                value_w=float(value),
                threshold_w=float(threshold),
                closed_form=outage_probability(value, target, scenario.targets.mean_rcs, scenario.reference_loss),
                empirical=empirical_outage(
                    value, target, scenario.targets.mean_rcs, scenario.reference_loss, samples, rng
                ),
                band=band,
            )
        )
    return checks


def _verify_task(args: tuple[ExperimentConfig, int, int, SolverOptions | None]) -> list[ChanceCheck]:
    return verify_chance_seed(*args)


def verify_chance(
    cfg: ExperimentConfig, samples: int, workers: int = 1, options: SolverOptions | None = None
) -> list[ChanceCheck]:
    if samples < MIN_MC_SAMPLES:
        raise InvalidParameterError(f"need at least {MIN_MC_SAMPLES} Monte Carlo samples, got {samples}")
    options = options or solver_options(cfg)
    tasks = [(cfg, seed, samples, options) for seed in cfg.seeds]
    workers = max(1, min(workers, len(tasks)))
    if workers == 1:
        per_seed = [_verify_task(task) for task in tasks]
    else:
        with Pool(processes=workers) as pool:
            per_seed = list(pool.imap(_verify_task, tasks))
    return [check for checks in per_seed for check in checks]


@dataclass(frozen=True)
class OracleGap:
    seed: int
    sweep_value: str
    proposed_w: float
    oracle_w: float

    @property
    def relative_gap(self) -> float:
        return (self.proposed_w - self.oracle_w) / self.oracle_w

    def dominated(self, slack: float = 1e-5) -> bool:
        """The oracle is never beaten by more than ``slack`` (relative)."""
        return self.proposed_w >= self.oracle_w * (1.0 - slack)


def oracle_gaps(records: Sequence[ResultRecord]) -> list[OracleGap]:
    """Pair proposed and oracle records of the same seed and sweep value."""
    oracle = {(r.seed, r.sweep_value): r for r in records if r.scheme == "oracle" and r.feasible}
    gaps = []
    for r in records:
        match = oracle.get((r.seed, r.sweep_value))
        if r.scheme == "proposed" and r.feasible and match is not None:
            gaps.append(OracleGap(r.seed, r.sweep_value, r.power_w, match.power_w))
    return gaps
