"""Covariance design for a fixed placement (semidefinite relaxation of the beam problem).

Variables are expressed in a per-instance power unit so that the solver sees
numbers of order one whatever the channel gains; every value leaving this
module is in watts again.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from app.metrics import RANK_ONE_FALLBACKS_TOTAL

from .conic import (
    Affine,
    ConicProgram,
    Inequality,
    SecondOrderCone,
    SolverOptions,
    SolveStatus,
    Variable,
    VarKind,
    extract_rank_one,
    solve,
)
from .errors import DimensionMismatchError
from .geometry import Placement
from .scenario import Scenario
from .sensing import pattern_values

logger = logging.getLogger(__name__)

RANDOMIZATION_DRAWS = 200


@dataclass(frozen=True, eq=False)
class BeamformingSolution:
    status: SolveStatus
    W: tuple[np.ndarray, ...] = ()
    R: np.ndarray | None = None
    rho0: float = 0.0
    beams: np.ndarray | None = None
    sensing_beams: tuple[np.ndarray, ...] = ()
    rank_one: tuple[bool, ...] = ()
    used_fallback: bool = False
    fallback_failed: bool = False
    power: float = math.inf
    relaxed_power: float = math.inf
    selection: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.OPTIMAL and not self.fallback_failed

    @property
    def rank_one_all(self) -> bool:
        return bool(self.rank_one) and all(self.rank_one)

    @classmethod
    def failed(cls, status: SolveStatus, selection: np.ndarray | None = None) -> "BeamformingSolution":
        return cls(status=status, selection=selection)


@dataclass(frozen=True, eq=False)
class P1Program:
    """An assembled beam subproblem plus what is needed to read its solution back."""

    program: ConicProgram
    unit: float
    scenario: Scenario
    selection: np.ndarray
    effective: np.ndarray
    steering: np.ndarray
    target_steering: np.ndarray


def steering_vectors(responses: np.ndarray, selection: np.ndarray) -> np.ndarray:
    """B^T â for each row of ``responses`` (P, M) given (N, M) selection weights."""
    return np.atleast_2d(responses) @ selection.T


def power_unit(effective: np.ndarray, scenario: Scenario) -> float:
    gains = np.maximum(np.sum(np.abs(effective) ** 2, axis=1), 1e-300)
    unit = float(np.max(scenario.channel.sinr_threshold * scenario.channel.noise_var / gains))
    if scenario.E:
        unit = max(unit, float(np.max(scenario.target_thresholds)) / scenario.N)
    return unit


def assemble_p1(scenario: Scenario, placement: Placement | np.ndarray) -> P1Program:
    """SDR of the beam problem for fixed selection weights."""
    selection = scenario.selection(placement)
    channel = scenario.channel
    N, K = scenario.N, scenario.K
    effective = channel.per_position @ selection.T
    steering = steering_vectors(scenario.pattern_responses, selection)
    target_steering = steering_vectors(scenario.target_responses, selection)
    unit = power_unit(effective, scenario)

    W = [Variable(f"W{k}", (N, N), VarKind.HERMITIAN, psd=True) for k in range(K)]
    R = Variable("R", (N, N), VarKind.HERMITIAN, psd=True)
    covariances = [*W, R]
    mse_cap = scenario.beam_grid.mse_cap
    rho0 = Variable("rho0", (), VarKind.REAL, nonneg=True) if mse_cap is not None else None

    constraints = []
    for k in range(K):
        h = effective[k].conj()[None, :]
        gamma = float(channel.sinr_threshold[k])
        row = Affine.quadratic_forms(W[k], h)
        for i, cov in enumerate(covariances):
            if i != k:
                row = row - gamma * Affine.quadratic_forms(cov, h)
        row = row - gamma * float(channel.noise_var[k]) / unit
        constraints.append(Inequality(row.row_normalized(), label=f"sinr_{k}"))

    for e in range(scenario.E):
        a = target_steering[e][None, :]
        row = sum((Affine.quadratic_forms(cov, a) for cov in covariances), Affine.zeros(1))
        row = row - float(scenario.target_thresholds[e]) / unit
        constraints.append(Inequality(row.row_normalized(), label=f"chance_{e}"))

    if rho0 is not None:
        P = steering.shape[0]
        pattern = Affine.linear(rho0, scenario.pattern.reshape(-1, 1))
        coef = Affine.quadratic_forms(covariances[0], steering).terms[covariances[0].name][1]
        synthesized = sum((Affine.linear(cov, coef) for cov in covariances), Affine.zeros(P))
        residual = (pattern - synthesized) * (1.0 / math.sqrt(P))
        bound = Affine(np.array([math.sqrt(mse_cap) / unit]))
        constraints.append(SecondOrderCone(residual, bound, label="pattern_mse"))

    objective = sum((Affine.trace(cov) for cov in covariances), Affine.zeros(1))
    variables = tuple(covariances) + ((rho0,) if rho0 is not None else ())
    program = ConicProgram(variables, objective, tuple(constraints), name="p1")
    return P1Program(
        program=program,
        unit=unit,
        scenario=scenario,
        selection=selection,
        effective=effective,
        steering=steering,
        target_steering=target_steering,
    )


def extract_sensing_beams(R: np.ndarray, tol: float = 1e-9) -> list[np.ndarray]:
    """Beams v_n = sqrt(λ_n) u_n over the non-negligible eigenvalues of R."""
    R = (np.asarray(R) + np.asarray(R).conj().T) / 2.0
    eigenvalues, eigenvectors = np.linalg.eigh(R)
    top = float(eigenvalues[-1]) if eigenvalues.size else 0.0
    if top <= 0:
        return []
    beams = []
    for lam, u in zip(eigenvalues[::-1], eigenvectors[:, ::-1].T):
        if lam <= tol * top:
            break
        pivot = u[np.argmax(np.abs(u))]
        beams.append(math.sqrt(lam) * u * np.exp(-1j * np.angle(pivot)))
    return beams


def evaluate_sinr(
    H_hat: np.ndarray,
    B: np.ndarray,
    beams: np.ndarray,
    R: np.ndarray,
    noise_var: np.ndarray,
) -> np.ndarray:
    """Per-user SINR of a rank-one design; ``H_hat`` is K x MN and ``B`` MN x N."""
    H_hat = np.atleast_2d(H_hat)
    B = np.asarray(B)
    if H_hat.shape[1] != B.shape[0]:
        raise DimensionMismatchError(f"Ĥ {H_hat.shape} does not match B {B.shape}")
    H = H_hat @ B
    gains = np.abs(H @ np.atleast_2d(beams).T) ** 2  # [k, i] = |h_k w_i|^2
    sensing = np.real(np.einsum("ki,ij,kj->k", H, R, H.conj()))
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (interference + sensing + np.asarray(noise_var, dtype=float))


def _fit_rho0(pattern: np.ndarray, synthesized: np.ndarray) -> float:
    energy = float(pattern @ pattern)
    return max(0.0, float(pattern @ synthesized) / energy) if energy > 0 else 0.0


def _residual(pattern: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Part of ``values`` left after the least-squares fit rho0 * pattern."""
    energy = float(pattern @ pattern)
    if energy <= 0:
        return values
    return values - (float(pattern @ values) / energy) * pattern


def _mse_interval(x: np.ndarray, y: np.ndarray, budget: float) -> tuple[float, float] | None:
    """Interval of c with ||c x + y||^2 <= budget."""
    a, b, d = float(x @ x), float(x @ y), float(y @ y) - budget
    if a <= 0:
        return (-math.inf, math.inf) if d <= 0 else None
    disc = b * b - a * d
    if disc < 0:
        return None
    root = math.sqrt(disc)
    return (-b - root) / a, (-b + root) / a


def _rescale(p1: P1Program, beams: np.ndarray, R: np.ndarray) -> tuple[float, float] | None:
    """Smallest common scale c on the communication beams meeting every constraint, with rho0."""
    scenario = p1.scenario
    channel = scenario.channel
    gains = np.abs(p1.effective @ beams.T) ** 2
    sensing = np.real(np.einsum("ki,ij,kj->k", p1.effective, R, p1.effective.conj()))
    lower = 0.0
    for k in range(scenario.K):
        gamma = channel.sinr_threshold[k]
        margin = gains[k, k] - gamma * (gains[k].sum() - gains[k, k])
        if margin <= 0:
            return None
        lower = max(lower, gamma * (sensing[k] + channel.noise_var[k]) / margin)
    comm_at_targets = pattern_values(p1.target_steering, beams.T @ beams.conj())
    radar_at_targets = pattern_values(p1.target_steering, R)
    for e in range(scenario.E):
        deficit = scenario.target_thresholds[e] - radar_at_targets[e]
        if deficit > 0:
            if comm_at_targets[e] <= 0:
                return None
            lower = max(lower, deficit / comm_at_targets[e])

    cap = scenario.beam_grid.mse_cap
    if cap is None:
        return lower, 0.0
    pattern = scenario.pattern
    comm = pattern_values(p1.steering, beams.T @ beams.conj())
    radar = pattern_values(p1.steering, R)
    interval = _mse_interval(_residual(pattern, comm), _residual(pattern, radar), cap * pattern.size)
    if interval is None or interval[1] < lower:
        return None
    c = max(lower, interval[0])
    return c, _fit_rho0(pattern, c * comm + radar)


def _randomize(
    p1: P1Program,
    W: list[np.ndarray],
    R: np.ndarray,
    beams: np.ndarray,
    rank_one: list[bool],
    rng: np.random.Generator,
    draws: int,
):
    """Gaussian randomization over the users whose covariance is not rank one."""
    N = p1.scenario.N
    factors = []
    for k, Wk in enumerate(W):
        lam, U = np.linalg.eigh(Wk)
        factors.append(U * np.sqrt(np.clip(lam, 0.0, None)))
    best = None
    for _ in range(draws):
        candidate = beams.copy()
        for k, flag in enumerate(rank_one):
            if not flag:
                z = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / math.sqrt(2.0)
                candidate[k] = factors[k] @ z
        scaled = _rescale(p1, candidate, R)
        if scaled is None:
            continue
        c, rho0 = scaled
        power = c * float(np.sum(np.abs(candidate) ** 2)) + float(np.trace(R).real)
        if best is None or power < best[0]:
            best = (power, math.sqrt(c) * candidate, rho0)
    return best


def solve_p1(
    p1: P1Program,
    options: SolverOptions | None = None,
    rng: np.random.Generator | None = None,
    draws: int = RANDOMIZATION_DRAWS,
    tol_ratio: float = 1e-6,
) -> BeamformingSolution:
    """Solve the relaxation, extract beams and fall back to randomization if needed."""
    result = solve(p1.program, options)
    if not result.ok:
        logger.info(
            "p1_not_optimal", extra={"event": "p1_not_optimal", "status": result.status.value}
        )
        return BeamformingSolution.failed(result.status, p1.selection)

    K, unit = p1.scenario.K, p1.unit
    W = [result.values[f"W{k}"] * unit for k in range(K)]
    R = result.values["R"] * unit
    rho0 = float(result.values["rho0"]) * unit if "rho0" in result.values else 0.0
    relaxed_power = result.objective * unit

    extracted = [extract_rank_one(Wk, tol_ratio) for Wk in W]
    beams = np.array([w for w, _ in extracted]).reshape(K, -1)
    rank_one = [flag for _, flag in extracted]
    used_fallback, fallback_failed = False, False
    power = relaxed_power

    if not all(rank_one):
        used_fallback = True
        RANK_ONE_FALLBACKS_TOTAL.inc()
        rng = rng if rng is not None else np.random.default_rng(0)
        best = _randomize(p1, W, R, beams, rank_one, rng, draws)
        if best is None:
            fallback_failed = True
            logger.warning("rank_one_fallback_failed", extra={"event": "rank_one_fallback_failed"})
        else:
            power, beams, rho0 = best
            W = [np.outer(w, w.conj()) for w in beams]
        logger.info(
            "rank_one_fallback",
            extra={"event": "rank_one_fallback", "users": [k for k, f in enumerate(rank_one) if not f],
                   "recovered": not fallback_failed},
        )

    return BeamformingSolution(
        status=result.status,
        W=tuple(W),
        R=R,
        rho0=rho0,
        beams=beams,
        sensing_beams=tuple(extract_sensing_beams(R)),
        rank_one=tuple(rank_one),
        used_fallback=used_fallback,
        fallback_failed=fallback_failed,
        power=float(power),
        relaxed_power=float(relaxed_power),
        selection=p1.selection,
    )


def beamform(
    scenario: Scenario,
    placement: Placement | np.ndarray,
    options: SolverOptions | None = None,
    rng: np.random.Generator | None = None,
) -> BeamformingSolution:
    return solve_p1(assemble_p1(scenario, placement), options, rng)
