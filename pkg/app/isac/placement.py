"""Antenna position optimization for fixed beams, and the alternating driver around it.

The position subproblem works on the relaxed block selection matrix B. The
minimum-distance rule enters through Glover's linearization of the
cross-antenna products, the bilinear F_k = B W_k B^T through Schur-complement
LMIs plus trace penalties, and the binary requirement through penalized,
linearized b - b^2 terms.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from app.metrics import AO_ITERATIONS

from .beamforming import BeamformingSolution, beamform
from .conic import (
    Affine,
    ConicProgram,
    Constraint,
    Equality,
    Inequality,
    LinearMatrixInequality,
    MatrixAffine,
    SecondOrderCone,
    SolverOptions,
    SolveStatus,
    Variable,
    VarKind,
    solve,
)
from .errors import DimensionMismatchError, InvalidParameterError
from .geometry import (
    Placement,
    check_min_distance,
    collapse_block_matrix,
    expand_block_matrix,
    farthest_point_placement,
    random_placement,
)
from .scenario import Scenario

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AOConfig:
    # (tau1, tau2) weight the consistency penalties, (tau3, tau4) the binary ones
    penalties: tuple[float, float, float, float] = (10.0, 10.0, 0.1, 0.1)
    penalty_growth: float = 2.0
    penalty_cap: float = 1e6
    stall_window: int = 3
    stall_ratio: float = 1e-3
    tolerance: float = 1e-3
    max_iterations: int = 30
    restarts: int = 2
    seed: int = 0
    rounding_tol: float = 1e-3
    headroom: bool = True
    max_headroom: float = 0.9
    repair_candidates: int = 5
    monotone_slack: float = 1e-6

    def __post_init__(self) -> None:
        object.__setattr__(self, "penalties", tuple(float(t) for t in self.penalties))
        if len(self.penalties) != 4 or min(self.penalties) <= 0:
            raise InvalidParameterError("need four positive penalty factors")
        if self.tolerance <= 0:
            raise InvalidParameterError("AO tolerance must be positive")
        if self.max_iterations < 1:
            raise InvalidParameterError("AO needs at least one iteration")
        if self.restarts < 0 or self.repair_candidates < 1:
            raise InvalidParameterError("restarts must be >= 0 and repair candidates >= 1")
        if self.penalty_growth <= 1 or self.penalty_cap < 1:
            raise InvalidParameterError("penalty growth must exceed 1 and the cap be at least 1")
        if not 0.0 <= self.max_headroom < 1.0:
            raise InvalidParameterError("headroom bound must lie in [0, 1)")


def antenna_pairs(N: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(N), 2))


@dataclass(frozen=True, eq=False)
class LinearizationPoint:
    """Iterate (B^t, phi^t) around which the concave parts are linearized."""

    selection: np.ndarray
    phi: np.ndarray

    def __post_init__(self) -> None:
        N, M = self.selection.shape
        if self.phi.shape != (len(antenna_pairs(N)), M, M):
            raise DimensionMismatchError(f"phi {self.phi.shape} does not match N={N}, M={M}")
        if np.any(self.selection < -1e-9) or np.any(self.selection > 1 + 1e-9):
            raise InvalidParameterError("linearization point must lie in [0, 1]")

    @classmethod
    def from_selection(cls, selection: np.ndarray, phi: np.ndarray | None = None) -> "LinearizationPoint":
        selection = np.clip(np.atleast_2d(selection), 0.0, 1.0)
        if phi is None:
            phi = pair_products(selection)
        return cls(selection, np.clip(phi, 0.0, 1.0))

    @property
    def B(self) -> np.ndarray:
        return expand_block_matrix(self.selection)


def pair_products(selection: np.ndarray) -> np.ndarray:
    """phi[p, i, j] = b_n[i] b_n'[j] for every antenna pair p = (n, n')."""
    N, M = selection.shape
    pairs = antenna_pairs(N)
    if not pairs:
        return np.zeros((0, M, M))
    return np.stack([np.outer(selection[n], selection[m]) for n, m in pairs])


def binary_violation(selection: np.ndarray) -> float:
    """Σ (b - b^2), zero exactly at binary points."""
    b = np.asarray(selection, dtype=float)
    return float(np.sum(b - b * b))


def _entry_index(n: int, i: int, M: int, N: int) -> int:
    """Flat row-major index of b_n[i] inside vec(B)."""
    return (n * M + i) * N + n


def selection_indices(N: int, M: int) -> np.ndarray:
    """(N, M) flat indices of the active entries of B."""
    return np.array([[_entry_index(n, i, M, N) for i in range(M)] for n in range(N)])


def placement_variables(N: int, M: int) -> tuple[Variable, Variable]:
    B = Variable("B", (M * N, N), VarKind.REAL, nonneg=True)
    phi = Variable("phi", (len(antenna_pairs(N)) * M * M,), VarKind.REAL, nonneg=True)
    return B, phi


def glover_constraints(
    N: int, M: int, D: np.ndarray, d_min: float, B: Variable, phi: Variable
) -> list[Constraint]:
    """Linear constraints replacing b_n^T D b_n' >= D_min for every antenna pair.

    For pair p = (n, n'): Σ_ij D_ij phi_pij >= D_min, phi_pij <= b_n[i],
    phi_pij <= b_n'[j] and phi_pij >= b_n[i] + b_n'[j] - 1.
    """
    if D.shape != (M, M):
        raise DimensionMismatchError(f"distance matrix {D.shape} does not match M={M}")
    pairs = antenna_pairs(N)
    active = selection_indices(N, M)
    MM = M * M
    ii, jj = np.divmod(np.arange(MM), M)
    constraints: list[Constraint] = []
    for p, (n, m) in enumerate(pairs):
        phi_cols = p * MM + np.arange(MM)
        rows = np.arange(MM)
        select_phi = sp.csr_matrix((np.ones(MM), (rows, phi_cols)), shape=(MM, phi.size))
        first = sp.csr_matrix((np.ones(MM), (rows, active[n, ii])), shape=(MM, B.size))
        second = sp.csr_matrix((np.ones(MM), (rows, active[m, jj])), shape=(MM, B.size))
        label = f"glover_{n}_{m}"
        if d_min > 0:
            spread = sp.csr_matrix(
                (D.ravel() / d_min, (np.zeros(MM, dtype=int), phi_cols)), shape=(1, phi.size)
            )
            constraints.append(Inequality(Affine.linear(phi, spread, -1.0), label=f"{label}_distance"))
        constraints.append(
            Inequality(Affine(np.zeros(MM), {B.name: (B, first), phi.name: (phi, -select_phi)}),
                       label=f"{label}_upper_first")
        )
        constraints.append(
            Inequality(Affine(np.zeros(MM), {B.name: (B, second), phi.name: (phi, -select_phi)}),
                       label=f"{label}_upper_second")
        )
        constraints.append(
            Inequality(Affine(np.ones(MM), {B.name: (B, -(first + second)), phi.name: (phi, select_phi)}),
                       label=f"{label}_lower")
        )
    return constraints


def glover_feasible(
    selection: np.ndarray, phi: np.ndarray, D: np.ndarray, d_min: float, tol: float = 1e-9
) -> bool:
    """Numeric check of the linearized distance constraints at (b, phi)."""
    selection = np.atleast_2d(selection)
    for p, (n, m) in enumerate(antenna_pairs(selection.shape[0])):
        block = phi[p]
        bn = selection[n][:, None]
        bm = selection[m][None, :]
        if np.any(block > bn + tol) or np.any(block > bm + tol):
            return False
        if np.any(block < bn + bm - 1 - tol) or np.any(block < -tol):
            return False
        if float(np.sum(D * block)) < d_min - tol:
            return False
    return True


@dataclass(frozen=True, eq=False)
class AuxiliaryBlocks:
    F: tuple[Variable, ...]
    Y: Variable
    S: tuple[Variable, ...]
    T: tuple[Variable, ...]
    U: Variable
    V: Variable

    @classmethod
    def declare(cls, K: int, size: int) -> "AuxiliaryBlocks":
        square = (size, size)
        return cls(
            F=tuple(Variable(f"F{k}", square, VarKind.HERMITIAN, psd=True) for k in range(K)),
            Y=Variable("Y", square, VarKind.HERMITIAN, psd=True),
            S=tuple(Variable(f"S{k}", square, VarKind.HERMITIAN) for k in range(K)),
            T=tuple(Variable(f"T{k}", square, VarKind.SYMMETRIC) for k in range(K)),
            U=Variable("U", square, VarKind.HERMITIAN),
            V=Variable("V", square, VarKind.SYMMETRIC),
        )

    @property
    def variables(self) -> tuple[Variable, ...]:
        return (*self.F, self.Y, *self.S, *self.T, self.U, self.V)


def schur_lmi(B: Variable, Q: np.ndarray, F: Variable, S: Variable, T: Variable, label: str):
    """[[S, F, BQ], [F^H, T, B], [Q^H B^T, B^T, I]] ⪰ 0."""
    MN, N = B.shape
    if Q.shape != (N, N) or F.shape != (MN, MN):
        raise DimensionMismatchError(f"{label}: Q {Q.shape}, F {F.shape} do not match B {B.shape}")
    b = MatrixAffine.of(B)
    bq = b @ Q
    f = MatrixAffine.of(F)
    blocks = (
        (MatrixAffine.of(S), f, bq),
        (f.H, MatrixAffine.of(T), b),
        (bq.H, b.H, MatrixAffine.fixed(np.eye(N))),
    )
    return LinearMatrixInequality(blocks, label=label)


def schur_lmi_blocks(
    B: Variable, W: Sequence[np.ndarray], R: np.ndarray, aux: AuxiliaryBlocks
) -> list[LinearMatrixInequality]:
    """One LMI per user covariance and one for the sensing covariance."""
    if len(W) != len(aux.F):
        raise DimensionMismatchError(f"{len(W)} covariances for {len(aux.F)} F blocks")
    lmis = [schur_lmi(B, Wk, aux.F[k], aux.S[k], aux.T[k], f"schur_comm_{k}") for k, Wk in enumerate(W)]
    lmis.append(schur_lmi(B, R, aux.Y, aux.U, aux.V, "schur_radar"))
    return lmis


@dataclass(frozen=True, eq=False)
class TaylorTerms:
    comm: Affine
    radar: Affine
    binary: Affine
    pairs: Affine

    def values(self, values: dict[str, np.ndarray]) -> tuple[float, float, float, float]:
        return tuple(float(term.evaluate(values)[0]) for term in (self.comm, self.radar, self.binary, self.pairs))


def _linearized_trace(B: Variable, B_t: np.ndarray, Q: np.ndarray) -> Affine:
    """First-order expansion of tr(B Q B^T) at B_t: <2 B_t Re Q, B> - tr(B_t Q B_t^T)."""
    gradient = 2.0 * B_t @ Q.real
    at_point = float(np.real(np.trace(B_t @ Q @ B_t.T)))
    return Affine.linear(B, gradient.reshape(1, -1), -at_point)


def taylor_penalty_terms(
    point: LinearizationPoint,
    W: Sequence[np.ndarray],
    R: np.ndarray,
    B: Variable,
    phi: Variable,
    aux: AuxiliaryBlocks,
) -> TaylorTerms:
    """Affine penalty terms: Σ_k tr S_k - g_1k(B), tr U - g_2(B), and the two binary terms."""
    B_t = point.B
    comm = Affine.zeros(1)
    for k, Wk in enumerate(W):
        comm = comm + Affine.trace(aux.S[k]) - _linearized_trace(B, B_t, Wk @ Wk.conj().T)
    radar = Affine.trace(aux.U) - _linearized_trace(B, B_t, R @ R.conj().T)

    N, M = point.selection.shape
    b_t = point.selection
    binary_coef = np.zeros((1, B.size))
    binary_coef[0, selection_indices(N, M).ravel()] = (1.0 - 2.0 * b_t).ravel()
    binary = Affine.linear(B, binary_coef, float(np.sum(b_t * b_t)))

    phi_t = point.phi.ravel()
    if phi.size:
        pairs = Affine.linear(phi, (1.0 - 2.0 * phi_t).reshape(1, -1), float(phi_t @ phi_t))
    else:
        pairs = Affine.zeros(1)
    return TaylorTerms(comm=comm, radar=radar, binary=binary, pairs=pairs)


@dataclass(frozen=True, eq=False)
class P2Program:
    program: ConicProgram
    unit: float
    point: LinearizationPoint
    taus: tuple[float, float, float, float]
    B: Variable
    phi: Variable
    headroom: Variable | None
    aux: AuxiliaryBlocks
    terms: TaylorTerms
    W: tuple[np.ndarray, ...]
    R: np.ndarray


@dataclass(frozen=True, eq=False)
class P2Step:
    status: SolveStatus
    selection: np.ndarray | None = None
    phi: np.ndarray | None = None
    headroom: float = 0.0
    penalties: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    consistency: tuple[float, ...] = ()


def _user_rows(vectors: np.ndarray, variables: Sequence[Variable]) -> list[Affine]:
    """Per-variable quadratic forms x^H X x sharing one coefficient matrix."""
    coef = Affine.quadratic_forms(variables[0], vectors).terms[variables[0].name][1]
    return [Affine.linear(var, coef) for var in variables]


def assemble_p2(
    scenario: Scenario,
    beams: BeamformingSolution,
    point: LinearizationPoint,
    taus: Sequence[float],
    cfg: AOConfig,
) -> P2Program:
    """Position subproblem for fixed covariances, normalized so the current power is 1."""
    N, M, K = scenario.N, scenario.M, scenario.K
    MN = M * N
    unit = beams.power
    W = tuple(Wk / unit for Wk in beams.W)
    R = beams.R / unit
    channel = scenario.channel

    B, phi = placement_variables(N, M)
    aux = AuxiliaryBlocks.declare(K, MN)
    headroom = Variable("headroom", (), VarKind.REAL, nonneg=True) if cfg.headroom else None
    covariances = [*aux.F, aux.Y]
    one = np.ones((1, 1))

    def with_headroom(row: Affine, rhs: float) -> Affine:
        # row >= rhs * (1 + s)
        row = row - rhs
        if headroom is not None:
            row = row - Affine.linear(headroom, one * rhs)
        return row

    constraints: list[Constraint] = []
    for k in range(K):
        gamma = float(channel.sinr_threshold[k])
        rows = _user_rows(channel.full[k].conj()[None, :], covariances)
        row = rows[k]
        for i, other in enumerate(rows):
            if i != k:
                row = row - gamma * other
        row = with_headroom(row, gamma * float(channel.noise_var[k]) / unit)
        constraints.append(Inequality(row.row_normalized(), label=f"sinr_{k}"))

    targets_full = scenario.concatenated(scenario.target_responses)
    for e in range(scenario.E):
        row = sum(_user_rows(targets_full[e][None, :], covariances), Affine.zeros(1))
        row = with_headroom(row, float(scenario.target_thresholds[e]) / unit)
        constraints.append(Inequality(row.row_normalized(), label=f"chance_{e}"))

    mse_cap = scenario.beam_grid.mse_cap
    if mse_cap is not None:
        responses = scenario.concatenated(scenario.pattern_responses)
        P = responses.shape[0]
        synthesized = sum(_user_rows(responses, covariances), Affine.zeros(P))
        residual = (Affine(scenario.pattern * (beams.rho0 / unit)) - synthesized) * (1.0 / math.sqrt(P))
        bound = Affine(np.array([math.sqrt(mse_cap) / unit]))
        constraints.append(SecondOrderCone(residual, bound, label="pattern_mse"))

    active = selection_indices(N, M)
    sums = sp.csr_matrix((np.ones(N * M), (np.repeat(np.arange(N), M), active.ravel())), shape=(N, B.size))
    constraints.append(Equality(Affine.linear(B, sums, -1.0), label="one_position_each"))
    off_block = np.setdiff1d(np.arange(B.size), active.ravel())
    if off_block.size:
        constraints.append(Equality(Affine.entries(B, off_block), label="block_structure"))
    constraints.append(Inequality(1.0 - Affine.entries(B, active.ravel()), label="selection_box"))
    if phi.size:
        constraints.append(Inequality(1.0 - Affine.entries(phi, np.arange(phi.size)), label="pair_box"))
    constraints += glover_constraints(N, M, scenario.distances, scenario.d_min, B, phi)
    constraints += schur_lmi_blocks(B, W, R, aux)
    for T in (*aux.T, aux.V):
        constraints.append(Inequality(2.0 * N - Affine.trace(T), label=f"{T.name}_trace"))
    if headroom is not None:
        constraints.append(
            Inequality(cfg.max_headroom - Affine.linear(headroom, one), label="headroom_box")
        )

    terms = taylor_penalty_terms(point, W, R, B, phi, aux)
    tau1, tau2, tau3, tau4 = (float(t) for t in taus)
    objective = Affine(np.ones(1))
    if headroom is not None:
        objective = objective - Affine.linear(headroom, one)
    objective = objective + tau1 * terms.comm + tau2 * terms.radar + tau3 * terms.binary + tau4 * terms.pairs

    variables = (B, phi, *aux.variables) + ((headroom,) if headroom is not None else ())
    program = ConicProgram(variables, objective, tuple(constraints), name="p2")
    return P2Program(
        program=program,
        unit=unit,
        point=point,
        taus=(tau1, tau2, tau3, tau4),
        B=B,
        phi=phi,
        headroom=headroom,
        aux=aux,
        terms=terms,
        W=W,
        R=R,
    )


def solve_p2(p2: P2Program, options: SolverOptions | None = None) -> P2Step:
    result = solve(p2.program, options)
    if not result.ok:
        return P2Step(status=result.status)
    values = result.values
    N = p2.B.shape[1]
    B_value = np.clip(values[p2.B.name], 0.0, 1.0)
    selection = collapse_block_matrix(B_value, N)
    selection = selection / np.maximum(selection.sum(axis=1, keepdims=True), 1e-12)
    M = selection.shape[1]
    phi = np.clip(values[p2.phi.name], 0.0, 1.0).reshape(-1, M, M)
    Bx = expand_block_matrix(selection)
    consistency = tuple(
        float(np.linalg.norm(values[F.name] - Bx @ Wk @ Bx.T))
        for F, Wk in zip((*p2.aux.F, p2.aux.Y), (*p2.W, p2.R))
    )
    return P2Step(
        status=result.status,
        selection=selection,
        phi=phi,
        headroom=float(values[p2.headroom.name]) if p2.headroom is not None else 0.0,
        penalties=p2.terms.values(values),
        consistency=consistency,
    )


@dataclass(frozen=True)
class AOTraceRow:
    iteration: int
    objective_watts: float
    binary_violation: float
    penalty_comm: float
    penalty_radar: float
    penalty_binary: float
    penalty_pairs: float
    tau1: float
    tau2: float
    tau3: float
    tau4: float
    solver_status: str
    accepted: bool


@dataclass
class AOTrace:
    rows: list[AOTraceRow] = field(default_factory=list)

    def record(self, **kwargs) -> None:
        self.rows.append(AOTraceRow(iteration=len(self.rows), **kwargs))

    @property
    def objectives(self) -> list[float]:
        return [row.objective_watts for row in self.rows]

    def is_monotone(self, slack: float = 1e-6) -> bool:
        values = self.objectives
        return all(b <= a + slack * max(1.0, abs(a)) for a, b in zip(values, values[1:]))


@dataclass(frozen=True, eq=False)
class AOResult:
    placement: Placement | None
    solution: BeamformingSolution
    trace: AOTrace
    iterations: int = 0
    converged: bool = False
    last_selection: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.placement is not None and self.solution.feasible

    @property
    def power(self) -> float:
        return self.solution.power if self.feasible else math.inf


def _distinct_and_spread(indices: Sequence[int], D: np.ndarray, d_min: float) -> bool:
    if len(set(indices)) != len(indices):
        return False
    return all(D[i, j] >= d_min for i, j in itertools.combinations(indices, 2))


def repair_rounding(selection: np.ndarray, D: np.ndarray, d_min: float) -> list[int] | None:
    """Per-antenna argmax, then move the less confident antenna of each violating pair."""
    N, M = selection.shape
    indices = [int(np.argmax(row)) for row in selection]
    for _ in range(N * M):
        violation = next(
            (
                (n, m)
                for n, m in antenna_pairs(N)
                if indices[n] == indices[m] or D[indices[n], indices[m]] < d_min
            ),
            None,
        )
        if violation is None:
            return indices
        n, m = violation
        mover = n if selection[n, indices[n]] <= selection[m, indices[m]] else m
        others = [indices[o] for o in range(N) if o != mover]
        options = [
            int(c)
            for c in np.argsort(-selection[mover], kind="stable")
            if int(c) not in others and all(D[c, o] >= d_min for o in others)
        ]
        if not options:
            return None
        indices[mover] = options[0]
    return None


def rounding_candidates(
    selection: np.ndarray, D: np.ndarray, d_min: float, limit: int = 5
) -> list[list[int]]:
    """Repaired argmax first, then distance-feasible assignments by decreasing total weight."""
    N, M = selection.shape
    candidates: list[list[int]] = []
    seen: set[tuple[int, ...]] = set()

    def push(indices: Sequence[int]) -> None:
        key = tuple(sorted(indices))
        if key not in seen:
            seen.add(key)
            candidates.append(list(indices))

    primary = repair_rounding(selection, D, d_min)
    if primary is not None:
        push(primary)
    depth = min(M, 3)
    ranked = [np.argsort(-row, kind="stable")[:depth] for row in selection]
    scored = []
    for combo in itertools.product(*ranked):
        if _distinct_and_spread(combo, D, d_min):
            scored.append((-sum(selection[n, c] for n, c in enumerate(combo)), tuple(int(c) for c in combo)))
    for _, combo in sorted(scored):
        if len(candidates) >= limit:
            break
        push(combo)
    return candidates[:limit]


def is_near_binary(selection: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(selection - np.round(selection))) < tol)


def has_converged(previous: float, power: float, selection: np.ndarray, cfg: AOConfig) -> bool:
    """Relative power change within tolerance, and only once the selection is near binary."""
    change = abs(previous - power) / max(previous, 1e-300)
    return change <= cfg.tolerance and is_near_binary(selection, cfg.rounding_tol)


def initial_placements(
    scenario: Scenario, cfg: AOConfig, extra: Sequence[Placement] = ()
) -> list[Placement]:
    """Warm starts, the farthest-point spread placement and seeded random restarts."""
    D = scenario.distances
    rng = np.random.default_rng(cfg.seed)
    found: list[Placement] = []
    seen: set[tuple[int, ...]] = set()

    def push(placement: Placement | None) -> None:
        if placement is None or placement.M != scenario.M or placement.N != scenario.N:
            return
        key = tuple(sorted(placement.indices))
        if key in seen or not _distinct_and_spread(placement.indices, D, scenario.d_min):
            return
        seen.add(key)
        found.append(Placement.from_indices(placement.indices, scenario.M, scenario.d_min))

    for placement in extra:
        push(placement)
    push(farthest_point_placement(scenario.aperture, D, scenario.N, scenario.d_min))
    for _ in range(cfg.restarts):
        push(random_placement(scenario.aperture, D, scenario.N, scenario.d_min, rng))
    return found


def _commit(
    scenario: Scenario,
    indices: Sequence[int],
    options: SolverOptions | None,
    rng: np.random.Generator,
) -> tuple[Placement, BeamformingSolution] | None:
    placement = Placement.from_indices(indices, scenario.M, scenario.d_min)
    if not check_min_distance(placement, scenario.distances).ok:
        return None
    solution = beamform(scenario, placement, options, rng)
    return (placement, solution) if solution.feasible else None


def ao_run(
    scenario: Scenario,
    cfg: AOConfig | None = None,
    options: SolverOptions | None = None,
    initial: Sequence[Placement] = (),
) -> AOResult:
    """Alternate beam and position subproblems, then commit to a binary placement."""
    cfg = cfg or AOConfig()
    rng = np.random.default_rng(cfg.seed)
    trace = AOTrace()
    starts = initial_placements(scenario, cfg, initial)

    best: tuple[Placement, BeamformingSolution] | None = None
    for placement in starts:
        solution = beamform(scenario, placement, options, rng)
        if solution.feasible and (best is None or solution.power < best[1].power):
            best = (placement, solution)
    if best is None:
        logger.info("ao_no_feasible_start", extra={"event": "ao_no_feasible_start", "starts": len(starts)})
        return AOResult(None, BeamformingSolution.failed(SolveStatus.INFEASIBLE), trace)

    start, current = best
    selection = start.matrix()
    point = LinearizationPoint.from_selection(selection)
    taus = list(cfg.penalties)
    caps = [t * cfg.penalty_cap for t in cfg.penalties]
    trace.record(
        objective_watts=current.power, binary_violation=binary_violation(selection),
        penalty_comm=0.0, penalty_radar=0.0, penalty_binary=0.0, penalty_pairs=0.0,
        tau1=taus[0], tau2=taus[1], tau3=taus[2], tau4=taus[3],
        solver_status=current.status.value, accepted=True,
    )
    if math.comb(scenario.M, scenario.N) == 1:
        AO_ITERATIONS.observe(0)
        return AOResult(start, current, trace, iterations=0, converged=True, last_selection=selection)

    violations = [binary_violation(selection)]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        p2 = assemble_p2(scenario, current, point, taus, cfg)
        step = solve_p2(p2, options)
        if step.selection is None:
            trace.record(
                objective_watts=current.power, binary_violation=violations[-1],
                penalty_comm=math.nan, penalty_radar=math.nan, penalty_binary=math.nan,
                penalty_pairs=math.nan, tau1=taus[0], tau2=taus[1], tau3=taus[2], tau4=taus[3],
                solver_status=step.status.value, accepted=False,
            )
            logger.info("p2_failed", extra={"event": "p2_failed", "status": step.status.value})
            break

        candidate = beamform(scenario, step.selection, options, rng)
        accepted = candidate.feasible and candidate.power <= current.power * (1.0 + cfg.monotone_slack)
        previous = current.power
        if accepted:
            current = candidate
            selection = step.selection
            point = LinearizationPoint.from_selection(selection, step.phi)
            if is_near_binary(selection, cfg.rounding_tol):
                committed = _commit(scenario, np.argmax(selection, axis=1), options, rng)
                if committed is not None and committed[1].power < best[1].power:
                    best = committed
        else:
            taus[0] = min(taus[0] * cfg.penalty_growth, caps[0])
            taus[1] = min(taus[1] * cfg.penalty_growth, caps[1])

        violations.append(binary_violation(selection))
        trace.record(
            objective_watts=current.power, binary_violation=violations[-1],
            penalty_comm=step.penalties[0], penalty_radar=step.penalties[1],
            penalty_binary=step.penalties[2], penalty_pairs=step.penalties[3],
            tau1=taus[0], tau2=taus[1], tau3=taus[2], tau4=taus[3],
            solver_status=step.status.value, accepted=accepted,
        )
        logger.debug(
            "ao_iteration",
            extra={"event": "ao_iteration", "iteration": iterations, "power": current.power,
                   "accepted": accepted, "headroom": step.headroom,
                   "binary_violation": violations[-1]},
        )

        window = cfg.stall_window
        if len(violations) > window:
            reference = violations[-window - 1]
            if reference - violations[-1] < cfg.stall_ratio * max(reference, 1e-12):
                taus[2] = min(taus[2] * cfg.penalty_growth, caps[2])
                taus[3] = min(taus[3] * cfg.penalty_growth, caps[3])
                violations = violations[-1:]

        if accepted and has_converged(previous, current.power, selection, cfg):
            converged = True
            break
        if not accepted and taus[0] >= caps[0] and taus[1] >= caps[1]:
            break

    for indices in rounding_candidates(selection, scenario.distances, scenario.d_min, cfg.repair_candidates):
        committed = _commit(scenario, indices, options, rng)
        if committed is not None:
            if committed[1].power < best[1].power:
                best = committed
            break
    else:
        logger.info("rounding_exhausted", extra={"event": "rounding_exhausted"})

    AO_ITERATIONS.observe(iterations)
    placement, solution = best
    logger.info(
        "ao_finished",
        extra={"event": "ao_finished", "iterations": iterations, "converged": converged,
               "power_w": solution.power, "indices": list(placement.indices)},
    )
    return AOResult(
        placement, solution, trace, iterations=iterations, converged=converged, last_selection=selection
    )
