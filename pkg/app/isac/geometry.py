"""Transmitter lattice, antenna selection vectors and the minimum-distance rule.

Candidate positions are enumerated row-major (x fastest) starting from the
origin corner, so ``positions[0]`` is always ``(0, 0)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatchError, InvalidModeError, InvalidParameterError

logger = logging.getLogger(__name__)

# slack on floor(a*lambda/d) so that e.g. 0.5 * 0.06 / 0.01 counts as 3 cells
_SIDE_EPS = 1e-9
_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Aperture:
    """An arbitrary set of candidate positions (meters) sharing one wavelength."""

    positions: np.ndarray
    wavelength: float

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        if self.wavelength <= 0:
            raise InvalidParameterError(f"wavelength must be positive, got {self.wavelength}")
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    @property
    def M(self) -> int:
        return int(self.positions.shape[0])


@dataclass(frozen=True, eq=False)
class GridSpec(Aperture):
    """Square lattice of pitch ``d`` covering an ``a*lambda`` x ``a*lambda`` area."""

    a: float = 0.0
    d: float = 0.0
    side: int = 0

    @property
    def extent(self) -> float:
        return self.a * self.wavelength


def build_grid(a: float, d: float, wavelength: float) -> GridSpec:
    if a <= 0 or d <= 0 or wavelength <= 0:
        raise InvalidParameterError(
            f"grid parameters must be positive (a={a}, d={d}, wavelength={wavelength})"
        )
    side = int(math.floor(a * wavelength / d + _SIDE_EPS)) + 1
    axis = np.arange(side, dtype=float) * d
    xs, ys = np.meshgrid(axis, axis, indexing="xy")
    positions = np.column_stack([xs.ravel(), ys.ravel()])
    return GridSpec(positions=positions, wavelength=wavelength, a=a, d=d, side=side)


def distance_matrix(grid: Aperture) -> np.ndarray:
    D = cdist(grid.positions, grid.positions)
    np.fill_diagonal(D, 0.0)
    D.setflags(write=False)
    return D


class SelectionMode(str, Enum):
    BINARY = "binary"
    RELAXED = "relaxed"


@dataclass(frozen=True, eq=False)
class SelectionVector:
    b: np.ndarray
    mode: SelectionMode = SelectionMode.BINARY

    def __post_init__(self) -> None:
        b = np.asarray(self.b, dtype=float).ravel()
        if b.size == 0:
            raise InvalidParameterError("selection vector must not be empty")
        if np.any(b < -_SUM_TOL) or np.any(b > 1 + _SUM_TOL):
            raise InvalidParameterError("selection entries must lie in [0, 1]")
        if abs(b.sum() - 1.0) > _SUM_TOL:
            raise InvalidParameterError(f"selection entries must sum to 1, got {b.sum():.12g}")
        if self.mode is SelectionMode.BINARY:
            if not np.all((b == 0.0) | (b == 1.0)) or int(np.count_nonzero(b)) != 1:
                raise InvalidParameterError("binary selection vector must be one-hot")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @classmethod
    def one_hot(cls, index: int, M: int) -> "SelectionVector":
        if not 0 <= index < M:
            raise InvalidParameterError(f"position index {index} outside 0..{M - 1}")
        b = np.zeros(M)
        b[index] = 1.0
        return cls(b, SelectionMode.BINARY)

    @classmethod
    def relaxed(cls, values: Sequence[float] | np.ndarray) -> "SelectionVector":
        """Clip to [0, 1] and renormalize, absorbing solver round-off."""
        b = np.clip(np.asarray(values, dtype=float).ravel(), 0.0, 1.0)
        total = b.sum()
        if total <= 0:
            raise InvalidParameterError("relaxed selection vector has no mass")
        return cls(b / total, SelectionMode.RELAXED)

    @property
    def M(self) -> int:
        return int(self.b.size)

    @property
    def index(self) -> int:
        return int(np.argmax(self.b))

    @property
    def confidence(self) -> float:
        return float(self.b.max())


@dataclass(frozen=True, eq=False)
class Placement:
    vectors: tuple[SelectionVector, ...]
    d_min: float = 0.0

    def __post_init__(self) -> None:
        vectors = tuple(self.vectors)
        if not vectors:
            raise InvalidParameterError("a placement needs at least one antenna")
        sizes = {v.M for v in vectors}
        if len(sizes) != 1:
            raise DimensionMismatchError(f"selection vectors disagree on M: {sorted(sizes)}")
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_indices(cls, indices: Iterable[int], M: int, d_min: float = 0.0) -> "Placement":
        return cls(tuple(SelectionVector.one_hot(int(i), M) for i in indices), d_min)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, d_min: float = 0.0) -> "Placement":
        """Build a relaxed placement from an (N, M) array of selection weights."""
        return cls(tuple(SelectionVector.relaxed(row) for row in np.atleast_2d(matrix)), d_min)

    @property
    def N(self) -> int:
        return len(self.vectors)

    @property
    def M(self) -> int:
        return self.vectors[0].M

    @property
    def is_binary(self) -> bool:
        return all(v.mode is SelectionMode.BINARY for v in self.vectors)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(v.index for v in self.vectors)

    def matrix(self) -> np.ndarray:
        """Selection weights stacked as an (N, M) array, row n is b_n."""
        return np.vstack([v.b for v in self.vectors])


def expand_block_matrix(placement: Placement | np.ndarray) -> np.ndarray:
    """Block-diagonal B (MN x N) with b_n in rows n*M .. (n+1)*M - 1 of column n."""
    rows = placement.matrix() if isinstance(placement, Placement) else np.atleast_2d(placement)
    N, M = rows.shape
    B = np.zeros((M * N, N))
    for n in range(N):
        B[n * M : (n + 1) * M, n] = rows[n]
    return B


def collapse_block_matrix(B: np.ndarray, N: int) -> np.ndarray:
    """Inverse of :func:`expand_block_matrix`: the (N, M) diagonal blocks of B."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[1] != N or B.shape[0] % N:
        raise DimensionMismatchError(f"B of shape {B.shape} is not block-structured for N={N}")
    M = B.shape[0] // N
    return np.vstack([B[n * M : (n + 1) * M, n] for n in range(N)])


@dataclass(frozen=True)
class MinDistanceReport:
    ok: bool
    violations: list[tuple[int, int]] = field(default_factory=list)


def check_min_distance(placement: Placement, D: np.ndarray) -> MinDistanceReport:
    """Check b_n^T D b_n' >= D_min for every antenna pair (0-based pair indices)."""
    if not placement.is_binary:
        raise InvalidModeError("minimum distance is only checked for binary placements")
    if D.shape != (placement.M, placement.M):
        raise DimensionMismatchError(f"distance matrix {D.shape} does not match M={placement.M}")
    idx = placement.indices
    violations = [
        (n, m) for n, m in combinations(range(placement.N), 2) if D[idx[n], idx[m]] < placement.d_min
    ]
    return MinDistanceReport(ok=not violations, violations=violations)


def upa_positions(rows: int, cols: int, spacing: float) -> np.ndarray:
    """Uniform planar array anchored at the origin, enumerated row-major."""
    xs, ys = np.meshgrid(np.arange(cols) * spacing, np.arange(rows) * spacing, indexing="xy")
    return np.column_stack([xs.ravel(), ys.ravel()])


def snap_to_lattice(points: np.ndarray, d: float) -> np.ndarray:
    """Snap points to the nearest nodes of the pitch-``d`` lattice through the origin."""
    return np.round(np.asarray(points, dtype=float) / d) * d


def nearest_candidates(grid: Aperture, points: np.ndarray) -> list[int]:
    """Greedy nearest distinct candidate index for each point, in order."""
    dist = cdist(np.atleast_2d(points), grid.positions)
    taken: set[int] = set()
    chosen = []
    for row in dist:
        for idx in np.argsort(row, kind="stable"):
            if int(idx) not in taken:
                taken.add(int(idx))
                chosen.append(int(idx))
                break
        else:
            raise InvalidParameterError("more points than candidate positions")
    return chosen


def farthest_point_placement(
    grid: Aperture, D: np.ndarray, N: int, d_min: float, start: int = 0
) -> Placement | None:
    """Greedy maximally-spread placement honoring ``d_min``; None when it cannot fit N antennas."""
    if N > grid.M:
        return None
    chosen = [start]
    while len(chosen) < N:
        nearest = D[:, chosen].min(axis=1)
        nearest[chosen] = -np.inf
        candidate = int(np.argmax(nearest))
        if nearest[candidate] < d_min:
            logger.debug("farthest_point_stuck", extra={"event": "farthest_point_stuck", "N": N})
            return None
        chosen.append(candidate)
    return Placement.from_indices(chosen, grid.M, d_min)


def random_placement(
    grid: Aperture, D: np.ndarray, N: int, d_min: float, rng: np.random.Generator, attempts: int = 200
) -> Placement | None:
    """Rejection-sample a binary placement satisfying the minimum distance."""
    if N > grid.M:
        return None
    for _ in range(attempts):
        chosen = rng.choice(grid.M, size=N, replace=False)
        placement = Placement.from_indices(chosen, grid.M, d_min)
        if check_min_distance(placement, D).ok:
            return placement
    return None
