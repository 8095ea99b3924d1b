"""One problem instance: candidate set, user channels, targets and beam grid."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ChannelMatrix, field_response
from .errors import DimensionMismatchError
from .geometry import Aperture, Placement, distance_matrix
from .sensing import BeamGrid, TargetSpec, chance_threshold


@dataclass(frozen=True, eq=False)
class Scenario:
    aperture: Aperture
    channel: ChannelMatrix
    targets: TargetSpec
    beam_grid: BeamGrid
    reference_loss: float
    d_min: float

    def __post_init__(self) -> None:
        if self.channel.M != self.aperture.M:
            raise DimensionMismatchError(
                f"channel covers {self.channel.M} positions, aperture has {self.aperture.M}"
            )

    @property
    def N(self) -> int:
        return self.channel.N

    @property
    def M(self) -> int:
        return self.aperture.M

    @property
    def K(self) -> int:
        return self.channel.K

    @property
    def E(self) -> int:
        return self.targets.E

    @cached_property
    def distances(self) -> np.ndarray:
        return distance_matrix(self.aperture)

    @cached_property
    def pattern_responses(self) -> np.ndarray:
        """(LQ, M) FRVs over the beam grid, rows ordered like ``pattern.ravel()``."""
        theta, phi = self.beam_grid.directions()
        return field_response(self.aperture, theta, phi)

    @cached_property
    def target_responses(self) -> np.ndarray:
        """(E, M) FRVs toward each target."""
        if not self.E:
            return np.zeros((0, self.M), dtype=complex)
        theta = np.array([t.elevation for t in self.targets])
        phi = np.array([t.azimuth for t in self.targets])
        return field_response(self.aperture, theta, phi)

    @cached_property
    def target_thresholds(self) -> np.ndarray:
        """Chance-constraint floor on the beampattern value at every target (watts)."""
        return np.array(
            [
                chance_threshold(t, self.targets.mean_rcs, self.targets.outage, self.reference_loss)
                for t in self.targets
            ]
        )

    @property
    def pattern(self) -> np.ndarray:
        return self.beam_grid.pattern.ravel()

    def concatenated(self, responses: np.ndarray) -> np.ndarray:
        """Stack per-position responses N times: (P, M) -> (P, MN)."""
        return np.tile(np.atleast_2d(responses), (1, self.N))

    def selection(self, placement: Placement | np.ndarray) -> np.ndarray:
        """(N, M) selection weights; accepts a Placement or the raw rows."""
        rows = placement.matrix() if isinstance(placement, Placement) else np.atleast_2d(placement)
        if rows.shape != (self.N, self.M):
            raise DimensionMismatchError(f"selection {rows.shape} does not match N={self.N}, M={self.M}")
        return rows

    def restrict(self, indices: list[int] | np.ndarray) -> "Scenario":
        """Sub-instance on a subset of the candidate positions."""
        indices = np.asarray(indices, dtype=int)
        return Scenario(
            aperture=Aperture(self.aperture.positions[indices], self.aperture.wavelength),
            channel=self.channel.restrict(indices),
            targets=self.targets,
            beam_grid=self.beam_grid,
            reference_loss=self.reference_loss,
            d_min=self.d_min,
        )

    def with_beam_grid(self, beam_grid: BeamGrid) -> "Scenario":
        return Scenario(
            aperture=self.aperture,
            channel=self.channel,
            targets=self.targets,
            beam_grid=beam_grid,
            reference_loss=self.reference_loss,
            d_min=self.d_min,
        )
