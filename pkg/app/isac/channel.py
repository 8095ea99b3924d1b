"""Multipath user channels over every candidate position.

The path realization (weights, departure angles, scatterer distances) does not
depend on where the antennas may sit, so one seeded draw can be evaluated on
any candidate set: the MA lattice of any size and the fixed baseline arrays.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError
from .geometry import Aperture

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PathSet:
    """Per-user path parameters; every array is (K, L_p)."""

    weights: np.ndarray
    elevation: np.ndarray
    azimuth: np.ndarray
    distances: np.ndarray
    reference_loss: float
    pathloss_exponent: float

    def __post_init__(self) -> None:
        shapes = {a.shape for a in (self.weights, self.elevation, self.azimuth, self.distances)}
        if len(shapes) != 1 or self.weights.ndim != 2 or self.weights.shape[1] < 1:
            raise DimensionMismatchError(f"path arrays must share one (K, L_p) shape, got {shapes}")
        if np.any(self.distances <= 0):
            raise InvalidParameterError("scatterer distances must be positive")
        half_pi = np.pi / 2 + 1e-12
        if np.any(np.abs(self.elevation) > half_pi) or np.any(np.abs(self.azimuth) > half_pi):
            raise InvalidParameterError("departure angles must lie in [-pi/2, pi/2]")

    @property
    def K(self) -> int:
        return int(self.weights.shape[0])

    @property
    def L_p(self) -> int:
        return int(self.weights.shape[1])

    @property
    def variances(self) -> np.ndarray:
        return self.reference_loss * self.distances ** (-self.pathloss_exponent)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Ĥ stored as one K x M block shared by all N antennas."""

    per_position: np.ndarray
    n_antennas: int
    noise_var: np.ndarray
    sinr_threshold: np.ndarray

    def __post_init__(self) -> None:
        K = self.per_position.shape[0]
        if self.noise_var.shape != (K,) or self.sinr_threshold.shape != (K,):
            raise DimensionMismatchError("noise and SINR threshold vectors must have length K")
        if not np.all(np.isfinite(self.per_position)):
            raise InvalidParameterError("channel entries must be finite")

    @property
    def K(self) -> int:
        return int(self.per_position.shape[0])

    @property
    def M(self) -> int:
        return int(self.per_position.shape[1])

    @property
    def N(self) -> int:
        return self.n_antennas

    @cached_property
    def full(self) -> np.ndarray:
        """Ĥ = [Ĥ_1, ..., Ĥ_N], K x MN."""
        return np.tile(self.per_position, (1, self.n_antennas))

    def restrict(self, indices: list[int] | np.ndarray) -> "ChannelMatrix":
        return ChannelMatrix(
            per_position=self.per_position[:, np.asarray(indices)],
            n_antennas=self.n_antennas,
            noise_var=self.noise_var,
            sinr_threshold=self.sinr_threshold,
        )


def aod_from_uniform(u: np.ndarray | float) -> np.ndarray | float:
    """Inverse CDF of the elevation density cos(theta)/2 on [-pi/2, pi/2]."""
    return np.arcsin(2.0 * np.asarray(u) - 1.0)


def sample_aod(rng: np.random.Generator, size: int | tuple[int, ...] | None = None):
    """Draw (elevation, azimuth) with joint density cos(theta) / (2 pi)."""
    theta = aod_from_uniform(rng.uniform(0.0, 1.0, size))
    phi = rng.uniform(-np.pi / 2, np.pi / 2, size)
    return theta, phi


def field_response(grid: Aperture, theta, phi) -> np.ndarray:
    """FRV over the candidate positions; shape (M,) for scalar angles, (..., M) otherwise."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    offsets = grid.positions - grid.positions[0]
    k0 = 2.0 * np.pi / grid.wavelength
    phase = k0 * (
        offsets[:, 0] * (np.cos(theta) * np.sin(phi))[..., None]
        + offsets[:, 1] * np.sin(theta)[..., None]
    )
    return np.exp(1j * phase)


def sample_user_distances(
    rng: np.random.Generator, n_users: int, low: float = 10.0, high: float = 50.0
) -> np.ndarray:
    return rng.uniform(low, high, n_users)


def generate_paths(
    n_users: int,
    n_paths: int,
    reference_loss: float,
    pathloss_exponent: float,
    user_distances: np.ndarray,
    rng: np.random.Generator,
) -> PathSet:
    """Draw CN(0, L_0 D^-alpha) weights and AoDs; scatterer distance = user distance."""
    if n_users < 1 or n_paths < 1:
        raise InvalidParameterError(f"need K >= 1 and L_p >= 1, got K={n_users}, L_p={n_paths}")
    user_distances = np.asarray(user_distances, dtype=float)
    if user_distances.shape != (n_users,) or np.any(user_distances <= 0):
        raise InvalidParameterError("user distances must be K positive values")
    distances = np.repeat(user_distances[:, None], n_paths, axis=1)
    variances = reference_loss * distances ** (-pathloss_exponent)
    scale = np.sqrt(variances / 2.0)
    weights = scale * (
        rng.standard_normal((n_users, n_paths)) + 1j * rng.standard_normal((n_users, n_paths))
    )
    theta, phi = sample_aod(rng, (n_users, n_paths))
    return PathSet(
        weights=weights,
        elevation=theta,
        azimuth=phi,
        distances=distances,
        reference_loss=reference_loss,
        pathloss_exponent=pathloss_exponent,
    )


def channel_from_paths(
    grid: Aperture,
    paths: PathSet,
    n_antennas: int,
    noise_var: np.ndarray | float,
    sinr_threshold: np.ndarray | float,
) -> ChannelMatrix:
    """h_k(p_m) = 1^T Σ_k g_k(p_m) evaluated at every candidate of ``grid``."""
    frv = field_response(grid, paths.elevation, paths.azimuth)  # (K, L_p, M)
    per_position = np.einsum("kl,klm->km", paths.weights, frv)
    K = paths.K
    return ChannelMatrix(
        per_position=per_position,
        n_antennas=n_antennas,
        noise_var=np.broadcast_to(np.asarray(noise_var, dtype=float), (K,)).copy(),
        sinr_threshold=np.broadcast_to(np.asarray(sinr_threshold, dtype=float), (K,)).copy(),
    )


def generate_channels(
    grid: Aperture,
    n_users: int,
    n_antennas: int,
    n_paths: int,
    reference_loss: float,
    pathloss_exponent: float,
    user_distances: np.ndarray,
    rng: np.random.Generator,
    noise_var: np.ndarray | float = 1e-11,
    sinr_threshold: np.ndarray | float = 10.0,
) -> tuple[PathSet, ChannelMatrix]:
    paths = generate_paths(n_users, n_paths, reference_loss, pathloss_exponent, user_distances, rng)
    channel = channel_from_paths(grid, paths, n_antennas, noise_var, sinr_threshold)
    logger.debug(
        "channels_generated",
        extra={"event": "channels_generated", "K": n_users, "M": grid.M, "L_p": n_paths},
    )
    return paths, channel


def effective_channel(H_hat: np.ndarray, B: np.ndarray) -> np.ndarray:
    """H = Ĥ B (K x N)."""
    H_hat = np.asarray(H_hat)
    B = np.asarray(B)
    if H_hat.ndim != 2 or B.ndim != 2 or H_hat.shape[1] != B.shape[0]:
        raise DimensionMismatchError(f"cannot multiply Ĥ {H_hat.shape} by B {B.shape}")
    return H_hat @ B


def _pairs(array: np.ndarray) -> list:
    return np.stack([array.real, array.imag], axis=-1).tolist()


def export_channel(path: Path, channel: ChannelMatrix, paths: PathSet, seed: int | None) -> None:
    """Write Ĥ (per-position block) and the path parameters as JSON.

    Complex numbers are ``[re, im]`` pairs, arrays are row-major nested lists.
    """
    document = {
        "header": {
            "K": channel.K,
            "M": channel.M,
            "N": channel.N,
            "L_p": paths.L_p,
            "seed": seed,
            "reference_loss": paths.reference_loss,
            "pathloss_exponent": paths.pathloss_exponent,
        },
        "H_hat_block": _pairs(channel.per_position),
        "noise_var": channel.noise_var.tolist(),
        "sinr_threshold": channel.sinr_threshold.tolist(),
        "paths": {
            "weights": _pairs(paths.weights),
            "elevation": paths.elevation.tolist(),
            "azimuth": paths.azimuth.tolist(),
            "distances": paths.distances.tolist(),
        },
    }
    Path(path).write_text(json.dumps(document, indent=1), encoding="utf-8")
