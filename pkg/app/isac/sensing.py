"""Beampattern synthesis targets, sensing SNR and the RCS chance constraint.

Target RCS follows the exponential (Swerling-I) law, which makes the outage
probability Pr{SNR <= threshold} a closed-form function of the beampattern
value at the target direction.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .conic import Affine, ConicProgram, SecondOrderCone, SolverOptions, SolveStatus, Variable
from .conic import Inequality, VarKind, solve
from .errors import DimensionMismatchError, InvalidParameterError, NumericalFailureError

logger = logging.getLogger(__name__)

_ANGLE_TOL = 1e-9
_SIXTEEN_PI = 16.0 * math.pi


@dataclass(frozen=True)
class Target:
    elevation: float
    azimuth: float
    range_m: float
    snr_threshold: float
    noise_var: float

    def __post_init__(self) -> None:
        if self.range_m <= 0:
            raise InvalidParameterError(f"target range must be positive, got {self.range_m}")
        if self.snr_threshold <= 0:
            raise InvalidParameterError("sensing SNR threshold must be positive")
        if self.noise_var <= 0:
            raise InvalidParameterError("echo noise variance must be positive")


@dataclass(frozen=True)
class TargetSpec:
    targets: tuple[Target, ...]
    mean_rcs: float = 1.0
    outage: float = 0.01

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.mean_rcs <= 0:
            raise InvalidParameterError(f"average RCS must be positive, got {self.mean_rcs}")
        if not 0.0 < self.outage < 1.0:
            raise InvalidParameterError(f"outage tolerance must lie in (0, 1), got {self.outage}")

    @property
    def E(self) -> int:
        return len(self.targets)

    def __iter__(self):
        return iter(self.targets)


@dataclass(frozen=True, eq=False)
class BeamGrid:
    elevations: np.ndarray
    azimuths: np.ndarray
    half_width_elevation: float
    half_width_azimuth: float
    pattern: np.ndarray
    mse_cap: float | None = None

    @property
    def L(self) -> int:
        return int(self.elevations.size)

    @property
    def Q(self) -> int:
        return int(self.azimuths.size)

    def directions(self) -> tuple[np.ndarray, np.ndarray]:
        """(theta, phi) for every grid point, flattened in the order of ``pattern.ravel()``."""
        theta, phi = np.meshgrid(self.elevations, self.azimuths, indexing="ij")
        return theta.ravel(), phi.ravel()

    def with_mse_cap(self, mse_cap: float | None) -> "BeamGrid":
        return replace(self, mse_cap=mse_cap)


def uniform_angles(count: int) -> np.ndarray:
    if count < 1:
        raise InvalidParameterError("angle grids need at least one sample")
    if count == 1:
        return np.zeros(1)
    return np.linspace(-np.pi / 2, np.pi / 2, count)


def ideal_pattern(
    elevations: np.ndarray,
    azimuths: np.ndarray,
    half_width_elevation: float,
    half_width_azimuth: float,
    targets: TargetSpec | Sequence[Target],
) -> np.ndarray:
    """Binary L x Q template: 1 inside the (2Δ x 2δ) box of any target."""
    if half_width_elevation < 0 or half_width_azimuth < 0:
        raise InvalidParameterError("beam half-widths must be non-negative")
    theta = np.asarray(elevations, dtype=float)[:, None]
    phi = np.asarray(azimuths, dtype=float)[None, :]
    pattern = np.zeros((theta.shape[0], phi.shape[1]))
    for target in targets:
        inside = (np.abs(theta - target.elevation) <= half_width_elevation + _ANGLE_TOL) & (
            np.abs(phi - target.azimuth) <= half_width_azimuth + _ANGLE_TOL
        )
        pattern = np.maximum(pattern, inside.astype(float))
    return pattern


def make_beam_grid(
    targets: TargetSpec,
    n_elevation: int = 61,
    n_azimuth: int = 61,
    half_width_elevation: float = math.radians(5.0),
    half_width_azimuth: float = math.radians(5.0),
    mse_cap: float | None = None,
) -> BeamGrid:
    elevations = uniform_angles(n_elevation)
    azimuths = uniform_angles(n_azimuth)
    pattern = ideal_pattern(elevations, azimuths, half_width_elevation, half_width_azimuth, targets)
    return BeamGrid(
        elevations=elevations,
        azimuths=azimuths,
        half_width_elevation=half_width_elevation,
        half_width_azimuth=half_width_azimuth,
        pattern=pattern,
        mse_cap=mse_cap,
    )


def beampattern_value(a_hat: np.ndarray, F_sum: np.ndarray, Y: np.ndarray) -> float:
    """â^H (ΣF_k + Y) â."""
    a_hat = np.asarray(a_hat).ravel()
    if F_sum.shape != (a_hat.size, a_hat.size) or Y.shape != F_sum.shape:
        raise DimensionMismatchError(
            f"response of length {a_hat.size} does not match covariances {F_sum.shape}, {Y.shape}"
        )
    return float(np.real(np.vdot(a_hat, (F_sum + Y) @ a_hat)))


def pattern_values(responses: np.ndarray, covariance: np.ndarray) -> np.ndarray:
    """Row-wise a_p^H C a_p for a (P, dim) response matrix."""
    responses = np.atleast_2d(responses)
    return np.real(np.einsum("pi,ij,pj->p", responses.conj(), covariance, responses))


def beampattern_mse(
    rho0: float,
    pattern: np.ndarray,
    responses: np.ndarray,
    F_list: Sequence[np.ndarray],
    Y: np.ndarray,
    B: np.ndarray | None = None,
) -> float:
    """Mean squared gap between ρ0·𝒟 and the transmit beampattern.

    ``responses`` holds one concatenated FRV â per row, ordered like
    ``pattern.ravel()``. When ``B`` is given the covariances are antenna-domain
    (W_k, R) and the responses are projected to steering vectors B^T â.
    """
    if rho0 < 0:
        raise InvalidParameterError("scaling factor rho0 must be non-negative")
    responses = np.atleast_2d(responses)
    if B is not None:
        responses = responses @ B
    covariance = sum(F_list, np.zeros_like(Y)) + Y
    residual = rho0 * np.asarray(pattern, dtype=float).ravel() - pattern_values(responses, covariance)
    return float(np.mean(residual**2))


def rcs_at_threshold(value: float, target: Target, reference_loss: float) -> float:
    """RCS c at which the sensing SNR equals its threshold for beampattern value ``value``."""
    if value <= 0:
        return math.inf
    return _SIXTEEN_PI * target.range_m**4 * target.noise_var * target.snr_threshold / (
        reference_loss**2 * value
    )


def chance_threshold(
    target: Target, mean_rcs: float, outage: float, reference_loss: float
) -> float:
    """Smallest beampattern value at the target meeting Pr{Γ_e <= Γ_th} <= ν."""
    if not 0.0 < outage < 1.0:
        raise InvalidParameterError(f"outage tolerance must lie in (0, 1), got {outage}")
    return -(
        _SIXTEEN_PI * target.range_m**4 * target.noise_var * target.snr_threshold
    ) / (math.log1p(-outage) * mean_rcs * reference_loss**2)


def outage_probability(value: float, target: Target, mean_rcs: float, reference_loss: float) -> float:
    """Closed form 1 - exp(-c / Ω_av) for the exponential RCS law."""
    c = rcs_at_threshold(value, target, reference_loss)
    return float(-math.expm1(-c / mean_rcs)) if math.isfinite(c) else 1.0


def sensing_snr(rcs: float | np.ndarray, reference_loss: float, target: Target, value: float):
    """Γ_e = Ω_e L_0^2 value / (16 π Ψ_e^4 σ_e^2)."""
    return (
        np.asarray(rcs) * reference_loss**2 * value / (_SIXTEEN_PI * target.range_m**4 * target.noise_var)
    )


def sample_rcs(mean_rcs: float, rng: np.random.Generator, size: int | None = None):
    if mean_rcs <= 0:
        raise InvalidParameterError("average RCS must be positive")
    return rng.exponential(mean_rcs, size)


def calibrate_mse_cap(
    pattern: np.ndarray,
    steering: np.ndarray,
    target_steering: np.ndarray,
    thresholds: Sequence[float],
    factor: float = 10.0,
    options: SolverOptions | None = None,
) -> float | None:
    """Pattern MSE cap δ_d = factor × the smallest MSE a sensing-only covariance reaches.

    The fit runs over a PSD antenna-domain covariance and ρ0 >= 0 while every
    target still meets its chance-constraint value. Returns None when there is
    nothing to sense.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.size == 0 or not np.any(pattern):
        return None
    steering = np.atleast_2d(steering)
    target_steering = np.atleast_2d(target_steering)
    N = steering.shape[1]
    unit = float(thresholds.max() / N)

    C = Variable("C", (N, N), VarKind.HERMITIAN, psd=True)
    rho0 = Variable("rho0", (), VarKind.REAL, nonneg=True)
    t = Variable("t", (), VarKind.REAL, nonneg=True)
    P = steering.shape[0]
    residual = (
        Affine.linear(rho0, np.asarray(pattern, dtype=float).reshape(-1, 1))
        - Affine.quadratic_forms(C, steering)
    ) * (1.0 / math.sqrt(P))
    constraints = [SecondOrderCone(residual, Affine.linear(t, np.ones((1, 1))), label="mse_fit")]
    for e, (a_e, tau) in enumerate(zip(target_steering, thresholds)):
        constraints.append(
            Inequality(Affine.quadratic_forms(C, a_e[None, :]) - tau / unit, label=f"target_{e}")
        )
    program = ConicProgram(
        variables=(C, rho0, t),
        objective=Affine.linear(t, np.ones((1, 1))),
        constraints=tuple(constraints),
        name="mse_calibration",
    )
    solution = solve(program, options)
    if solution.status is not SolveStatus.OPTIMAL:
        raise NumericalFailureError(f"MSE calibration failed with status {solution.status.value}")
    min_mse = (solution.objective * unit) ** 2
    cap = factor * max(min_mse, 1e-6 * unit**2)
    logger.debug(
        "mse_cap_calibrated",
        extra={"event": "mse_cap_calibrated", "min_mse": min_mse, "mse_cap": cap},
    )
    return cap
