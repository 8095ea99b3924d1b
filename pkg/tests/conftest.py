import json

import numpy as np
import pytest

from isac.channel import ChannelMatrix
from isac.config import ExperimentConfig, config_from_mapping
from isac.geometry import Aperture
from isac.scenario import Scenario
from isac.sensing import Target, TargetSpec, make_beam_grid

# 2 x 2 lattice at a 3 cm pitch: the λ/2 arrays of both baselines sit on it
TOY = {
    "system.n_antennas": 2,
    "system.n_users": 1,
    "system.n_targets": 1,
    "system.wavelength": "0.06 m",
    "grid.a": 0.5,
    "grid.d": "0.03 m",
    "grid.d_min": "0.015 m",
    "beam.n_elevation": 7,
    "beam.n_azimuth": 7,
    "run.seeds": [0],
    "run.mc_samples": 10000,
    "ao.max_iterations": 5,
    "ao.restarts": 1,
}


@pytest.fixture
def toy_cfg() -> ExperimentConfig:
    return config_from_mapping(TOY)


@pytest.fixture
def toy_config_file(tmp_path):
    def write(**overrides):
        path = tmp_path / "toy.json"
        path.write_text(json.dumps({**TOY, **overrides}), encoding="utf-8")
        return path

    return write


def make_scenario(
    per_position, n_antennas=2, targets=(), positions=None, sinr=10.0, noise=1e-11, outage=0.01
):
    """Hand-built scenario on a line of candidates 3 cm apart."""
    per_position = np.atleast_2d(np.asarray(per_position, dtype=complex))
    K, M = per_position.shape
    if positions is None:
        positions = np.column_stack([np.arange(M) * 0.03, np.zeros(M)])
    spec = TargetSpec(tuple(targets), outage=outage)
    channel = ChannelMatrix(
        per_position=per_position,
        n_antennas=n_antennas,
        noise_var=np.full(K, noise),
        sinr_threshold=np.full(K, sinr),
    )
    return Scenario(
        aperture=Aperture(positions, 0.06),
        channel=channel,
        targets=spec,
        beam_grid=make_beam_grid(spec, 5, 5),
        reference_loss=1e-3,
        d_min=0.015,
    )


@pytest.fixture
def single_user():
    return make_scenario([[1e-3 * (1 + 1j), 2e-3]])


@pytest.fixture
def broadside_target() -> Target:
    return Target(elevation=0.0, azimuth=0.0, range_m=2.0, snr_threshold=10.0, noise_var=1e-11)
