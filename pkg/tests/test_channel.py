import json

import numpy as np
import pytest

from isac.channel import (
    PathSet,
    channel_from_paths,
    effective_channel,
    export_channel,
    field_response,
    generate_channels,
    generate_paths,
)
from isac.errors import InvalidParameterError
from isac.geometry import Placement, build_grid, expand_block_matrix


@pytest.fixture
def grid():
    return build_grid(0.5, 0.01, 0.06)


def _paths(seed=0, K=2, L=4):
    rng = np.random.default_rng(seed)
    return generate_paths(K, L, 1e-3, 2.2, np.array([10.0, 40.0])[:K], rng)


def test_field_response_reference_and_broadside(grid):
    frv = field_response(grid, 0.3, -0.7)
    assert frv.shape == (grid.M,)
    assert frv[0] == pytest.approx(1.0)
    np.testing.assert_allclose(np.abs(frv), 1.0)
    np.testing.assert_allclose(field_response(grid, 0.0, 0.0), np.ones(grid.M))


def test_field_response_phase(grid):
    theta, phi = 0.2, 0.4
    k0 = 2 * np.pi / 0.06
    x, y = grid.positions[5]
    expected = np.exp(1j * k0 * (x * np.cos(theta) * np.sin(phi) + y * np.sin(theta)))
    assert field_response(grid, theta, phi)[5] == pytest.approx(expected)


def test_field_response_batches(grid):
    theta = np.zeros((2, 3))
    assert field_response(grid, theta, theta).shape == (2, 3, grid.M)


def test_paths_are_seeded():
    a, b = _paths(7), _paths(7)
    np.testing.assert_array_equal(a.weights, b.weights)
    assert not np.array_equal(a.weights, _paths(8).weights)


def test_path_shapes_and_variances():
    paths = _paths()
    assert (paths.K, paths.L_p) == (2, 4)
    assert paths.variances[0, 0] == pytest.approx(1e-3 * 10.0**-2.2)
    assert np.all(np.abs(paths.elevation) <= np.pi / 2)


def test_generate_paths_rejects_empty():
    with pytest.raises(InvalidParameterError):
        generate_paths(0, 4, 1e-3, 2.2, np.array([]), np.random.default_rng(0))


def test_pathset_rejects_out_of_range_angles():
    ones = np.ones((1, 1))
    with pytest.raises(InvalidParameterError):
        PathSet(ones + 0j, ones * 2.0, ones * 0.0, ones * 10.0, 1e-3, 2.2)


def test_channel_is_sum_over_paths(grid):
    paths = _paths()
    channel = channel_from_paths(grid, paths, 2, 1e-11, 10.0)
    m = 6
    expected = sum(
        paths.weights[1, l] * field_response(grid, paths.elevation[1, l], paths.azimuth[1, l])[m]
        for l in range(paths.L_p)
    )
    assert channel.per_position[1, m] == pytest.approx(expected)
    assert channel.full.shape == (2, 2 * grid.M)


def test_effective_channel_picks_selected_columns(grid):
    _, channel = generate_channels(grid, 2, 3, 4, 1e-3, 2.2, np.array([10.0, 30.0]), np.random.default_rng(1))
    placement = Placement.from_indices([2, 9, 14], grid.M)
    H = effective_channel(channel.full, expand_block_matrix(placement))
    np.testing.assert_allclose(H, channel.per_position[:, [2, 9, 14]])
    np.testing.assert_allclose(channel.restrict([2, 9, 14]).per_position, H)


def test_export_channel(tmp_path, grid):
    paths = _paths()
    channel = channel_from_paths(grid, paths, 2, 1e-11, 10.0)
    target = tmp_path / "channel.json"
    export_channel(target, channel, paths, seed=0)
    document = json.loads(target.read_text())
    assert document["header"] == {
        "K": 2, "M": 16, "N": 2, "L_p": 4, "seed": 0, "reference_loss": 1e-3, "pathloss_exponent": 2.2,
    }
    re, im = document["H_hat_block"][0][3]
    assert complex(re, im) == pytest.approx(channel.per_position[0, 3])
