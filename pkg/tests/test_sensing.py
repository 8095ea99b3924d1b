import math

import numpy as np
import pytest

from isac.errors import InvalidParameterError
from isac.sensing import (
    Target,
    TargetSpec,
    beampattern_mse,
    beampattern_value,
    chance_threshold,
    ideal_pattern,
    make_beam_grid,
    outage_probability,
    rcs_at_threshold,
    sample_rcs,
    sensing_snr,
    uniform_angles,
)


def test_chance_threshold_closed_form(broadside_target):
    value = chance_threshold(broadside_target, mean_rcs=1.0, outage=0.01, reference_loss=1e-3)
    expected = 16 * math.pi * 2.0**4 * 1e-11 * 10.0 / (-math.log(0.99) * 1.0 * 1e-6)
    assert value == pytest.approx(expected)


def test_chance_threshold_unit_log(broadside_target):
    # -ln(1 - ν) = 1 leaves the bare radar-equation term
    outage = 1.0 - math.exp(-1.0)
    value = chance_threshold(broadside_target, mean_rcs=2.0, outage=outage, reference_loss=1e-3)
    assert value == pytest.approx(16 * math.pi * 16.0 * 1e-11 * 10.0 / (2.0 * 1e-6))


def test_outage_at_threshold_equals_tolerance(broadside_target):
    value = chance_threshold(broadside_target, 1.0, 0.05, 1e-3)
    assert outage_probability(value, broadside_target, 1.0, 1e-3) == pytest.approx(0.05)


def test_outage_decreases_with_pattern_value(broadside_target):
    values = np.geomspace(1.0, 1e4, 12)
    outages = [outage_probability(v, broadside_target, 1.0, 1e-3) for v in values]
    assert all(b < a for a, b in zip(outages, outages[1:]))
    assert outage_probability(0.0, broadside_target, 1.0, 1e-3) == 1.0


def test_snr_at_threshold_rcs(broadside_target):
    value = 3.7
    c = rcs_at_threshold(value, broadside_target, 1e-3)
    assert sensing_snr(c, 1e-3, broadside_target, value) == pytest.approx(broadside_target.snr_threshold)


@pytest.mark.parametrize("outage", [0.0, 1.0, -0.1])
def test_chance_threshold_rejects_tolerance(broadside_target, outage):
    with pytest.raises(InvalidParameterError):
        chance_threshold(broadside_target, 1.0, outage, 1e-3)


def test_target_validation():
    with pytest.raises(InvalidParameterError):
        Target(0.0, 0.0, range_m=-1.0, snr_threshold=10.0, noise_var=1e-11)
    with pytest.raises(InvalidParameterError):
        TargetSpec((), outage=1.5)


def test_ideal_pattern_box(broadside_target):
    angles = uniform_angles(7)
    np.testing.assert_allclose(angles[[0, 3, 6]], [-np.pi / 2, 0.0, np.pi / 2])
    pattern = ideal_pattern(angles, angles, math.radians(5), math.radians(35), [broadside_target])
    # elevation row 0 only; azimuths -30, 0 and 30 degrees
    assert pattern.sum() == 3
    assert pattern[3, 2] == pattern[3, 3] == pattern[3, 4] == 1.0


def test_beam_grid_directions_follow_pattern_order(broadside_target):
    grid = make_beam_grid(TargetSpec((broadside_target,)), 5, 3)
    theta, phi = grid.directions()
    assert theta.size == grid.L * grid.Q == 15
    flat = int(np.argmax(grid.pattern.ravel()))
    assert theta[flat] == pytest.approx(0.0) and phi[flat] == pytest.approx(0.0)
    assert grid.with_mse_cap(2.0).mse_cap == 2.0 and grid.mse_cap is None


def test_beampattern_mse():
    pattern = np.array([[1.0, 0.0], [0.0, 1.0]])
    responses = np.ones((4, 2), dtype=complex)
    zero = np.zeros((2, 2))
    assert beampattern_mse(0.0, pattern, responses, [], zero) == pytest.approx(0.0)
    assert beampattern_mse(2.0, pattern, responses, [], zero) == pytest.approx(2.0)
    # all-ones steering sees the sum of the covariance entries
    Y = np.eye(2) * 0.5
    assert beampattern_mse(1.0, pattern, responses, [zero], Y) == pytest.approx(0.5)


def test_beampattern_value():
    a = np.array([1.0, 1j])
    F = np.outer(a, a.conj())
    assert beampattern_value(a, F, np.zeros((2, 2))) == pytest.approx(4.0)


def test_sample_rcs_mean():
    draws = sample_rcs(2.0, np.random.default_rng(0), 200_000)
    assert draws.mean() == pytest.approx(2.0, rel=0.02)


def test_larger_mean_rcs_lowers_outage(broadside_target):
    value = chance_threshold(broadside_target, 1.0, 0.01, 1e-3)
    assert outage_probability(value, broadside_target, 2.0, 1e-3) < 0.01
    assert outage_probability(2 * value, broadside_target, 1.0, 1e-3) < 0.01
