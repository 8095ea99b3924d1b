import itertools

import numpy as np
import pytest

from isac.beamforming import beamform
from isac.conic import Inequality, SolveStatus
from isac.errors import DimensionMismatchError, InvalidParameterError
from isac.evaluation import build_instance
from isac.geometry import Placement, build_grid, check_min_distance, distance_matrix, expand_block_matrix
from isac.placement import (
    AOConfig,
    AuxiliaryBlocks,
    LinearizationPoint,
    antenna_pairs,
    ao_run,
    assemble_p2,
    binary_violation,
    glover_constraints,
    glover_feasible,
    has_converged,
    initial_placements,
    is_near_binary,
    pair_products,
    placement_variables,
    repair_rounding,
    rounding_candidates,
    schur_lmi,
    solve_p2,
    taylor_penalty_terms,
)

from conftest import make_scenario


@pytest.fixture
def lattice():
    grid = build_grid(0.5, 0.015, 0.06)  # 3 x 3, M = 9
    return grid, distance_matrix(grid)


def _selection(indices, M):
    return Placement.from_indices(indices, M).matrix()


def test_antenna_pairs():
    assert antenna_pairs(3) == [(0, 1), (0, 2), (1, 2)]
    assert antenna_pairs(1) == []


def test_binary_violation():
    assert binary_violation(_selection([0, 3], 4)) == 0.0
    assert binary_violation(np.full((1, 2), 0.5)) == pytest.approx(0.5)


def test_pair_products_shape():
    phi = pair_products(_selection([0, 1, 2], 4))
    assert phi.shape == (3, 4, 4)
    assert phi[2, 1, 2] == 1.0 and phi.sum() == 3.0


def test_glover_matches_exact_distance_rule(lattice):
    grid, D = lattice
    d_min = 0.02
    for i, j in itertools.product(range(grid.M), repeat=2):
        selection = _selection([i, j], grid.M)
        exact = D[i, j] >= d_min
        assert glover_feasible(selection, pair_products(selection), D, d_min) == exact


def test_glover_constraints_encode_the_same_rule(lattice):
    grid, D = lattice
    d_min = 0.02
    B, phi = placement_variables(2, grid.M)
    constraints = glover_constraints(2, grid.M, D, d_min, B, phi)
    assert all(isinstance(c, Inequality) for c in constraints)
    for i, j in itertools.combinations(range(grid.M), 2):
        selection = _selection([i, j], grid.M)
        values = {"B": expand_block_matrix(selection), "phi": pair_products(selection).ravel()}
        satisfied = all(np.all(c.expr.evaluate(values) >= -1e-12) for c in constraints)
        assert satisfied == (D[i, j] >= d_min)


def test_glover_rejects_wrong_distance_matrix(lattice):
    grid, _ = lattice
    B, phi = placement_variables(2, grid.M)
    with pytest.raises(DimensionMismatchError):
        glover_constraints(2, grid.M, np.zeros((3, 3)), 0.01, B, phi)


def test_linearization_point_checks_shapes():
    with pytest.raises(DimensionMismatchError):
        LinearizationPoint(np.full((2, 4), 0.25), np.zeros((2, 4, 4)))
    point = LinearizationPoint.from_selection(np.full((2, 4), 0.25))
    assert point.phi.shape == (1, 4, 4)
    assert point.B.shape == (8, 2)


def test_taylor_terms_are_exact_at_the_point():
    selection = np.array([[0.7, 0.3, 0.0, 0.0], [0.1, 0.1, 0.4, 0.4]])
    point = LinearizationPoint.from_selection(selection)
    B, phi = placement_variables(2, 4)
    aux = AuxiliaryBlocks.declare(1, 8)
    W = [np.eye(2)]
    R = np.zeros((2, 2))
    terms = taylor_penalty_terms(point, W, R, B, phi, aux)
    values = {"B": point.B, "phi": point.phi.ravel(), "S0": np.zeros((8, 8)), "U": np.zeros((8, 8))}
    assert terms.binary.evaluate(values)[0] == pytest.approx(binary_violation(selection))
    assert terms.pairs.evaluate(values)[0] == pytest.approx(binary_violation(point.phi))
    Bt = point.B
    assert terms.comm.evaluate(values)[0] == pytest.approx(-np.trace(Bt @ Bt.T))


def test_schur_lmi_tight_at_the_product():
    B_var, _ = placement_variables(2, 3)
    aux = AuxiliaryBlocks.declare(1, 6)
    Q = np.array([[1.0, 0.5j], [-0.5j, 2.0]])
    lmi = schur_lmi(B_var, Q, aux.F[0], aux.S[0], aux.T[0], "comm")
    B = expand_block_matrix(np.array([[0.5, 0.5, 0.0], [0.0, 0.2, 0.8]]))
    values = {
        "B": B,
        "F0": B @ Q @ B.T,
        "S0": B @ Q @ Q.conj().T @ B.T,
        "T0": B @ B.T,
    }
    assert np.linalg.eigvalsh(lmi.evaluate(values))[0] >= -1e-9
    values["F0"] = values["F0"] + 0.1 * np.eye(6)
    assert np.linalg.eigvalsh(lmi.evaluate(values))[0] < -1e-6


def test_repair_moves_the_less_confident_antenna():
    D = distance_matrix(build_grid(0.5, 0.03, 0.06))
    selection = np.array([[0.9, 0.1, 0.0, 0.0], [0.6, 0.4, 0.0, 0.0]])
    assert repair_rounding(selection, D, 0.015) == [0, 1]


def test_rounding_candidates(lattice):
    _, D = lattice
    rng = np.random.default_rng(0)
    selection = rng.dirichlet(np.ones(9), size=2)
    candidates = rounding_candidates(selection, D, 0.02, limit=4)
    assert 1 <= len(candidates) <= 4
    assert candidates[0] == repair_rounding(selection, D, 0.02)
    for indices in candidates:
        assert len(set(indices)) == 2
        assert D[indices[0], indices[1]] >= 0.02
    assert len({tuple(sorted(c)) for c in candidates}) == len(candidates)


def test_is_near_binary():
    assert is_near_binary(np.array([[1.0 - 1e-5, 1e-5]]), 1e-3)
    assert not is_near_binary(np.array([[0.6, 0.4]]), 1e-3)


def test_convergence_needs_a_small_change_and_a_binary_selection():
    cfg = AOConfig(tolerance=1e-3, rounding_tol=1e-3)
    binary = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    fractional = np.array([[0.6, 0.4, 0.0], [0.0, 0.0, 1.0]])
    assert has_converged(2.0, 2.0 * (1 - 5e-4), binary, cfg)
    assert not has_converged(2.0, 2.0 * (1 - 5e-3), binary, cfg)
    # a flat objective alone does not stop the loop while positions are still split
    assert not has_converged(2.0, 2.0, fractional, cfg)


def test_initial_placements_are_distinct_and_spread(toy_cfg):
    scenario = build_instance(toy_cfg, 0, calibrate=False).proposed
    warm = Placement.from_indices([0, 3], scenario.M)
    starts = initial_placements(scenario, AOConfig(restarts=4), [warm, warm])
    assert starts[0].indices == (0, 3)
    keys = [tuple(sorted(p.indices)) for p in starts]
    assert len(keys) == len(set(keys))
    assert all(check_min_distance(p, scenario.distances).ok for p in starts)


def test_ao_config_validation():
    with pytest.raises(InvalidParameterError):
        AOConfig(penalties=(1.0, 1.0, 1.0))
    with pytest.raises(InvalidParameterError):
        AOConfig(penalty_growth=1.0)


def test_forced_placement_skips_iterations():
    scenario = make_scenario([[1e-3, 2e-3j]])
    result = ao_run(scenario)
    assert result.feasible
    assert result.iterations == 0
    assert result.placement.indices == (0, 1)
    assert len(result.trace.rows) == 1


def test_p2_step_returns_a_selection(toy_cfg):
    scenario = build_instance(toy_cfg, 0, calibrate=False).proposed
    start = Placement.from_indices([0, 3], scenario.M, scenario.d_min)
    beams = beamform(scenario, start)
    assert beams.feasible
    point = LinearizationPoint.from_selection(start.matrix())
    p2 = assemble_p2(scenario, beams, point, AOConfig().penalties, AOConfig())
    labels = {c.label for c in p2.program.constraints}
    assert {"sinr_0", "chance_0", "one_position_each", "schur_radar", "headroom_box"} <= labels
    step = solve_p2(p2)
    assert step.status is SolveStatus.OPTIMAL
    np.testing.assert_allclose(step.selection.sum(axis=1), 1.0)
    assert 0.0 <= step.headroom <= 0.9 + 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_ao_is_monotone_and_commits(toy_cfg, seed):
    instance = build_instance(toy_cfg, seed)
    scenario = instance.proposed
    cfg = AOConfig(max_iterations=10, seed=seed)
    result = ao_run(scenario, cfg)
    assert result.feasible
    assert result.trace.is_monotone()
    assert check_min_distance(result.placement, scenario.distances).ok
    spread = initial_placements(scenario, cfg)[0]
    assert result.power <= beamform(scenario, spread).power * (1 + 1e-6)
