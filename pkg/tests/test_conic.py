import json

import numpy as np
import pytest

from isac.conic import (
    Affine,
    ConicProgram,
    Equality,
    Inequality,
    LinearMatrixInequality,
    MatrixAffine,
    SecondOrderCone,
    SolveStatus,
    Variable,
    VarKind,
    extract_rank_one,
    solve,
)
from isac.errors import MalformedProgramError


def _scalar(name="x", **kwargs):
    return Variable(name, (1,), VarKind.REAL, **kwargs)


def test_linear_program():
    x = _scalar()
    program = ConicProgram(
        variables=(x,),
        objective=Affine.linear(x, [[1.0]]),
        constraints=(Inequality(Affine.linear(x, [[1.0]], -1.0), label="floor"),),
    )
    solution = solve(program)
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.objective == pytest.approx(1.0, abs=1e-6)
    assert solution.primal_residual < 1e-5


def test_infeasible_program():
    x = _scalar()
    program = ConicProgram(
        variables=(x,),
        objective=Affine.linear(x, [[1.0]]),
        constraints=(
            Inequality(Affine.linear(x, [[1.0]], -1.0)),
            Inequality(Affine.linear(x, [[-1.0]])),
        ),
    )
    solution = solve(program)
    assert solution.status is SolveStatus.INFEASIBLE
    assert not solution.ok


def test_hermitian_sdp():
    # min tr X  s.t.  a^H X a >= 1  ->  X = a a^H / |a|^4
    X = Variable("X", (2, 2), VarKind.HERMITIAN, psd=True)
    a = np.array([1.0, 1j])
    program = ConicProgram(
        variables=(X,),
        objective=Affine.trace(X),
        constraints=(Inequality(Affine.quadratic_forms(X, a[None, :]) - 1.0),),
    )
    solution = solve(program)
    assert solution.ok
    assert solution.objective == pytest.approx(0.5, rel=1e-5)
    value = solution.values["X"]
    np.testing.assert_allclose(value, value.conj().T)
    assert np.real(a.conj() @ value @ a) == pytest.approx(1.0, rel=1e-5)


def test_second_order_cone():
    # min t  s.t.  ||(x - 3, 4)|| <= t, x = 3  ->  t = 4
    x = _scalar()
    t = _scalar("t")
    vector = Affine.stack([Affine.linear(x, [[1.0]], -3.0), Affine(np.array([4.0]))])
    program = ConicProgram(
        variables=(x, t),
        objective=Affine.linear(t, [[1.0]]),
        constraints=(
            SecondOrderCone(vector, Affine.linear(t, [[1.0]])),
            Equality(Affine.linear(x, [[1.0]], -3.0)),
        ),
    )
    assert solve(program).objective == pytest.approx(4.0, rel=1e-6)


def test_linear_matrix_inequality():
    # [[t, 1], [1, t]] PSD  ->  t >= 1
    t = Variable("t", (1, 1))
    one = MatrixAffine.fixed(np.ones((1, 1)))
    lmi = LinearMatrixInequality(((MatrixAffine.of(t), one), (one, MatrixAffine.of(t))), label="pair")
    program = ConicProgram((t,), Affine.linear(t, [[1.0]]), (lmi,))
    solution = solve(program)
    assert solution.ok
    assert solution.objective == pytest.approx(1.0, abs=1e-6)
    assert solution.psd_violation < 1e-6


def test_undeclared_variable_is_malformed():
    x, y = _scalar(), _scalar("y")
    with pytest.raises(MalformedProgramError):
        ConicProgram((x,), Affine.linear(x, [[1.0]]), (Inequality(Affine.linear(y, [[1.0]])),))


def test_duplicate_and_shape_errors():
    x = _scalar()
    with pytest.raises(MalformedProgramError):
        ConicProgram((x, x), Affine.linear(x, [[1.0]]), ())
    with pytest.raises(MalformedProgramError):
        ConicProgram((x,), Affine.linear(x, [[1.0], [1.0]]), ())
    with pytest.raises(MalformedProgramError):
        Variable("H", (2, 3), VarKind.HERMITIAN)


def test_ragged_lmi_is_malformed():
    t = Variable("t", (1, 1))
    lmi = LinearMatrixInequality(((MatrixAffine.of(t),), (MatrixAffine.of(t), MatrixAffine.of(t))))
    with pytest.raises(MalformedProgramError):
        ConicProgram((t,), Affine.linear(t, [[1.0]]), (lmi,))


def test_dumps_lists_variables_and_triplets():
    x = _scalar(nonneg=True)
    program = ConicProgram(
        (x,), Affine.linear(x, [[2.0]]), (Inequality(Affine.linear(x, [[1.0]], -1.0), label="floor"),),
        name="tiny",
    )
    document = json.loads(program.dumps())
    assert document["name"] == "tiny"
    assert document["variables"][0] == {"name": "x", "shape": [1], "kind": "real", "psd": False, "nonneg": True}
    assert document["objective"]["terms"]["x"] == [[0, 0, [2.0, 0.0]]]
    assert document["constraints"][0]["label"] == "floor"


def test_affine_arithmetic():
    x = Variable("x", (2,))
    expr = 2.0 * Affine.linear(x, np.eye(2), 1.0) - Affine.linear(x, [[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(expr.evaluate({"x": np.array([3.0, 4.0])}), [5.0, 10.0])
    np.testing.assert_allclose(expr.sum().evaluate({"x": np.array([3.0, 4.0])}), [15.0])
    normalized = Affine.linear(x, [[10.0, 0.0], [0.0, 0.5]]).row_normalized()
    np.testing.assert_allclose(normalized.evaluate({"x": np.ones(2)}), [1.0, 1.0])


def test_extract_rank_one():
    w = np.array([1.0 + 1j, 2.0 - 0.5j])
    beam, rank_one = extract_rank_one(np.outer(w, w.conj()))
    assert rank_one
    np.testing.assert_allclose(np.outer(beam, beam.conj()), np.outer(w, w.conj()), atol=1e-12)
    _, rank_one = extract_rank_one(np.eye(2))
    assert not rank_one
    beam, rank_one = extract_rank_one(np.zeros((2, 2)))
    assert rank_one and not np.any(beam)
