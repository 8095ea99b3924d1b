"""Solver-agnostic conic programs and the cvxpy backend that solves them.

A program is a linear objective over named matrix variables plus a list of
affine equality, inequality, second-order-cone and LMI constraints. Every
affine expression is stored as coefficient matrices acting on the row-major
vectorization of each variable, so residuals can be checked numerically
against the returned values without going back through the modeling layer.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Protocol, Sequence, Union

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from app.metrics import CONIC_SOLVE_SECONDS, CONIC_SOLVES_TOTAL

from .errors import DimensionMismatchError, MalformedProgramError, NumericalFailureError

logger = logging.getLogger(__name__)

Coefficient = Union[np.ndarray, sp.spmatrix]


class VarKind(str, Enum):
    REAL = "real"
    SYMMETRIC = "symmetric"
    HERMITIAN = "hermitian"


@dataclass(frozen=True)
class Variable:
    name: str
    shape: tuple[int, ...]
    kind: VarKind = VarKind.REAL
    psd: bool = False
    nonneg: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        square = len(self.shape) == 2 and self.shape[0] == self.shape[1]
        if (self.psd or self.kind is not VarKind.REAL) and not square:
            raise MalformedProgramError(f"variable {self.name!r} must be square, got {self.shape}")
        if self.nonneg and self.kind is VarKind.HERMITIAN:
            raise MalformedProgramError(f"complex variable {self.name!r} cannot be nonneg")

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=int)) if self.shape else 1

    @property
    def is_complex(self) -> bool:
        return self.kind is VarKind.HERMITIAN


def _as_coefficient(coef: Coefficient, var: Variable, rows: int) -> sp.csr_matrix:
    matrix = sp.csr_matrix(coef)
    if matrix.shape != (rows, var.size):
        raise DimensionMismatchError(
            f"coefficient {matrix.shape} does not act on {var.name!r} ({rows} x {var.size})"
        )
    if not var.is_complex and np.iscomplexobj(matrix.data):
        matrix = sp.csr_matrix(matrix.real)
    return matrix


class Affine:
    """Vector-valued affine map ``constant + Re(sum G_v @ vec(X_v))``."""

    __slots__ = ("constant", "terms")
    __array_ufunc__ = None

    def __init__(
        self,
        constant: np.ndarray | float,
        terms: Mapping[str, tuple[Variable, Coefficient]] | None = None,
    ) -> None:
        self.constant = np.atleast_1d(np.asarray(constant, dtype=float)).astype(float).ravel()
        self.terms: dict[str, tuple[Variable, sp.csr_matrix]] = {}
        for name, (var, coef) in (terms or {}).items():
            self.terms[name] = (var, _as_coefficient(coef, var, self.size))

    @property
    def size(self) -> int:
        return int(self.constant.size)

    @property
    def variables(self) -> list[Variable]:
        return [var for var, _ in self.terms.values()]

    # builders

    @classmethod
    def zeros(cls, rows: int) -> "Affine":
        return cls(np.zeros(rows))

    @classmethod
    def linear(cls, var: Variable, coef: Coefficient, constant: np.ndarray | float = 0.0) -> "Affine":
        rows = sp.csr_matrix(coef).shape[0]
        return cls(np.broadcast_to(np.asarray(constant, dtype=float), (rows,)), {var.name: (var, coef)})

    @classmethod
    def quadratic_forms(cls, var: Variable, vectors: np.ndarray) -> "Affine":
        """One row per vector x: x^H X x."""
        vectors = np.atleast_2d(vectors)
        n = var.shape[0]
        if vectors.shape[1] != n:
            raise DimensionMismatchError(f"vectors of length {vectors.shape[1]} vs {var.name} {var.shape}")
        coef = np.einsum("pi,pj->pij", vectors.conj(), vectors).reshape(vectors.shape[0], n * n)
        return cls.linear(var, coef)

    @classmethod
    def trace(cls, var: Variable, weight: np.ndarray | None = None) -> "Affine":
        """tr(A X); A defaults to the identity."""
        n = var.shape[0]
        A = np.eye(n) if weight is None else np.asarray(weight)
        if A.shape != (n, n):
            raise DimensionMismatchError(f"trace weight {A.shape} vs {var.name} {var.shape}")
        return cls.linear(var, A.T.reshape(1, n * n))

    @classmethod
    def entries(cls, var: Variable, flat_indices: Sequence[int] | np.ndarray) -> "Affine":
        """Selected entries of vec(X) (row-major), one row each."""
        idx = np.asarray(flat_indices, dtype=int).ravel()
        coef = sp.csr_matrix((np.ones(idx.size), (np.arange(idx.size), idx)), shape=(idx.size, var.size))
        return cls.linear(var, coef)

    @classmethod
    def stack(cls, parts: Sequence["Affine"]) -> "Affine":
        parts = [p for p in parts if p.size]
        if not parts:
            return cls.zeros(0)
        constant = np.concatenate([p.constant for p in parts])
        variables: dict[str, Variable] = {}
        for part in parts:
            for name, (var, _) in part.terms.items():
                variables.setdefault(name, var)
        terms = {}
        for name, var in variables.items():
            blocks = [
                part.terms[name][1] if name in part.terms else sp.csr_matrix((part.size, var.size))
                for part in parts
            ]
            terms[name] = (var, sp.vstack(blocks, format="csr"))
        return cls(constant, terms)

    # arithmetic

    def _combine(self, other: "Affine", sign: float) -> "Affine":
        if other.size != self.size:
            if other.size == 1 and not other.terms:
                other = Affine(np.full(self.size, other.constant[0]))
            elif self.size == 1 and not self.terms:
                return Affine(np.full(other.size, self.constant[0]))._combine(other, sign)
            else:
                raise DimensionMismatchError(f"cannot combine affine maps of size {self.size} and {other.size}")
        terms = dict(self.terms)
        for name, (var, coef) in other.terms.items():
            if name in terms:
                terms[name] = (var, terms[name][1] + sign * coef)
            else:
                terms[name] = (var, sign * coef)
        return Affine(self.constant + sign * other.constant, terms)

    @staticmethod
    def _lift(value: "Affine | float | np.ndarray") -> "Affine":
        return value if isinstance(value, Affine) else Affine(value)

    def __add__(self, other):
        return self._combine(self._lift(other), 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(self._lift(other), -1.0)

    def __rsub__(self, other):
        return self._lift(other)._combine(self, -1.0)

    def __neg__(self) -> "Affine":
        return self * -1.0

    def __mul__(self, factor: float) -> "Affine":
        factor = float(factor)
        return Affine(self.constant * factor, {n: (v, c * factor) for n, (v, c) in self.terms.items()})

    __rmul__ = __mul__

    def sum(self) -> "Affine":
        ones = sp.csr_matrix(np.ones((1, self.size)))
        return Affine(
            np.array([self.constant.sum()]), {n: (v, ones @ c) for n, (v, c) in self.terms.items()}
        )

    def select(self, rows: Sequence[int] | np.ndarray) -> "Affine":
        rows = np.asarray(rows, dtype=int)
        return Affine(self.constant[rows], {n: (v, c[rows]) for n, (v, c) in self.terms.items()})

    def scale(self) -> float:
        """Largest magnitude among coefficients and constant (1.0 for an empty map)."""
        magnitudes = [float(np.abs(self.constant).max(initial=0.0))]
        magnitudes += [float(abs(c).max()) if c.nnz else 0.0 for _, c in self.terms.values()]
        biggest = max(magnitudes)
        return biggest if biggest > 0 else 1.0

    def row_normalized(self) -> "Affine":
        """Scale every row by its own largest magnitude."""
        if not self.size:
            return self
        row_max = np.abs(self.constant)
        for _, coef in self.terms.values():
            row_max = np.maximum(row_max, abs(coef).max(axis=1).toarray().ravel())
        row_max[row_max == 0] = 1.0
        inv = sp.diags(1.0 / row_max)
        return Affine(self.constant / row_max, {n: (v, inv @ c) for n, (v, c) in self.terms.items()})

    def evaluate(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        out = self.constant.copy()
        for name, (var, coef) in self.terms.items():
            x = np.asarray(values[name]).reshape(-1)
            out += np.real(coef @ x)
        return out


class MatrixOp(str, Enum):
    NONE = "none"
    TRANSPOSE = "transpose"


@dataclass(frozen=True, eq=False)
class MatrixTerm:
    """left @ op(X) @ right."""

    variable: Variable
    left: np.ndarray | None = None
    right: np.ndarray | None = None
    op: MatrixOp = MatrixOp.NONE


class MatrixAffine:
    """Matrix-valued affine expression used for LMI blocks."""

    __slots__ = ("shape", "constant", "terms")

    def __init__(self, shape: tuple[int, int], constant: np.ndarray | None = None, terms=()) -> None:
        self.shape = (int(shape[0]), int(shape[1]))
        self.constant = np.zeros(self.shape, dtype=complex) if constant is None else np.asarray(constant)
        if self.constant.shape != self.shape:
            raise DimensionMismatchError(f"constant {self.constant.shape} vs block {self.shape}")
        self.terms: tuple[MatrixTerm, ...] = tuple(terms)

    @classmethod
    def of(cls, var: Variable) -> "MatrixAffine":
        return cls(var.shape, None, (MatrixTerm(var),))

    @classmethod
    def fixed(cls, matrix: np.ndarray) -> "MatrixAffine":
        matrix = np.asarray(matrix)
        return cls(matrix.shape, matrix)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "MatrixAffine":
        return cls((rows, cols))

    @staticmethod
    def _term_shape(term: MatrixTerm) -> tuple[int, int]:
        rows, cols = term.variable.shape
        if term.op is MatrixOp.TRANSPOSE:
            rows, cols = cols, rows
        if term.left is not None:
            rows = term.left.shape[0]
        if term.right is not None:
            cols = term.right.shape[1]
        return rows, cols

    def __matmul__(self, right: np.ndarray) -> "MatrixAffine":
        right = np.asarray(right)
        terms = [
            MatrixTerm(t.variable, t.left, right if t.right is None else t.right @ right, t.op)
            for t in self.terms
        ]
        return MatrixAffine((self.shape[0], right.shape[1]), self.constant @ right, terms)

    def __rmatmul__(self, left: np.ndarray) -> "MatrixAffine":
        left = np.asarray(left)
        terms = [
            MatrixTerm(t.variable, left if t.left is None else left @ t.left, t.right, t.op)
            for t in self.terms
        ]
        return MatrixAffine((left.shape[0], self.shape[1]), left @ self.constant, terms)

    def __add__(self, other: "MatrixAffine") -> "MatrixAffine":
        if other.shape != self.shape:
            raise DimensionMismatchError(f"cannot add blocks {self.shape} and {other.shape}")
        return MatrixAffine(self.shape, self.constant + other.constant, self.terms + other.terms)

    @property
    def H(self) -> "MatrixAffine":
        """Conjugate transpose; (L op(X) R)^H = R^H op(X)^H L^H."""
        terms = []
        for t in self.terms:
            if t.variable.kind is VarKind.REAL:
                op = MatrixOp.NONE if t.op is MatrixOp.TRANSPOSE else MatrixOp.TRANSPOSE
            else:
                op = t.op
            terms.append(
                MatrixTerm(
                    t.variable,
                    None if t.right is None else t.right.conj().T,
                    None if t.left is None else t.left.conj().T,
                    op,
                )
            )
        return MatrixAffine((self.shape[1], self.shape[0]), self.constant.conj().T, terms)

    def evaluate(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        out = np.array(self.constant, dtype=complex)
        for t in self.terms:
            X = np.asarray(values[t.variable.name])
            if t.op is MatrixOp.TRANSPOSE:
                X = X.T
            if t.left is not None:
                X = t.left @ X
            if t.right is not None:
                X = X @ t.right
            out = out + X
        return out


@dataclass(frozen=True, eq=False)
class Equality:
    expr: Affine
    label: str = ""


@dataclass(frozen=True, eq=False)
class Inequality:
    """expr >= 0 elementwise."""

    expr: Affine
    label: str = ""


@dataclass(frozen=True, eq=False)
class SecondOrderCone:
    """||vector||_2 <= bound."""

    vector: Affine
    bound: Affine
    label: str = ""


@dataclass(frozen=True, eq=False)
class LinearMatrixInequality:
    """Block matrix (Hermitian part) is PSD."""

    blocks: tuple[tuple[MatrixAffine, ...], ...]
    label: str = ""

    @property
    def dimension(self) -> int:
        return sum(row[0].shape[0] for row in self.blocks)

    def evaluate(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        E = np.block([[block.evaluate(values) for block in row] for row in self.blocks])
        return (E + E.conj().T) / 2.0


Constraint = Union[Equality, Inequality, SecondOrderCone, LinearMatrixInequality]


def _constraint_variables(constraint: Constraint) -> list[Variable]:
    if isinstance(constraint, (Equality, Inequality)):
        return constraint.expr.variables
    if isinstance(constraint, SecondOrderCone):
        return constraint.vector.variables + constraint.bound.variables
    return [t.variable for row in constraint.blocks for block in row for t in block.terms]


@dataclass(frozen=True, eq=False)
class ConicProgram:
    variables: tuple[Variable, ...]
    objective: Affine
    constraints: tuple[Constraint, ...]
    name: str = "program"

    def __post_init__(self) -> None:
        declared = {}
        for var in self.variables:
            if var.name in declared:
                raise MalformedProgramError(f"variable {var.name!r} declared twice")
            declared[var.name] = var
        if self.objective.size != 1:
            raise MalformedProgramError(f"objective must be scalar, got size {self.objective.size}")
        referenced = list(self.objective.variables)
        for constraint in self.constraints:
            referenced += _constraint_variables(constraint)
            if isinstance(constraint, SecondOrderCone) and constraint.bound.size != 1:
                raise MalformedProgramError(f"cone bound of {constraint.label!r} must be scalar")
            if isinstance(constraint, LinearMatrixInequality):
                _check_blocks(constraint)
        for var in referenced:
            if declared.get(var.name) != var:
                raise MalformedProgramError(f"{self.name}: variable {var.name!r} is not declared")

    def dumps(self) -> str:
        """Structured-text dump: variable table and constraints with (row, col, value) triplets."""

        def triplets(affine: Affine) -> dict:
            out = {"constant": affine.constant.tolist(), "terms": {}}
            for name, (_, coef) in affine.terms.items():
                coo = coef.tocoo()
                out["terms"][name] = [
                    [int(r), int(c), [float(np.real(v)), float(np.imag(v))]]
                    for r, c, v in zip(coo.row, coo.col, coo.data)
                ]
            return out

        def matrix_block(block: MatrixAffine) -> dict:
            return {
                "shape": list(block.shape),
                "constant_norm": float(np.linalg.norm(block.constant)),
                "terms": [
                    {"variable": t.variable.name, "op": t.op.value, "left": t.left is not None,
                     "right": t.right is not None}
                    for t in block.terms
                ],
            }

        constraints = []
        for c in self.constraints:
            entry: dict = {"type": type(c).__name__, "label": c.label}
            if isinstance(c, (Equality, Inequality)):
                entry["expr"] = triplets(c.expr)
            elif isinstance(c, SecondOrderCone):
                entry["vector"] = triplets(c.vector)
                entry["bound"] = triplets(c.bound)
            else:
                entry["blocks"] = [[matrix_block(b) for b in row] for row in c.blocks]
            constraints.append(entry)
        document = {
            "name": self.name,
            "variables": [
                {"name": v.name, "shape": list(v.shape), "kind": v.kind.value, "psd": v.psd,
                 "nonneg": v.nonneg}
                for v in self.variables
            ],
            "objective": triplets(self.objective),
            "constraints": constraints,
        }
        return json.dumps(document)


def _check_blocks(lmi: LinearMatrixInequality) -> None:
    rows = lmi.blocks
    if not rows or any(len(row) != len(rows[0]) for row in rows):
        raise MalformedProgramError(f"LMI {lmi.label!r} block grid is ragged")
    for i, row in enumerate(rows):
        for j, block in enumerate(row):
            if block.shape[0] != row[0].shape[0] or block.shape[1] != rows[0][j].shape[1]:
                raise MalformedProgramError(f"LMI {lmi.label!r} block ({i}, {j}) has shape {block.shape}")
            for term in block.terms:
                if MatrixAffine._term_shape(term) != block.shape:
                    raise MalformedProgramError(
                        f"LMI {lmi.label!r} term on {term.variable.name!r} does not fit block ({i}, {j})"
                    )
    if lmi.dimension != sum(block.shape[1] for block in rows[0]):
        raise MalformedProgramError(f"LMI {lmi.label!r} is not square")


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True, eq=False)
class ConicSolution:
    status: SolveStatus
    values: dict[str, np.ndarray] = field(default_factory=dict)
    objective: float = math.nan
    primal_residual: float = math.inf
    psd_violation: float = math.inf
    solve_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


@dataclass(frozen=True)
class SolverOptions:
    feasibility_tol: float = 1e-7
    psd_tol: float = 1e-7
    # residuals up to this multiple of the tolerances are still reported as optimal
    acceptance_factor: float = 100.0
    backend: str = "CLARABEL"

    @classmethod
    def from_settings(cls) -> "SolverOptions":
        from django.conf import settings

        return cls(
            feasibility_tol=settings.ISAC_FEASIBILITY_TOL,
            psd_tol=settings.ISAC_PSD_TOL,
            backend=settings.ISAC_SOLVER,
        )


class ConicBackend(Protocol):
    def solve(self, program: ConicProgram, options: SolverOptions) -> ConicSolution: ...


_SOLVER_KWARGS = {
    "CLARABEL": lambda tol: {"tol_feas": tol, "tol_gap_abs": tol, "tol_gap_rel": tol},
    "SCS": lambda tol: {"eps": tol, "max_iters": 100000},
    "CVXOPT": lambda tol: {"feastol": tol, "abstol": tol, "reltol": tol},
}

_STATUS_MAP = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    cp.UNBOUNDED: SolveStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolveStatus.UNBOUNDED,
}


class CvxpyBackend:
    """Compile the IR to cvxpy and solve it with an installed conic solver."""

    def _declare(self, var: Variable) -> tuple[cp.Variable, cp.Expression, list]:
        extra = []
        if var.kind is VarKind.HERMITIAN:
            x = cp.Variable(var.shape, hermitian=True, name=var.name)
            if var.psd:
                extra.append(x >> 0)
        elif var.kind is VarKind.SYMMETRIC or var.psd:
            x = cp.Variable(var.shape, PSD=True, name=var.name) if var.psd else cp.Variable(
                var.shape, symmetric=True, name=var.name
            )
        else:
            x = cp.Variable(var.shape, nonneg=var.nonneg, name=var.name)
        flat = cp.reshape(x, (var.size,), order="C") if var.shape != (var.size,) else x
        return x, flat, extra

    @staticmethod
    def _affine(affine: Affine, flats: Mapping[str, cp.Expression], variables: Mapping[str, Variable]):
        expr = cp.Constant(affine.constant)
        for name, (var, coef) in affine.terms.items():
            product = cp.Constant(coef) @ flats[name]
            expr = expr + (cp.real(product) if variables[name].is_complex else product)
        return expr

    @staticmethod
    def _matrix(block: MatrixAffine, matrices: Mapping[str, cp.Variable]):
        expr = cp.Constant(block.constant)
        for t in block.terms:
            X = matrices[t.variable.name]
            if t.op is MatrixOp.TRANSPOSE:
                X = X.T
            if t.left is not None:
                X = cp.Constant(t.left) @ X
            if t.right is not None:
                X = X @ cp.Constant(t.right)
            expr = expr + X
        return expr

    def solve(self, program: ConicProgram, options: SolverOptions) -> ConicSolution:
        variables = {v.name: v for v in program.variables}
        matrices, flats, constraints = {}, {}, []
        for var in program.variables:
            matrices[var.name], flats[var.name], extra = self._declare(var)
            constraints += extra
        for c in program.constraints:
            if isinstance(c, Equality):
                constraints.append(self._affine(c.expr, flats, variables) == 0)
            elif isinstance(c, Inequality):
                constraints.append(self._affine(c.expr, flats, variables) >= 0)
            elif isinstance(c, SecondOrderCone):
                bound = self._affine(c.bound, flats, variables)
                constraints.append(cp.SOC(bound[0], self._affine(c.vector, flats, variables)))
            else:
                E = cp.bmat([[self._matrix(b, matrices) for b in row] for row in c.blocks])
                constraints.append((E + E.H) / 2 >> 0)
        objective = cp.Minimize(self._affine(program.objective, flats, variables)[0])
        problem = cp.Problem(objective, constraints)
        kwargs = _SOLVER_KWARGS.get(options.backend, lambda tol: {})(options.feasibility_tol)
        try:
            problem.solve(solver=options.backend, **kwargs)
        except cp.error.SolverError as exc:
            logger.warning(
                "solver_error", extra={"event": "solver_error", "program": program.name, "error": str(exc)}
            )
            return ConicSolution(SolveStatus.NUMERICAL_FAILURE)

        values = {}
        for name, var in variables.items():
            value = matrices[name].value
            if value is None:
                value = np.zeros(var.shape, dtype=complex if var.is_complex else float)
            value = np.asarray(value).reshape(var.shape)
            if var.is_complex:
                value = (value + value.conj().T) / 2.0
            elif var.kind is VarKind.SYMMETRIC or var.psd:
                value = (value + value.T) / 2.0
            values[name] = value
        status = _STATUS_MAP.get(problem.status, SolveStatus.NUMERICAL_FAILURE)
        if problem.status == cp.OPTIMAL_INACCURATE:
            status = SolveStatus.OPTIMAL  # confirmed or rejected by the residual check in solve()
        objective_value = float(program.objective.evaluate(values)[0]) if status is SolveStatus.OPTIMAL else math.nan
        return ConicSolution(status, values, objective_value)


def _residuals(program: ConicProgram, values: Mapping[str, np.ndarray]) -> tuple[float, float]:
    primal, psd = 0.0, 0.0
    for c in program.constraints:
        if isinstance(c, Equality):
            v = c.expr.evaluate(values)
            primal = max(primal, float(np.max(np.abs(v) / (1.0 + np.abs(c.expr.constant)), initial=0.0)))
        elif isinstance(c, Inequality):
            v = c.expr.evaluate(values)
            primal = max(primal, float(np.max(-v / (1.0 + np.abs(c.expr.constant)), initial=0.0)))
        elif isinstance(c, SecondOrderCone):
            gap = np.linalg.norm(c.vector.evaluate(values)) - c.bound.evaluate(values)[0]
            primal = max(primal, float(gap / (1.0 + abs(c.bound.constant[0]))))
        else:
            smallest = float(np.linalg.eigvalsh(c.evaluate(values))[0])
            psd = max(psd, -smallest)
    for var in program.variables:
        value = values[var.name]
        if var.psd:
            psd = max(psd, -float(np.linalg.eigvalsh(value)[0]))
        if var.nonneg:
            primal = max(primal, -float(np.min(value, initial=0.0)))
    return max(primal, 0.0), max(psd, 0.0)


_DEFAULT_BACKEND = CvxpyBackend()


def solve(
    program: ConicProgram, options: SolverOptions | None = None, backend: ConicBackend | None = None
) -> ConicSolution:
    """Solve ``program`` and check primal feasibility of the returned point.

    Infeasible, unbounded and failed solves come back as statuses.
    """
    options = options or SolverOptions()
    backend = backend or _DEFAULT_BACKEND
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug(
            "conic_program",
            extra={"event": "conic_program", "program": program.name, "dump": program.dumps()},
        )
    started = time.perf_counter()
    result = backend.solve(program, options)
    elapsed = time.perf_counter() - started

    status = result.status
    primal, psd = math.inf, math.inf
    if status is SolveStatus.OPTIMAL:
        primal, psd = _residuals(program, result.values)
        limit = options.acceptance_factor
        if primal > limit * options.feasibility_tol or psd > limit * options.psd_tol:
            logger.warning(
                "residual_check_failed",
                extra={"event": "residual_check_failed", "program": program.name,
                       "primal_residual": primal, "psd_violation": psd},
            )
            status = SolveStatus.NUMERICAL_FAILURE
    CONIC_SOLVES_TOTAL.labels(program=program.name, status=status.value).inc()
    CONIC_SOLVE_SECONDS.labels(program=program.name).observe(elapsed)
    logger.debug(
        "conic_solved",
        extra={"event": "conic_solved", "program": program.name, "status": status.value,
               "objective": result.objective, "seconds": round(elapsed, 4)},
    )
    return ConicSolution(
        status=status,
        values=result.values,
        objective=result.objective if status is SolveStatus.OPTIMAL else math.nan,
        primal_residual=primal,
        psd_violation=psd,
        solve_seconds=elapsed,
    )


def extract_rank_one(W: np.ndarray, tol_ratio: float = 1e-6) -> tuple[np.ndarray, bool]:
    """Dominant eigen-beam sqrt(λ1) u1 of a Hermitian PSD matrix, plus the rank-one verdict λ2/λ1 <= tol."""
    W = np.asarray(W)
    W = (W + W.conj().T) / 2.0
    n = W.shape[0]
    if not np.any(W):
        return np.zeros(n, dtype=complex), True
    eigenvalues, eigenvectors = np.linalg.eigh(W)
    lam1 = float(eigenvalues[-1])
    if lam1 <= 0:
        raise NumericalFailureError(f"matrix with trace {np.trace(W).real:.3g} has no positive eigenvalue")
    u = eigenvectors[:, -1]
    # fix the global phase: largest entry real and positive
    w = math.sqrt(lam1) * u * np.exp(-1j * np.angle(u[np.argmax(np.abs(u))]))
    lam2 = float(eigenvalues[-2]) if n > 1 else 0.0
    return w.astype(complex), max(lam2, 0.0) / lam1 <= tol_ratio
