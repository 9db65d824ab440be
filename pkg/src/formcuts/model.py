"""Core MIP model types: variables, linear expressions, constraints.

Models are plain data: once built they are treated as immutable, and
every solver/separator in the package works off the arrays returned by
:meth:`MipModel.to_arrays`. Coefficients are 64-bit floats throughout;
rationals are out of scope.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError

INT_TOL = 1e-6
FEAS_TOL = 1e-7


class VarKind(enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    INTEGER = "integer"

    @property
    def is_integer(self) -> bool:
        return self is not VarKind.CONTINUOUS


class Sense(enum.Enum):
    """Constraint sense. Values are the LP-file spellings."""

    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Variable:
    index: int
    name: str
    lower: float
    upper: float
    kind: VarKind
    tag: str = ""


@dataclass(frozen=True)
class LinearExpr:
    """Sparse linear expression: sorted (var index, coefficient) pairs.

    Terms are deduplicated, zero-free, and sorted by variable index, so
    structural equality of two expressions is tuple equality.
    """

    terms: tuple[tuple[int, float], ...]

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, float]] | Mapping[int, float]) -> "LinearExpr":
        acc: dict[int, float] = {}
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        for j, c in items:
            acc[int(j)] = acc.get(int(j), 0.0) + float(c)
        return LinearExpr(tuple(sorted((j, c) for j, c in acc.items() if c != 0.0)))

    def value(self, x: np.ndarray) -> float:
        return float(sum(c * x[j] for j, c in self.terms))

    def coeff(self, j: int) -> float:
        for i, c in self.terms:
            if i == j:
                return c
        return 0.0

    def scaled(self, f: float) -> "LinearExpr":
        return LinearExpr.from_pairs((j, c * f) for j, c in self.terms)

    def negated(self) -> "LinearExpr":
        return self.scaled(-1.0)

    def var_ids(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.terms)

    def as_dict(self) -> dict[int, float]:
        return {j: c for j, c in self.terms}

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class Constraint:
    expr: LinearExpr
    sense: Sense
    rhs: float
    tag: str

    def violation(self, x: np.ndarray) -> float:
        lhs = self.expr.value(x)
        if self.sense is Sense.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense is Sense.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class MipModel:
    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: LinearExpr

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_rows(self) -> int:
        return len(self.constraints)

    def int_var_ids(self) -> np.ndarray:
        return np.array([v.index for v in self.variables if v.kind.is_integer], dtype=np.int64)

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([v.lower for v in self.variables], dtype=np.float64)
        hi = np.array([v.upper for v in self.variables], dtype=np.float64)
        return lo, hi

    def objective_array(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, v in self.objective.terms:
            c[j] = v
        return c

    def to_arrays(self) -> "ModelArrays":
        """Materialize the constraint system as numpy/scipy arrays."""
        n, m = self.num_vars, self.num_rows
        rows, cols, vals = [], [], []
        senses = np.empty(m, dtype=np.int8)
        rhs = np.empty(m, dtype=np.float64)
        for i, con in enumerate(self.constraints):
            for j, c in con.expr.terms:
                rows.append(i)
                cols.append(j)
                vals.append(c)
            senses[i] = {Sense.LE: -1, Sense.EQ: 0, Sense.GE: 1}[con.sense]
            rhs[i] = con.rhs
        a = sp.csr_matrix((vals, (rows, cols)), shape=(m, n), dtype=np.float64)
        lo, hi = self.bounds_arrays()
        is_int = np.array([v.kind.is_integer for v in self.variables], dtype=bool)
        return ModelArrays(a=a, senses=senses, rhs=rhs, lo=lo, hi=hi,
                           is_int=is_int, c=self.objective_array())

    def validate(self) -> None:
        names = set()
        for i, v in enumerate(self.variables):
            if v.index != i:
                raise ValidationError(f"variable {v.name}: index {v.index} != position {i}")
            if v.name in names:
                raise ValidationError(f"duplicate variable name {v.name!r}")
            names.add(v.name)
            if not v.lower <= v.upper:
                raise ValidationError(f"variable {v.name}: lower {v.lower} > upper {v.upper}")
            if v.kind is VarKind.BINARY and (v.lower, v.upper) != (0.0, 1.0):
                raise ValidationError(f"binary variable {v.name} must have bounds [0, 1]")
        n = self.num_vars
        for con in self.constraints:
            for j, c in con.expr.terms:
                if not 0 <= j < n:
                    raise ValidationError(f"row {con.tag!r} references unknown variable {j}")
                if not math.isfinite(c):
                    raise ValidationError(f"row {con.tag!r} has non-finite coefficient")
            if not math.isfinite(con.rhs):
                raise ValidationError(f"row {con.tag!r} has non-finite rhs")
            if not con.tag:
                raise ValidationError("constraint tags are mandatory")
        for j, c in self.objective.terms:
            if not 0 <= j < n:
                raise ValidationError(f"objective references unknown variable {j}")
            if not math.isfinite(c):
                raise ValidationError("objective has non-finite coefficient")


@dataclass
class ModelArrays:
    a: sp.csr_matrix
    senses: np.ndarray  # -1 for <=, 0 for =, +1 for >=
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    is_int: np.ndarray
    c: np.ndarray


@dataclass
class Solution:
    values: np.ndarray
    objective: float


@dataclass
class FeasibilityReport:
    """Per-row / per-variable violation summary for one candidate point."""

    row_violations: np.ndarray
    bound_violations: np.ndarray
    fractionality: np.ndarray  # zero at continuous positions
    lp_feasible: bool
    integer_feasible: bool

    @property
    def max_violation(self) -> float:
        parts = [0.0]
        if self.row_violations.size:
            parts.append(float(self.row_violations.max()))
        if self.bound_violations.size:
            parts.append(float(self.bound_violations.max()))
        return max(parts)


class ModelBuilder:
    """Accumulates variables and rows, then freezes into a MipModel."""

    def __init__(self, name: str = "model"):
        self.name = name
        self._vars: list[Variable] = []
        self._names: set[str] = set()
        self._rows: list[Constraint] = []
        self._obj: LinearExpr = LinearExpr(())

    def add_var(self, name: str, lower: float, upper: float,
                kind: VarKind = VarKind.CONTINUOUS, tag: str = "") -> int:
        if name in self._names:
            raise ValidationError(f"duplicate variable name {name!r}")
        idx = len(self._vars)
        self._vars.append(Variable(idx, name, float(lower), float(upper), kind, tag))
        self._names.add(name)
        return idx

    def add_row(self, terms, sense: Sense, rhs: float, tag: str) -> int:
        expr = terms if isinstance(terms, LinearExpr) else LinearExpr.from_pairs(terms)
        self._rows.append(Constraint(expr, sense, float(rhs), tag))
        return len(self._rows) - 1

    def set_objective(self, terms) -> None:
        self._obj = terms if isinstance(terms, LinearExpr) else LinearExpr.from_pairs(terms)

    def build(self) -> MipModel:
        model = MipModel(self.name, tuple(self._vars), tuple(self._rows), self._obj)
        model.validate()
        return model


def check_feasibility(model: MipModel, point: Solution | np.ndarray,
                      feas_tol: float = FEAS_TOL, int_tol: float = INT_TOL) -> FeasibilityReport:
    """Measure how far a point is from satisfying the model.

    Raises ValidationError on a dimension mismatch. Row violations are
    one-sided for inequalities and absolute for equalities; integer
    feasibility additionally requires every integer-kind variable to sit
    within int_tol of an integer.
    """
    x = point.values if isinstance(point, Solution) else np.asarray(point, dtype=np.float64)
    if x.shape != (model.num_vars,):
        raise ValidationError(
            f"point has shape {x.shape}, model has {model.num_vars} variables")
    arr = model.to_arrays()
    lhs = arr.a @ x
    row_viol = np.zeros(model.num_rows)
    le = arr.senses == -1
    ge = arr.senses == 1
    eq = arr.senses == 0
    row_viol[le] = np.maximum(0.0, lhs[le] - arr.rhs[le])
    row_viol[ge] = np.maximum(0.0, arr.rhs[ge] - lhs[ge])
    row_viol[eq] = np.abs(lhs[eq] - arr.rhs[eq])
    bound_viol = np.maximum(np.maximum(arr.lo - x, x - arr.hi), 0.0)
    frac = np.zeros(model.num_vars)
    frac[arr.is_int] = np.abs(x[arr.is_int] - np.rint(x[arr.is_int]))
    lp_ok = bool((row_viol.max(initial=0.0) <= feas_tol)
                 and (bound_viol.max(initial=0.0) <= feas_tol))
    int_ok = lp_ok and bool(frac.max(initial=0.0) <= int_tol)
    return FeasibilityReport(row_viol, bound_viol, frac, lp_ok, int_ok)


def lp_relaxation(model: MipModel) -> MipModel:
    """Same rows and bounds, every variable continuous."""
    relaxed = tuple(
        Variable(v.index, v.name, v.lower, v.upper, VarKind.CONTINUOUS, v.tag)
        for v in model.variables)
    return MipModel(model.name, relaxed, model.constraints, model.objective)


def model_stats(model: MipModel) -> dict[str, int]:
    """Size counters: variables, integer variables, rows, matrix nonzeros.

    Nonzeros count constraint-matrix entries only (objective excluded).
    """
    return {
        "n_vars": model.num_vars,
        "n_int_vars": int(sum(1 for v in model.variables if v.kind.is_integer)),
        "n_rows": model.num_rows,
        "n_nonzeros": int(sum(len(c.expr) for c in model.constraints)),
    }
