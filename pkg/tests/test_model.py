"""Model container, feasibility checks, and validation errors."""

import numpy as np
import pytest

from formcuts.errors import ValidationError
from formcuts.model import (
    LinearExpr, ModelBuilder, Sense, VarKind,
    check_feasibility, lp_relaxation, model_stats,
)


def small_model():
    b = ModelBuilder("toy")
    b.add_var("x", 0.0, 4.0, VarKind.INTEGER)
    b.add_var("t", 0.0, 2.5, VarKind.CONTINUOUS)
    b.add_row([(0, 1.0), (1, 2.0)], Sense.LE, 6.0, "cap")
    b.add_row([(0, 1.0)], Sense.GE, 1.0, "floor")
    b.add_row([(0, 1.0), (1, -1.0)], Sense.EQ, 1.0, "link")
    b.set_objective([(0, 3.0), (1, -1.0)])
    return b.build()


def test_linear_expr_combines_duplicate_ids():
    e = LinearExpr.from_pairs([(2, 1.0), (0, 2.0), (2, 3.0)])
    assert e.as_dict() == {0: 2.0, 2: 4.0}
    assert e.var_ids() == (0, 2)
    assert e.coeff(1) == 0.0
    assert e.negated().as_dict() == {0: -2.0, 2: -4.0}
    assert e.scaled(0.5).as_dict() == {0: 1.0, 2: 2.0}
    assert e.value(np.array([1.0, 9.0, 0.25])) == pytest.approx(3.0)


def test_stats_and_arrays():
    m = small_model()
    assert model_stats(m) == {"n_vars": 2, "n_int_vars": 1, "n_rows": 3, "n_nonzeros": 5}
    arr = m.to_arrays()
    assert arr.senses.tolist() == [-1, 1, 0]
    assert arr.is_int.tolist() == [True, False]
    assert arr.lo.tolist() == [0.0, 0.0]
    assert arr.hi.tolist() == [4.0, 2.5]
    assert m.int_var_ids().tolist() == [0]


def test_check_feasibility_directions():
    m = small_model()
    rep = check_feasibility(m, np.array([2.0, 1.0]))
    assert rep.lp_feasible and rep.integer_feasible
    assert rep.max_violation == 0.0
    # 3 + 2*2 = 7 breaks the <= 6 row by exactly 1
    rep = check_feasibility(m, np.array([3.0, 2.0]))
    assert rep.row_violations.tolist() == pytest.approx([1.0, 0.0, 0.0])
    assert not rep.lp_feasible
    # fractional x is LP-feasible but not integer-feasible
    rep = check_feasibility(m, np.array([1.5, 0.5]))
    assert rep.lp_feasible and not rep.integer_feasible
    assert rep.fractionality.tolist() == pytest.approx([0.5, 0.0])
    rep = check_feasibility(m, np.array([5.0, 4.0]))
    assert rep.bound_violations.tolist() == pytest.approx([1.0, 1.5])


def test_check_feasibility_shape_mismatch():
    with pytest.raises(ValidationError):
        check_feasibility(small_model(), np.array([1.0]))


def test_lp_relaxation_keeps_rows_drops_integrality():
    m = small_model()
    r = lp_relaxation(m)
    assert r.int_var_ids().size == 0
    assert r.num_rows == m.num_rows
    assert r.variables[0].lower == 0.0 and r.variables[0].upper == 4.0
    # the original is untouched
    assert m.variables[0].kind is VarKind.INTEGER


def test_builder_rejects_duplicate_names():
    b = ModelBuilder()
    b.add_var("x", 0.0, 1.0)
    with pytest.raises(ValidationError):
        b.add_var("x", 0.0, 2.0)


def test_validate_rejects_crossed_bounds():
    b = ModelBuilder()
    b.add_var("x", 2.0, 1.0)
    with pytest.raises(ValidationError):
        b.build()


def test_validate_rejects_dangling_row_reference():
    b = ModelBuilder()
    b.add_var("x", 0.0, 1.0)
    b.add_row([(3, 1.0)], Sense.LE, 1.0, "bad")
    with pytest.raises(ValidationError):
        b.build()


def test_validate_rejects_nonfinite_data():
    b = ModelBuilder()
    b.add_var("x", 0.0, 1.0)
    b.add_row([(0, np.nan)], Sense.LE, 1.0, "bad")
    with pytest.raises(ValidationError):
        b.build()
