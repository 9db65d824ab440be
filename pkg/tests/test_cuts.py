"""Rounding cuts, tableau cuts, the validity oracle, and the pool.

The two-variable knapsack used throughout has LP optimum (0.75, 0.75);
its expected cut coefficients were worked out by hand from the rounding
formula and are frozen here.
"""

import numpy as np
import pytest

from oracles import random_small_mip
from formcuts.cuts import (
    CutPool, base_inequalities_from_row, finalize_cut, gmi, mir,
    separate_formulation_cuts, validate_cut,
)
from formcuts.errors import ValidationError
from formcuts.model import ModelBuilder, Sense, VarKind
from formcuts.simplex import LpStatus, solve_lp


def knapsack_pair():
    # min -x - y subject to 2x + 2y <= 3 over binaries: LP sits at (.75, .75)
    b = ModelBuilder("pair")
    x = b.add_var("x", 0.0, 1.0, VarKind.BINARY)
    y = b.add_var("y", 0.0, 1.0, VarKind.BINARY)
    b.add_row([(x, 2.0), (y, 2.0)], Sense.LE, 3.0, "cap")
    b.set_objective([(x, -1.0), (y, -1.0)])
    return b.build()


def test_simple_bound_row_rounds_up():
    b = ModelBuilder("one")
    x = b.add_var("x", 0.0, 10.0, VarKind.INTEGER)
    b.add_row([(x, 1.0)], Sense.GE, 1.5, "floor")
    b.set_objective([(x, 1.0)])
    model = b.build()
    xstar = np.array([1.5])
    bases = base_inequalities_from_row(model, model.constraints[0], xstar, mode="none")
    assert len(bases) == 1
    cut = mir(bases[0], model)
    # frac(1.5) rounds the rhs to ceil: x >= 2
    assert cut.expr.as_dict() == pytest.approx({0: 0.5})
    assert cut.rhs == pytest.approx(1.0)
    assert cut.violation(xstar) == pytest.approx(0.25)
    assert validate_cut(model, cut).status == "valid"


def test_knapsack_mir_both_routes_agree():
    model = knapsack_pair()
    xstar = np.array([0.75, 0.75])
    row = model.constraints[0]
    cuts = {}
    for mode in ("none", "complement"):
        bases = base_inequalities_from_row(model, row, xstar, mode=mode)
        assert len(bases) == 2  # one per fractional divisor
        for base in bases:
            cut = mir(base, model)
            assert cut is not None
            cuts[(mode, base.provenance.divisor_var)] = cut
    # every route lands on x + y <= 1 up to scaling (as a >= cut the
    # coefficients and rhs share one negative sign)
    for cut in cuts.values():
        d = cut.expr.as_dict()
        assert d[0] / d[1] == pytest.approx(1.0)
        assert d[0] < 0
        assert cut.rhs / d[0] == pytest.approx(1.0)
        assert cut.violation(xstar) == pytest.approx(0.5 * abs(d[0]))
        assert validate_cut(model, cut).status == "valid"


def test_knapsack_gmi_matches_hand_value():
    model = knapsack_pair()
    res = solve_lp(model)
    assert res.status is LpStatus.OPTIMAL
    cuts = gmi(res, model)
    assert cuts
    best = max(cuts, key=lambda c: c.violation(res.x))
    d = best.expr.as_dict()
    assert d[0] / d[1] == pytest.approx(1.0)
    assert best.rhs / d[0] == pytest.approx(1.0)
    # tableau cut violation equals the basic fractionality
    assert best.violation(res.x) / abs(d[0]) == pytest.approx(0.5)
    assert best.family == "gmi"
    assert validate_cut(model, best).status == "valid"


def test_complement_restores_original_space():
    # a complemented base must evaluate identically in both spaces
    model = knapsack_pair()
    xstar = np.array([0.75, 0.75])
    row = model.constraints[0]
    for base in base_inequalities_from_row(model, row, xstar, mode="complement"):
        assert base.complemented  # binaries at 0.75 sit closer to the upper bound
        direct = sum(base.coeffs[j] * t for j, t in base.transformed_point(xstar).items())
        assert base.violation_transformed(xstar) == pytest.approx(
            max(0.0, base.rhs - direct))


def test_direction_handling_per_sense():
    b = ModelBuilder("dirs")
    x = b.add_var("x", 0.0, 5.0, VarKind.INTEGER)
    b.add_row([(x, 2.0)], Sense.EQ, 3.0, "eq")
    b.set_objective([(x, 1.0)])
    model = b.build()
    xstar = np.array([1.5])
    bases = base_inequalities_from_row(model, model.constraints[0], xstar, mode="none")
    # an equality separates in both directions
    assert sorted(b_.provenance.direction for b_ in bases) == [-1, 1]
    ge_only = base_inequalities_from_row(
        model, model.constraints[0], np.array([2.0]), mode="none")
    assert ge_only == []  # integral point yields no divisor


def test_mir_skips_near_integral_rhs():
    b = ModelBuilder("int-rhs")
    x = b.add_var("x", 0.0, 10.0, VarKind.INTEGER)
    b.add_row([(x, 1.0)], Sense.GE, 2.0, "r")
    b.set_objective([(x, 1.0)])
    model = b.build()
    bases = base_inequalities_from_row(model, model.constraints[0],
                                       np.array([2.5]), mode="none")
    if bases:
        assert mir(bases[0], model) is None


def test_finalize_cut_guards():
    b = ModelBuilder("drop")
    x = b.add_var("x", 0.0, 4.0, VarKind.INTEGER)
    t = b.add_var("t", 0.0, 8.0)
    b.add_row([(x, 1.0)], Sense.LE, 4.0, "r")
    b.set_objective([(x, 1.0)])
    model = b.build()
    # dynamism beyond the limit is rejected outright
    assert finalize_cut({0: 1.0, 1: 1e-10}, 1.0, "mir", "t", model) is None
    # a vanishing coefficient is dropped with worst-case rhs compensation
    cut = finalize_cut({0: 1.0, 1: 1e-13}, 2.0, "mir", "t", model)
    assert cut is not None
    assert cut.expr.as_dict() == {0: 1.0}
    assert cut.rhs == pytest.approx(2.0 - 1e-13 * 8.0)


def test_validate_cut_finds_planted_witness():
    model = knapsack_pair()
    bad = finalize_cut({0: 1.0, 1: 1.0}, 1.5, "mir", "planted", model)
    check = validate_cut(model, bad)
    assert check.status == "violated"
    w = check.witness.values
    # the witness must be a feasible point strictly below the cut
    assert 2.0 * w[0] + 2.0 * w[1] <= 3.0 + 1e-9
    assert w[0] + w[1] < 1.5 - 1e-7


def test_validate_cut_skips_huge_grids():
    b = ModelBuilder("huge")
    for j in range(8):
        b.add_var(f"z{j}", 0.0, 40.0, VarKind.INTEGER)
    b.add_row([(0, 1.0)], Sense.LE, 40.0, "r")
    b.set_objective([(0, 1.0)])
    model = b.build()
    cut = finalize_cut({0: 1.0}, 0.0, "mir", "t", model)
    assert validate_cut(model, cut, oracle_limit=1000).status == "skipped"


def test_randomized_mir_cuts_are_valid():
    # rounding validity holds at any point, not only LP vertices, so the
    # separation point is drawn uniformly from the box
    rng = np.random.default_rng(2026)
    produced = 0
    for _ in range(70):
        model = random_small_mip(rng, mixed=bool(rng.integers(0, 2)))
        lo, hi = model.bounds_arrays()
        xstar = lo + (hi - lo) * rng.random(model.num_vars)
        for row in model.constraints:
            for base in base_inequalities_from_row(model, row, xstar, mode="both"):
                cut = mir(base, model)
                if cut is None:
                    continue
                produced += 1
                check = validate_cut(model, cut)
                assert check.status == "valid", (row.tag, cut.expr.terms, cut.rhs)
    assert produced >= 200


def test_randomized_gmi_cuts_are_valid():
    rng = np.random.default_rng(993)
    produced = 0
    for _ in range(300):
        model = random_small_mip(rng, mixed=bool(rng.integers(0, 2)))
        res = solve_lp(model)
        if res.status is not LpStatus.OPTIMAL:
            continue
        for cut in gmi(res, model):
            produced += 1
            assert cut.violation(res.x) > 0.0
            check = validate_cut(model, cut)
            assert check.status == "valid", (cut.provenance, cut.expr.terms, cut.rhs)
    assert produced >= 15


def test_separation_caps_cuts_per_row():
    model = knapsack_pair()
    res = solve_lp(model)
    cuts = separate_formulation_cuts(model, res.x, mode="both")
    by_row = {}
    for c in cuts:
        by_row.setdefault(c.provenance, 0)
        by_row[c.provenance] += 1
    assert all(k <= 4 for k in by_row.values())
    assert all(c.violation(res.x) > 1e-6 for c in cuts)


def test_pool_fingerprint_ignores_scaling():
    model = knapsack_pair()
    res = solve_lp(model)
    cuts = separate_formulation_cuts(model, res.x, mode="both")
    pool = CutPool()
    added = sum(pool.add(c, round_added=1, violation=c.violation(res.x)) for c in cuts)
    assert added == len(pool)
    for c in cuts:
        doubled = finalize_cut(
            {j: 2.0 * v for j, v in c.expr.as_dict().items()}, 2.0 * c.rhs,
            c.family, c.provenance, model)
        assert not pool.add(doubled, round_added=2, violation=0.0)
