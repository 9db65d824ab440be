"""Cut machinery: base inequalities, MIR, GMI, validity oracle, pool.

A base inequality is a valid >=-row derived from one model row: the row
(or its negation, for equalities both directions) is divided by the
absolute coefficient of an integer variable that is fractional in the
current LP point. Optionally every variable whose value sits closer to
its finite upper bound is complemented (v -> u - v) first; bound terms
fold into the right-hand side. The MIR of a base with fractional rhs is
a valid cut; un-complementing maps it back to original variables.

GMI cuts come from simplex tableau rows of fractional basic integer
variables, with nonbasic columns read as nonnegative deviations from
their active bounds and slacks substituted away.

validate_cut is the independent oracle: it enumerates every integer
assignment within bounds (up to a combination budget) and minimizes the
cut's left side over the continuous completion of each assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import ValidationError
from .model import Constraint, LinearExpr, MipModel, Sense, Solution

MIR_EPS = 1e-6
DROP_TOL = 1e-12
DYNAMISM_LIMIT = 1e8
ORACLE_DEFAULT_LIMIT = 1_000_000


@dataclass(frozen=True)
class BaseProvenance:
    row_tag: str
    direction: int        # +1 the row as >=, -1 its negation
    divisor_var: int
    divisor_coef: float   # coefficient the row was divided by (absolute value taken)
    complemented: tuple[int, ...]


@dataclass
class BaseInequality:
    """A >= inequality over transformed variables.

    Transformed means: complemented variables replaced by u - v, shifted
    continuous variables replaced by v - l. The maps record how to get
    back. int_vars lists the transformed-space integer ids.
    """

    coeffs: dict[int, float]
    rhs: float
    int_vars: frozenset[int]
    complemented: dict[int, float]  # var id -> upper bound used
    shifted: dict[int, float]       # var id -> lower bound used
    provenance: BaseProvenance

    def transformed_point(self, xstar: np.ndarray) -> dict[int, float]:
        out = {}
        for j in self.coeffs:
            if j in self.complemented:
                out[j] = self.complemented[j] - xstar[j]
            elif j in self.shifted:
                out[j] = xstar[j] - self.shifted[j]
            else:
                out[j] = float(xstar[j])
        return out

    def violation_transformed(self, xstar: np.ndarray) -> float:
        pt = self.transformed_point(xstar)
        lhs = sum(c * pt[j] for j, c in self.coeffs.items())
        return self.rhs - lhs


@dataclass
class Cut:
    """A globally valid >= inequality over the model's variables."""

    expr: LinearExpr
    rhs: float
    family: str             # "mir-formulation" or "gmi"
    provenance: BaseProvenance | str
    rank: int = 1

    def violation(self, x: np.ndarray) -> float:
        return self.rhs - self.expr.value(x)

    def norm(self) -> float:
        return math.sqrt(sum(c * c for _, c in self.expr.terms)) or 1.0

    def normalized_violation(self, x: np.ndarray) -> float:
        return self.violation(x) / self.norm()

    def to_constraint(self, tag: str) -> Constraint:
        return Constraint(self.expr, Sense.GE, self.rhs, tag)


def _frac(v: float) -> float:
    return v - math.floor(v)


def base_inequalities_from_row(model: MipModel, row: Constraint, xstar: np.ndarray,
                               mode: str = "both", int_tol: float = 1e-6,
                               ) -> list[BaseInequality]:
    """All base inequalities one row yields at the point xstar.

    mode selects the complement policy: "complement", "none", or "both".
    Empty when the row touches no fractional integer variable.
    """
    if mode not in ("complement", "none", "both"):
        raise ValidationError(f"unknown complement mode {mode!r}")
    modes = ("complement", "none") if mode == "both" else (mode,)
    if row.sense is Sense.GE:
        directions = [1]
    elif row.sense is Sense.LE:
        directions = [-1]
    else:
        directions = [1, -1]

    out: list[BaseInequality] = []
    for direction in directions:
        dir_coeffs = {j: direction * c for j, c in row.expr.terms}
        dir_rhs = direction * row.rhs
        divisors = [
            j for j, c in sorted(dir_coeffs.items())
            if model.variables[j].kind.is_integer and c != 0.0
            and min(_frac(float(xstar[j])), 1.0 - _frac(float(xstar[j]))) > int_tol]
        if not divisors:
            continue
        for cmode in modes:
            transformed = _complement_and_shift(model, dir_coeffs, dir_rhs, xstar, cmode)
            if transformed is None:
                continue
            t_coeffs, t_rhs, complemented, shifted = transformed
            for j in divisors:
                scale = 1.0 / abs(dir_coeffs[j])
                base = BaseInequality(
                    coeffs={k: c * scale for k, c in t_coeffs.items()},
                    rhs=t_rhs * scale,
                    int_vars=frozenset(
                        k for k in t_coeffs if model.variables[k].kind.is_integer),
                    complemented=dict(complemented),
                    shifted=dict(shifted),
                    provenance=BaseProvenance(
                        row_tag=row.tag, direction=direction, divisor_var=j,
                        divisor_coef=abs(dir_coeffs[j]),
                        complemented=tuple(sorted(complemented))),
                )
                out.append(base)
    return out


def _complement_and_shift(model, dir_coeffs, dir_rhs, xstar, cmode):
    """Substitute bounds so every continuous variable is nonnegative.

    Complementing (policy or forced for upper-bounded-only continuous
    variables) and shifting fold constants into the rhs. Returns None
    when a free continuous variable blocks a valid base.
    """
    t_coeffs: dict[int, float] = {}
    t_rhs = dir_rhs
    complemented: dict[int, float] = {}
    shifted: dict[int, float] = {}
    for j, c in dir_coeffs.items():
        var = model.variables[j]
        finite_up = math.isfinite(var.upper)
        finite_lo = math.isfinite(var.lower)
        do_comp = False
        if cmode == "complement" and finite_up:
            dist_up = var.upper - float(xstar[j])
            dist_lo = float(xstar[j]) - var.lower if finite_lo else math.inf
            do_comp = dist_up < dist_lo
        if not var.kind.is_integer and not finite_lo:
            if not finite_up:
                return None  # free continuous variable: no valid base
            do_comp = True
        if do_comp:
            t_coeffs[j] = -c
            t_rhs -= c * var.upper
            complemented[j] = var.upper
        else:
            t_coeffs[j] = c
            if not var.kind.is_integer and var.lower != 0.0:
                t_rhs -= c * var.lower
                shifted[j] = var.lower
    return t_coeffs, t_rhs, complemented, shifted


def mir(base: BaseInequality, model: MipModel, eps: float = MIR_EPS) -> Cut | None:
    """Mixed-integer rounding of a base inequality, mapped back.

    Integer terms a_j become bhat*floor(a_j) + min(bhat, frac(a_j));
    continuous terms c_j become max(c_j, 0); the rhs becomes
    bhat*ceil(b). None when the base rhs is within eps of an integer.
    """
    bhat = _frac(base.rhs)
    if bhat <= eps or bhat >= 1.0 - eps:
        return None
    cut_coeffs: dict[int, float] = {}
    for j, a in base.coeffs.items():
        if j in base.int_vars:
            g = bhat * math.floor(a) + min(bhat, _frac(a))
        else:
            g = max(a, 0.0)
        cut_coeffs[j] = g
    rhs = bhat * math.ceil(base.rhs)
    # back to original variables
    out_coeffs: dict[int, float] = {}
    for j, g in cut_coeffs.items():
        if j in base.complemented:
            out_coeffs[j] = -g
            rhs -= g * base.complemented[j]
        else:
            out_coeffs[j] = g
            if j in base.shifted:
                rhs += g * base.shifted[j]
    return finalize_cut(out_coeffs, rhs, "mir-formulation", base.provenance, model)


def finalize_cut(coeffs: dict[int, float], rhs: float, family: str, provenance,
                 model: MipModel) -> Cut | None:
    """Numerical hygiene: drop negligible terms safely, reject wild ranges.

    Dropping a term c*v from a >= cut is compensated by moving the worst
    case of c*v over the variable's box to the rhs; terms that cannot be
    bounded are kept. Cuts whose coefficient magnitudes span more than
    DYNAMISM_LIMIT are rejected outright.
    """
    kept: dict[int, float] = {}
    adj_rhs = rhs
    for j, c in coeffs.items():
        if c == 0.0:
            continue
        if abs(c) <= DROP_TOL:
            var = model.variables[j]
            worst = c * (var.upper if c > 0 else var.lower)
            if math.isfinite(worst):
                adj_rhs -= worst
                continue
        kept[j] = c
    if not kept:
        return None
    mags = [abs(c) for c in kept.values()]
    if max(mags) / min(mags) > DYNAMISM_LIMIT:
        return None
    return Cut(LinearExpr.from_pairs(kept.items()), adj_rhs, family, provenance)


def separate_formulation_cuts(model: MipModel, xstar: np.ndarray, mode: str = "both",
                              rows: Sequence[Constraint] | None = None,
                              per_row_cap: int = 4,
                              violation_tol: float = 1e-6,
                              int_tol: float = 1e-6) -> list[Cut]:
    """MIR cuts from each given row at xstar, capped per row by violation."""
    rows = model.constraints if rows is None else rows
    out: list[Cut] = []
    for row in rows:
        bases = base_inequalities_from_row(model, row, xstar, mode, int_tol)
        row_cuts: list[tuple[float, int, Cut]] = []
        seen = set()
        for k, base in enumerate(bases):
            cut = mir(base, model)
            if cut is None:
                continue
            v = cut.normalized_violation(xstar)
            if v <= violation_tol:
                continue
            fp = CutPool.fingerprint(cut)
            if fp in seen:
                continue
            seen.add(fp)
            row_cuts.append((v, k, cut))
        row_cuts.sort(key=lambda t: (-t[0], t[1]))
        out.extend(cut for _, _, cut in row_cuts[:per_row_cap])
    return out


# ----------------------------------------------------------------------
# GMI from the optimal tableau


def _integral_column(model: MipModel, key: int) -> bool:
    """Is the shifted nonbasic column integer-valued on integer points?"""
    nv = model.num_vars
    if key < nv:
        var = model.variables[key]
        if not var.kind.is_integer:
            return False
        for bound in (var.lower, var.upper):
            if math.isfinite(bound) and abs(bound - round(bound)) > 1e-9:
                return False
        return True
    row = model.constraints[key - nv]
    if abs(row.rhs - round(row.rhs)) > 1e-9:
        return False
    for j, c in row.expr.terms:
        if not model.variables[j].kind.is_integer:
            return False
        if abs(c - round(c)) > 1e-9:
            return False
    return True


def gmi(result, model: MipModel, int_tol: float = 1e-6,
        violation_tol: float = 1e-6) -> list[Cut]:
    """Gomory mixed-integer cuts for every fractional basic integer var."""
    from .simplex import LpStatus, tableau_row  # local import to avoid a cycle

    if result.status is not LpStatus.OPTIMAL:
        raise ValidationError("GMI needs an optimal LP result")
    x = result.x
    nv = model.num_vars
    cuts: list[Cut] = []
    for var in model.variables:
        if not var.kind.is_integer:
            continue
        j = var.index
        f = _frac(float(x[j]))
        if min(f, 1.0 - f) <= int_tol:
            continue
        try:
            tr = tableau_row(result, j)
        except ValidationError:
            continue  # fractional but nonbasic (at a fractional bound): no row
        f0 = _frac(tr.rhs)
        if f0 <= int_tol or f0 >= 1.0 - int_tol:
            continue
        coeffs: dict[int, float] = {}
        rhs = f0
        usable = True
        for key, (abar, status) in tr.entries.items():
            if status == "free":
                usable = False
                break
            if _integral_column(model, key):
                fj = _frac(abar)
                gamma = fj if fj <= f0 else f0 * (1.0 - fj) / (1.0 - f0)
            else:
                gamma = abar if abar >= 0 else f0 * (-abar) / (1.0 - f0)
            if gamma == 0.0:
                continue
            if key < nv:
                var2 = model.variables[key]
                if status == "at-lower":
                    coeffs[key] = coeffs.get(key, 0.0) + gamma
                    rhs += gamma * var2.lower
                else:
                    coeffs[key] = coeffs.get(key, 0.0) - gamma
                    rhs -= gamma * var2.upper
            else:
                row = model.constraints[key - nv]
                sign = 1.0 if status == "at-lower" else -1.0
                # t = sign * (rhs_row - a.x)
                for jj, c in row.expr.terms:
                    coeffs[jj] = coeffs.get(jj, 0.0) - sign * gamma * c
                rhs -= sign * gamma * row.rhs
        if not usable:
            continue
        cut = finalize_cut(coeffs, rhs, "gmi", f"tableau({var.name})", model)
        if cut is None:
            continue
        if cut.normalized_violation(x) > violation_tol:
            cuts.append(cut)
    return cuts


# ----------------------------------------------------------------------
# validity oracle


@dataclass
class CutCheck:
    status: str              # "valid" | "violated" | "skipped"
    witness: Solution | None = None
    combinations: int = 0


def validate_cut(model: MipModel, cut: Cut,
                 oracle_limit: int = ORACLE_DEFAULT_LIMIT,
                 tol: float = 1e-7) -> CutCheck:
    """Exhaustively check a cut against every feasible completion.

    Enumerates all integer assignments inside the bounds (skipped when
    their count exceeds oracle_limit or a bound is infinite), keeps the
    ones satisfying every pure-integer row, and for each survivor
    minimizes the cut's left side over the continuous completion. Any
    feasible point with lhs < rhs - tol is returned as a witness.
    """
    int_ids = [v.index for v in model.variables if v.kind.is_integer]
    cont_ids = [v.index for v in model.variables if not v.kind.is_integer]
    lo, hi = model.bounds_arrays()
    widths = []
    for j in int_ids:
        if not (math.isfinite(lo[j]) and math.isfinite(hi[j])):
            return CutCheck("skipped")
        widths.append(int(round(hi[j])) - int(round(lo[j])) + 1)
    combos = 1
    for w in widths:
        combos *= w
        if combos > oracle_limit:
            return CutCheck("skipped", combinations=combos)

    pure_rows = [c for c in model.constraints
                 if all(model.variables[j].kind.is_integer for j, _ in c.expr.terms)]
    mixed_rows = [c for c in model.constraints if c not in pure_rows]

    n_int = len(int_ids)
    base_vals = np.array([int(round(lo[j])) for j in int_ids], dtype=np.int64)
    cut_arr = np.zeros(model.num_vars)
    for j, c in cut.expr.terms:
        cut_arr[j] = c

    # chunked mixed-radix enumeration
    chunk = 1 << 14
    best: tuple[float, np.ndarray] | None = None
    radices = np.array(widths, dtype=np.int64) if n_int else np.zeros(0, dtype=np.int64)
    for start in range(0, combos, chunk):
        count = min(chunk, combos - start)
        idx = np.arange(start, start + count, dtype=np.int64)
        grid = np.zeros((count, n_int), dtype=np.int64)
        rem = idx
        for t in range(n_int - 1, -1, -1):
            grid[:, t] = rem % radices[t]
            rem = rem // radices[t]
        grid += base_vals
        mask = np.ones(count, dtype=bool)
        for row in pure_rows:
            lhs = np.zeros(count)
            for j, c in row.expr.terms:
                lhs += c * grid[:, int_ids.index(j)]
            if row.sense is Sense.LE:
                mask &= lhs <= row.rhs + 1e-9
            elif row.sense is Sense.GE:
                mask &= lhs >= row.rhs - 1e-9
            else:
                mask &= np.abs(lhs - row.rhs) <= 1e-9
        if not mask.any():
            continue
        survivors = grid[mask]
        if not cont_ids:
            lhs = survivors @ cut_arr[int_ids]
            k = int(np.argmin(lhs))
            if best is None or lhs[k] < best[0]:
                full = np.zeros(model.num_vars)
                full[int_ids] = survivors[k]
                best = (float(lhs[k]), full)
        else:
            for assign in survivors:
                point = _min_cut_over_continuous(model, mixed_rows, cut_arr,
                                                 int_ids, cont_ids, assign, lo, hi)
                if point is None:
                    continue
                val = float(cut_arr @ point)
                if best is None or val < best[0]:
                    best = (val, point)
    if best is None:
        return CutCheck("valid", combinations=combos)  # integer-infeasible model
    scale = max(1.0, abs(cut.rhs))
    if best[0] < cut.rhs - tol * scale:
        sol = Solution(values=best[1], objective=model.objective.value(best[1]))
        return CutCheck("violated", witness=sol, combinations=combos)
    return CutCheck("valid", combinations=combos)


def _min_cut_over_continuous(model, mixed_rows, cut_arr, int_ids, cont_ids,
                             assign, lo, hi):
    """Minimize the cut lhs over continuous vars with integers fixed."""
    pos = {j: t for t, j in enumerate(cont_ids)}
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    fixed = np.zeros(model.num_vars)
    fixed[int_ids] = assign
    for row in mixed_rows:
        vec = np.zeros(len(cont_ids))
        const = 0.0
        for j, c in row.expr.terms:
            if j in pos:
                vec[pos[j]] = c
            else:
                const += c * fixed[j]
        rhs = row.rhs - const
        if row.sense is Sense.LE:
            a_ub.append(vec)
            b_ub.append(rhs)
        elif row.sense is Sense.GE:
            a_ub.append(-vec)
            b_ub.append(-rhs)
        else:
            a_eq.append(vec)
            b_eq.append(rhs)
    res = linprog(
        c=cut_arr[cont_ids],
        A_ub=np.array(a_ub) if a_ub else None, b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None, b_eq=np.array(b_eq) if b_eq else None,
        bounds=[(lo[j], None if math.isinf(hi[j]) else hi[j]) for j in cont_ids],
        method="highs")
    if res.status != 0:
        return None
    full = fixed
    full = full.copy()
    full[cont_ids] = res.x
    return full


# ----------------------------------------------------------------------
# pool


@dataclass
class CutRecord:
    cut: Cut
    round_added: int
    violation: float


class CutPool:
    """Deduplicated cut store keyed by a scale-normalized fingerprint."""

    def __init__(self) -> None:
        self._by_fp: dict[tuple, CutRecord] = {}
        self.order: list[tuple] = []

    @staticmethod
    def fingerprint(cut: Cut) -> tuple:
        mags = [abs(c) for _, c in cut.expr.terms]
        scale = max(mags) if mags else 1.0
        coeffs = tuple((j, round(c / scale, 9)) for j, c in cut.expr.terms)
        return (coeffs, round(cut.rhs / scale, 9))

    def add(self, cut: Cut, round_added: int, violation: float) -> bool:
        fp = self.fingerprint(cut)
        if fp in self._by_fp:
            return False
        self._by_fp[fp] = CutRecord(cut, round_added, violation)
        self.order.append(fp)
        return True

    def __contains__(self, fp: tuple) -> bool:
        return fp in self._by_fp

    def __len__(self) -> int:
        return len(self._by_fp)

    def records(self) -> list[CutRecord]:
        return [self._by_fp[fp] for fp in self.order]

    def cuts(self) -> list[Cut]:
        return [r.cut for r in self.records()]
