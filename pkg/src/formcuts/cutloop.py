"""Rank-1 separation loop: rounds of cuts from the original rows.

Every round separates MIR cuts from the formulation's original rows at
the current fractional point (never from previously added cuts, so all
cuts stay rank 1), adds the most violated ones, and reoptimizes with
the dual simplex. Optionally the first round uses GMI cuts from the
optimal tableau instead.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .cuts import Cut, CutPool, gmi, separate_formulation_cuts
from .errors import NumericalBreakdownError, ValidationError
from .model import Constraint, MipModel
from .simplex import LpResult, LpStatus, SimplexConfig, reoptimize_with_rows, solve_lp

INT_TOL = 1e-6
STALL_REL_TOL = 1e-9


@dataclass
class CutLoopConfig:
    max_rounds: int = 50
    cut_violation_tol: float = 1e-6
    max_cuts_per_round: int = 200
    per_row_cap: int = 4
    gmi_first_round: bool = False
    complement_mode: str = "both"
    stall_rounds: int = 3
    simplex: SimplexConfig = field(default_factory=SimplexConfig)


@dataclass
class CutLoopReport:
    model_name: str
    status: str                    # integral | no-cuts | stalled | round-limit
    lp_values: list[float]         # bound after each reoptimization, [0] is the root
    cuts_per_round: list[int]
    rounds: int
    total_cuts: int
    final_result: LpResult
    pool: CutPool
    strengthened: MipModel

    def trajectory(self) -> list[float]:
        return list(self.lp_values)


def run_cut_loop(model: MipModel, config: CutLoopConfig | None = None) -> CutLoopReport:
    cfg = config or CutLoopConfig()
    res = solve_lp(model, config=cfg.simplex)
    if res.status is not LpStatus.OPTIMAL:
        raise ValidationError(f"root LP is {res.status.value}, cannot run separation")

    int_ids = model.int_var_ids()
    lp_values = [res.objective]
    cuts_per_round: list[int] = []
    pool = CutPool()
    added: list[Constraint] = []
    cur_model = model
    serial = 0
    status = "round-limit"

    for round_no in range(1, cfg.max_rounds + 1):
        x = res.x
        if int_ids.size and _max_fractionality(x, int_ids) <= INT_TOL:
            status = "integral"
            break
        if not int_ids.size:
            status = "integral"
            break

        if cfg.gmi_first_round and round_no == 1:
            candidates = gmi(res, model, INT_TOL, cfg.cut_violation_tol)
        else:
            candidates = separate_formulation_cuts(
                model, x, cfg.complement_mode, rows=model.constraints,
                per_row_cap=cfg.per_row_cap,
                violation_tol=cfg.cut_violation_tol, int_tol=INT_TOL)

        fresh: list[tuple[float, int, Cut]] = []
        for k, cut in enumerate(candidates):
            fp = CutPool.fingerprint(cut)
            if fp in pool:
                continue
            fresh.append((cut.normalized_violation(x), k, cut))
        if not fresh:
            status = "no-cuts"
            break
        fresh.sort(key=lambda t: (-t[0], t[1]))
        chosen = fresh[:cfg.max_cuts_per_round]

        new_rows: list[Constraint] = []
        for viol, _, cut in chosen:
            serial += 1
            short = "gmi" if cut.family == "gmi" else "mir"
            row = cut.to_constraint(f"cut-{short}({serial})")
            pool.add(cut, round_no, viol)
            new_rows.append(row)
        res = reoptimize_with_rows(cur_model, new_rows, res)
        if res.status is not LpStatus.OPTIMAL:
            raise NumericalBreakdownError(
                f"reoptimization after round {round_no} ended {res.status.value}")
        cur_model = extend_model(cur_model, new_rows)
        added.extend(new_rows)
        lp_values.append(res.objective)
        cuts_per_round.append(len(new_rows))

        if len(lp_values) > cfg.stall_rounds:
            now = lp_values[-1]
            then = lp_values[-1 - cfg.stall_rounds]
            if abs(now - then) <= STALL_REL_TOL * max(1.0, abs(now)):
                status = "stalled"
                break

    return CutLoopReport(
        model_name=model.name,
        status=status,
        lp_values=lp_values,
        cuts_per_round=cuts_per_round,
        rounds=len(cuts_per_round),
        total_cuts=len(added),
        final_result=res,
        pool=pool,
        strengthened=cur_model,
    )


def extend_model(model: MipModel, new_rows: list[Constraint]) -> MipModel:
    name = model.name if model.name.endswith("+cuts") else model.name + "+cuts"
    return dataclasses.replace(
        model, name=name, constraints=model.constraints + tuple(new_rows))


def _max_fractionality(x: np.ndarray, int_ids: np.ndarray) -> float:
    v = x[int_ids]
    return float(np.max(np.abs(v - np.rint(v)))) if int_ids.size else 0.0


def gap_percent(opt: float, bound: float) -> float:
    """100 * (opt - bound) / opt; nan when opt is (near) zero."""
    if abs(opt) <= 1e-12:
        return float("nan")
    return 100.0 * (opt - bound) / opt


def closed_gap_percent(root_bound: float, final_bound: float, opt: float) -> float:
    """Share of the root gap closed by cutting, in percent.

    100 when there was no root gap to begin with; clipped to [0, 100]
    only from below (tiny negative drift from reoptimization noise).
    """
    denom = opt - root_bound
    if abs(denom) <= 1e-9 * max(1.0, abs(opt)):
        return 100.0
    closed = 100.0 * (final_bound - root_bound) / denom
    return max(closed, 0.0)
