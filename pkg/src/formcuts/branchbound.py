"""Plain LP-based branch and bound, used as the exact reference solver.

No cuts are added inside the tree; bounds come from the pure LP
relaxation of whatever model is passed in (which may already carry
cutting planes as ordinary rows). Node selection is best bound with a
depth dive on ties, branching picks the most fractional integer
variable, and node LPs are warm started from the parent basis through
one shared engine, so a bound flip usually costs a handful of dual
simplex pivots.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .model import MipModel
from .simplex import Basis, LpStatus, SimplexConfig, SimplexEngine

INT_TOL = 1e-6
PRUNE_TOL = 1e-9


@dataclass
class BnbConfig:
    node_limit: int = 1_000_000
    int_tol: float = INT_TOL
    # None: detect from the objective whether its value is integer on
    # integer-feasible points, enabling the incumbent-minus-one prune
    integral_objective: bool | None = None
    # optional per-variable branching priority; fractional variables of
    # the highest priority class are considered first
    branch_priority: np.ndarray | None = None
    # optional feasible starting solution (objective, x); enables
    # pruning before the tree finds its own incumbent
    incumbent: tuple[float, np.ndarray] | None = None
    simplex: SimplexConfig = field(default_factory=SimplexConfig)


@dataclass
class BnbResult:
    status: str               # optimal | infeasible | node-limit
    objective: float | None
    x: np.ndarray | None
    nodes: int
    best_bound: float
    iterations: int = 0


def _objective_is_integral(model: MipModel) -> bool:
    for j, c in model.objective.terms:
        if not model.variables[j].kind.is_integer:
            return False
        if abs(c - round(c)) > 1e-9:
            return False
    return True


def solve_mip(model: MipModel, config: BnbConfig | None = None) -> BnbResult:
    cfg = config or BnbConfig()
    integral_obj = (cfg.integral_objective if cfg.integral_objective is not None
                    else _objective_is_integral(model))
    int_ids = model.int_var_ids()
    lo0, hi0 = model.bounds_arrays()

    eng = SimplexEngine(model, cfg.simplex)
    eng.iterations = 0
    status = eng.solve()
    if status is LpStatus.INFEASIBLE:
        return BnbResult("infeasible", None, None, 1, math.inf, eng.iterations)
    if status is LpStatus.UNBOUNDED:
        raise ValidationError("LP relaxation is unbounded, nothing to branch on")
    root = eng.result(status)

    incumbent_obj = math.inf
    incumbent_x: np.ndarray | None = None
    if cfg.incumbent is not None:
        incumbent_obj, incumbent_x = cfg.incumbent[0], np.asarray(cfg.incumbent[1])
    # heap entries: (parent bound, -depth, sequence, lo, hi, warm basis)
    seq = 0
    heap: list[tuple] = [(root.objective, 0, seq, lo0, hi0, root.basis)]
    nodes = 0
    hit_limit = False

    while heap:
        bound, negdepth, _, lo, hi, warm = heapq.heappop(heap)
        if _pruned(bound, incumbent_obj, integral_obj):
            continue
        if nodes >= cfg.node_limit:
            hit_limit = True
            break
        nodes += 1
        eng.set_var_bounds(lo, hi)
        status = eng.solve(warm)
        if status is LpStatus.INFEASIBLE:
            continue
        if status is not LpStatus.OPTIMAL:
            raise ValidationError(f"node LP ended {status.value}")
        res = eng.result(status)
        if _pruned(res.objective, incumbent_obj, integral_obj):
            continue
        frac_j, frac_val = _most_fractional(res.x, int_ids, cfg.int_tol,
                                            cfg.branch_priority)
        if frac_j < 0:
            if res.objective < incumbent_obj - PRUNE_TOL:
                incumbent_obj = res.objective
                incumbent_x = res.x.copy()
            continue
        f = frac_val - math.floor(frac_val)
        floor_v = math.floor(frac_val)
        down = (lo.copy(), hi.copy())
        down[1][frac_j] = floor_v
        up = (lo.copy(), hi.copy())
        up[0][frac_j] = floor_v + 1
        children = (up, down) if f >= 0.5 else (down, up)
        for child_lo, child_hi in children:
            seq += 1
            heapq.heappush(heap, (res.objective, negdepth - 1, seq,
                                  child_lo, child_hi, res.basis))

    if hit_limit:
        open_bounds = [t[0] for t in heap]
        best_bound = min(open_bounds + [incumbent_obj]) if open_bounds else incumbent_obj
        status_s = "node-limit"
    else:
        best_bound = incumbent_obj
        status_s = "optimal" if incumbent_x is not None else "infeasible"
    if incumbent_x is None:
        return BnbResult("infeasible" if not hit_limit else "node-limit",
                         None, None, nodes, best_bound, eng.iterations)
    return BnbResult(status_s, incumbent_obj, incumbent_x, nodes, best_bound,
                     eng.iterations)


def _pruned(bound: float, incumbent: float, integral_obj: bool) -> bool:
    if integral_obj and math.isfinite(incumbent):
        return bound > incumbent - 1.0 + 1e-6
    return bound >= incumbent - PRUNE_TOL


def _most_fractional(x: np.ndarray, int_ids: np.ndarray, tol: float,
                     priority: np.ndarray | None = None) -> tuple[int, float]:
    best = (-1, tol, 0.0)   # (var, score, value)
    best_prio = -math.inf
    for j in int_ids:
        v = float(x[j])
        f = v - math.floor(v)
        score = min(f, 1.0 - f)
        if score <= tol:
            continue
        prio = 0.0 if priority is None else float(priority[j])
        if prio > best_prio or (prio == best_prio and score > best[1]):
            best = (int(j), score, v)
            best_prio = prio
    return best[0], best[2]
