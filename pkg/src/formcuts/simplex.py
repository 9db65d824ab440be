"""Bounded-variable revised simplex with warm starts and row additions.

Standard form used internally: every model row a.x (sense) rhs becomes
a.x + s = rhs with a slack column s whose bounds encode the sense
([0, inf) for <=, (-inf, 0] for >=, [0, 0] for =). Structural columns
keep the model bounds. A cold solve runs a two-phase method with
artificial columns; a warm solve reuses a basis and picks the primal or
dual method depending on which feasibility survives.

The basis inverse is kept as a dense LU factorization plus product-form
eta updates, refactorized every `refactor_every` pivots or when the
residual check trips. Pricing is textbook Dantzig with a Bland fallback
that engages after a configurable run of degenerate steps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NumericalBreakdownError, ValidationError
from .model import Constraint, MipModel, Sense

_INF = float("inf")

# nonbasic/basic status codes, kept as small ints for array storage
NB_LO, NB_UP, BASIC, NB_FREE = 0, 1, 2, 3

_STATUS_NAMES = {NB_LO: "at-lower", NB_UP: "at-upper", NB_FREE: "free"}
_STATUS_CODES = {v: k for k, v in _STATUS_NAMES.items()}


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class SimplexConfig:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    piv_tol: float = 1e-9
    refactor_every: int = 100
    residual_tol: float = 1e-9
    bland_after: int = 1000      # degenerate steps before Bland's rule engages
    max_iterations: int = 2_000_000


@dataclass(frozen=True)
class Basis:
    """Public basis snapshot.

    Column keys: 0..n_vars-1 are structural variables, n_vars + i is the
    slack of row i. `statuses` maps every nonbasic key to "at-lower",
    "at-upper" or "free".
    """

    basic: tuple[int, ...]
    statuses: dict[int, str]


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None
    reduced_costs: np.ndarray | None
    basis: Basis | None
    iterations: int
    _engine: "SimplexEngine | None" = field(default=None, repr=False, compare=False)


class _Singular(Exception):
    pass


class SimplexEngine:
    """Stateful solver core. Single-threaded; one model system per engine."""

    def __init__(self, model: MipModel, config: SimplexConfig | None = None):
        self.cfg = config or SimplexConfig()
        self.nv = model.num_vars
        arr = model.to_arrays()
        m = model.num_rows
        self.m = m
        dense = np.asarray(arr.a.todense(), dtype=np.float64).reshape(m, self.nv)
        # columns: structural | slacks (row order) ; artificials appended on demand
        self.A = np.hstack([dense, np.eye(m)])
        self.b = arr.rhs.astype(np.float64).copy()
        self.lo = np.concatenate([arr.lo, np.zeros(m)])
        self.hi = np.concatenate([arr.hi, np.zeros(m)])
        self.cost = np.concatenate([arr.c, np.zeros(m)])
        self.pub = np.concatenate([np.arange(self.nv), self.nv + np.arange(m)])
        self.slack_col = self.nv + np.arange(m)
        for i, s in enumerate(arr.senses):
            col = self.slack_col[i]
            if s == -1:
                self.lo[col], self.hi[col] = 0.0, _INF
            elif s == 1:
                self.lo[col], self.hi[col] = -_INF, 0.0
            else:
                self.lo[col], self.hi[col] = 0.0, 0.0
        self.art_col = np.full(m, -1, dtype=np.int64)
        self.ncols = self.A.shape[1]
        self.stat = np.full(self.ncols, NB_LO, dtype=np.int8)
        self.basic = np.zeros(0, dtype=np.int64)
        self.xB = np.zeros(0)
        self._lu = None
        self._etas: list[tuple[int, np.ndarray]] = []
        self._pivots_since_refactor = 0
        self.iterations = 0

    # ------------------------------------------------------------------
    # system edits

    def add_rows(self, rows: list[Constraint]) -> None:
        """Append rows (over structural variables) with fresh slack columns."""
        k = len(rows)
        if k == 0:
            return
        block = np.zeros((k, self.ncols))
        senses = []
        rhs = []
        for t, con in enumerate(rows):
            for j, c in con.expr.terms:
                if not 0 <= j < self.nv:
                    raise ValidationError(
                        f"row {con.tag!r} references column {j} outside the model")
                block[t, j] = c
            senses.append(con.sense)
            rhs.append(con.rhs)
        slack_block = np.zeros((self.m + k, k))
        slack_lo = np.zeros(k)
        slack_hi = np.zeros(k)
        for t, sense in enumerate(senses):
            slack_block[self.m + t, t] = 1.0
            if sense is Sense.LE:
                slack_lo[t], slack_hi[t] = 0.0, _INF
            elif sense is Sense.GE:
                slack_lo[t], slack_hi[t] = -_INF, 0.0
            else:
                slack_lo[t], slack_hi[t] = 0.0, 0.0
        self.A = np.vstack([self.A, block])
        self.A = np.hstack([self.A, slack_block])
        new_slacks = self.ncols + np.arange(k)
        self.b = np.concatenate([self.b, np.array(rhs, dtype=np.float64)])
        self.lo = np.concatenate([self.lo, slack_lo])
        self.hi = np.concatenate([self.hi, slack_hi])
        self.cost = np.concatenate([self.cost, np.zeros(k)])
        self.pub = np.concatenate([self.pub, self.nv + self.m + np.arange(k)])
        self.slack_col = np.concatenate([self.slack_col, new_slacks])
        self.art_col = np.concatenate([self.art_col, np.full(k, -1, dtype=np.int64)])
        self.stat = np.concatenate([self.stat, np.full(k, NB_LO, dtype=np.int8)])
        self.m += k
        self.ncols += k
        self._lu = None

    def set_var_bounds(self, lo: np.ndarray, hi: np.ndarray) -> None:
        """Replace structural bounds (branch-and-bound node switch)."""
        self.lo[:self.nv] = lo
        self.hi[:self.nv] = hi

    # ------------------------------------------------------------------
    # factorization

    def _refactor(self) -> None:
        if self.m == 0:
            self._lu = None
            self._etas = []
            self.xB = np.zeros(0)
            return
        bcols = self.A[:, self.basic]
        try:
            lu, piv = sla.lu_factor(bcols, check_finite=False)
        except Exception as exc:  # LinAlgError and friends
            raise _Singular(str(exc)) from exc
        diag = np.abs(np.diag(lu))
        scale = max(1.0, float(np.abs(bcols).max(initial=0.0)))
        if diag.size and diag.min() <= 1e-12 * scale:
            raise _Singular("basis matrix numerically singular")
        self._lu = (lu, piv)
        self._etas = []
        self._pivots_since_refactor = 0
        self._recompute_xB()
        resid = self._residual()
        if resid > max(1.0, float(np.abs(self.b).max(initial=0.0))) * 1e-6:
            raise _Singular(f"residual {resid:.2e} after refactorization")

    def _ftran(self, v: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        w = sla.lu_solve(self._lu, v, check_finite=False)
        for r, d in self._etas:
            wr = w[r] / d[r]
            w -= d * wr
            w[r] = wr
        return w

    def _btran(self, v: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        z = v.copy()
        for r, d in reversed(self._etas):
            s = float(d @ z) - d[r] * z[r]
            z[r] = (z[r] - s) / d[r]
        return sla.lu_solve(self._lu, z, trans=1, check_finite=False)

    def _nonbasic_values(self) -> np.ndarray:
        """Full column-value vector with basic entries zeroed."""
        x = np.where(self.stat == NB_UP, self.hi, self.lo)
        x[self.stat == NB_FREE] = 0.0
        x[self.stat == BASIC] = 0.0
        x[~np.isfinite(x)] = 0.0  # free-ish guards; fixed below by status rules
        return x

    def _effective_rhs(self) -> np.ndarray:
        return self.b - self.A @ self._nonbasic_values()

    def _recompute_xB(self) -> None:
        self.xB = self._ftran(self._effective_rhs())

    def _residual(self) -> float:
        lhs = self.A[:, self.basic] @ self.xB
        return float(np.abs(lhs - self._effective_rhs()).max(initial=0.0))

    def _maybe_refactor(self, force: bool = False) -> None:
        if force or self._pivots_since_refactor >= self.cfg.refactor_every:
            self._refactor()

    # ------------------------------------------------------------------
    # pricing helpers

    def _price(self, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = self._btran(cost[self.basic])
        r = cost - y @ self.A
        return y, r

    def _value_at_bound(self, j: int) -> float:
        if self.stat[j] == NB_UP:
            return self.hi[j]
        if self.stat[j] == NB_FREE:
            return 0.0
        return self.lo[j]

    # ------------------------------------------------------------------
    # primal simplex

    def _primal(self, cost: np.ndarray) -> LpStatus:
        cfg = self.cfg
        bland = False
        degen = 0
        movable = self.lo < self.hi
        while True:
            self.iterations += 1
            if self.iterations > cfg.max_iterations:
                raise NumericalBreakdownError("iteration limit exceeded")
            if self.iterations % 50 == 0 and self._residual() > self.cfg.residual_tol:
                self._refactor()
            _, r = self._price(cost)
            cand_lo = (self.stat == NB_LO) & movable & (r < -cfg.opt_tol)
            cand_up = (self.stat == NB_UP) & movable & (r > cfg.opt_tol)
            cand_fr = (self.stat == NB_FREE) & (np.abs(r) > cfg.opt_tol)
            cand = cand_lo | cand_up | cand_fr
            if not cand.any():
                return LpStatus.OPTIMAL
            idx = np.nonzero(cand)[0]
            if bland:
                j = int(idx.min())
            else:
                score = np.where(cand_lo[idx] | cand_fr[idx], -r[idx], r[idx])
                score = np.abs(score)
                j = int(idx[int(np.argmax(score))])
            direction = 1.0
            if self.stat[j] == NB_UP or (self.stat[j] == NB_FREE and r[j] > 0):
                direction = -1.0
            d = self._ftran(self.A[:, j].copy())
            dd = direction * d
            blo = self.lo[self.basic]
            bhi = self.hi[self.basic]
            pos = dd > cfg.piv_tol
            neg = dd < -cfg.piv_tol
            t = np.full(self.m, _INF)
            with np.errstate(invalid="ignore"):
                t[pos] = (self.xB[pos] - blo[pos]) / dd[pos]
                t[neg] = (self.xB[neg] - bhi[neg]) / dd[neg]
            t[~np.isfinite(t)] = _INF
            np.maximum(t, 0.0, out=t)
            t_flip = self.hi[j] - self.lo[j] if math.isfinite(self.hi[j] - self.lo[j]) else _INF
            if self.stat[j] == NB_FREE:
                t_flip = _INF
            t_row = float(t.min(initial=_INF))
            if not math.isfinite(min(t_row, t_flip)):
                return LpStatus.UNBOUNDED
            if t_flip <= t_row:
                # bound flip: the entering column swaps bounds, basis unchanged
                self.xB -= dd * t_flip
                self.stat[j] = NB_UP if self.stat[j] == NB_LO else NB_LO
                degen = degen + 1 if t_flip <= 1e-10 else 0
            else:
                ties = np.nonzero(t <= t_row + 1e-10)[0]
                if bland:
                    rr = int(ties[int(np.argmin(self.basic[ties]))])
                else:
                    rr = int(ties[int(np.argmax(np.abs(dd[ties])))])
                step = float(t[rr])
                enter_val = self._value_at_bound(j) + direction * step
                self.xB = self.xB - dd * step
                leave = int(self.basic[rr])
                self.stat[leave] = NB_LO if dd[rr] > 0 else NB_UP
                if not math.isfinite(self.lo[leave]) and self.stat[leave] == NB_LO:
                    self.stat[leave] = NB_UP if math.isfinite(self.hi[leave]) else NB_FREE
                if not math.isfinite(self.hi[leave]) and self.stat[leave] == NB_UP:
                    self.stat[leave] = NB_LO if math.isfinite(self.lo[leave]) else NB_FREE
                self.stat[j] = BASIC
                self.basic[rr] = j
                self.xB[rr] = enter_val
                self._etas.append((rr, d))
                self._pivots_since_refactor += 1
                self._maybe_refactor()
                degen = degen + 1 if step <= 1e-10 else 0
            if degen >= cfg.bland_after:
                bland = True

    # ------------------------------------------------------------------
    # dual simplex

    def _dual(self, cost: np.ndarray) -> LpStatus:
        cfg = self.cfg
        bland = False
        degen = 0
        movable = self.lo < self.hi
        # reduced costs are kept up to date across pivots; a full
        # recompute only happens after refactorization events
        _, r = self._price(cost)
        while True:
            self.iterations += 1
            if self.iterations > cfg.max_iterations:
                raise NumericalBreakdownError("iteration limit exceeded")
            if self.iterations % 50 == 0 and self._residual() > self.cfg.residual_tol:
                self._refactor()
                _, r = self._price(cost)
            blo = self.lo[self.basic]
            bhi = self.hi[self.basic]
            up_viol = self.xB - bhi
            lo_viol = blo - self.xB
            viol = np.maximum(up_viol, lo_viol)
            worst = float(viol.max(initial=-_INF))
            if worst <= cfg.feas_tol:
                return LpStatus.OPTIMAL
            if bland:
                rows = np.nonzero(viol > cfg.feas_tol)[0]
                rr = int(rows[int(np.argmin(self.basic[rows]))])
            else:
                rr = int(np.argmax(viol))
            rho = 1.0 if up_viol[rr] >= lo_viol[rr] else -1.0
            e = np.zeros(self.m)
            e[rr] = 1.0
            alpha = self._btran(e) @ self.A
            ra = rho * alpha
            elig_lo = (self.stat == NB_LO) & movable & (ra > cfg.piv_tol)
            elig_up = (self.stat == NB_UP) & movable & (ra < -cfg.piv_tol)
            elig_fr = (self.stat == NB_FREE) & (np.abs(alpha) > cfg.piv_tol)
            elig = elig_lo | elig_up | elig_fr
            if not elig.any():
                return LpStatus.INFEASIBLE
            idx = np.nonzero(elig)[0]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = r[idx] / ra[idx]
            ratios = np.maximum(ratios, 0.0)
            ratios[~np.isfinite(ratios)] = 0.0
            if bland:
                best = float(ratios.min())
                tie = idx[ratios <= best + 1e-12]
                j = int(tie.min())
            else:
                best = float(ratios.min())
                tie = idx[ratios <= best + 1e-12]
                j = int(tie[int(np.argmax(np.abs(alpha[tie])))])
            d = self._ftran(self.A[:, j].copy())
            if abs(d[rr]) <= cfg.piv_tol:
                # numerically hopeless pivot; refactor once and retry, else fail
                if self._etas:
                    self._refactor()
                    _, r = self._price(cost)
                    continue
                return LpStatus.INFEASIBLE
            target = bhi[rr] if rho > 0 else blo[rr]
            delta = (self.xB[rr] - target) / d[rr]
            self.xB = self.xB - d * delta
            leave = int(self.basic[rr])
            self.stat[leave] = NB_UP if rho > 0 else NB_LO
            enter_val = self._value_at_bound(j) + delta
            self.stat[j] = BASIC
            self.basic[rr] = j
            self.xB[rr] = enter_val
            self._etas.append((rr, d))
            self._pivots_since_refactor += 1
            self._maybe_refactor()
            if not self._etas:
                _, r = self._price(cost)
            else:
                r = r - (float(r[j]) / float(ra[j])) * ra
            degen = degen + 1 if abs(delta) <= 1e-10 else 0
            if degen >= cfg.bland_after:
                bland = True

    # ------------------------------------------------------------------
    # phases and drivers

    def _cold_start(self) -> np.ndarray:
        """All-slack/artificial start; returns the phase-1 cost vector."""
        self.stat[:] = NB_LO
        free_mask = ~np.isfinite(self.lo)
        up_mask = free_mask & np.isfinite(self.hi)
        self.stat[up_mask] = NB_UP
        self.stat[free_mask & ~np.isfinite(self.hi)] = NB_FREE
        resid = self._effective_rhs()
        basic = []
        art_needed: list[tuple[int, float]] = []
        for i in range(self.m):
            s = self.slack_col[i]
            r = resid[i]
            if self.lo[s] - 1e-12 <= r <= self.hi[s] + 1e-12:
                basic.append(s)
            else:
                basic.append(-1 - i)  # placeholder, resolved to an artificial below
                art_needed.append((i, r))
        # install artificial columns where the slack cannot absorb the residual
        grow = [i for i, _ in art_needed if self.art_col[i] < 0]
        if grow:
            addition = np.zeros((self.m, len(grow)))
            for t, i in enumerate(grow):
                self.art_col[i] = self.ncols + t
                addition[i, t] = 1.0
            self.A = np.hstack([self.A, addition])
            self.lo = np.concatenate([self.lo, np.zeros(len(grow))])
            self.hi = np.concatenate([self.hi, np.zeros(len(grow))])
            self.cost = np.concatenate([self.cost, np.zeros(len(grow))])
            self.pub = np.concatenate([self.pub, np.full(len(grow), -1, dtype=np.int64)])
            self.stat = np.concatenate([self.stat, np.full(len(grow), NB_LO, dtype=np.int8)])
            self.ncols += len(grow)
        phase1 = np.zeros(self.ncols)
        art_active = False
        for i, r in art_needed:
            col = int(self.art_col[i])
            self.A[i, col] = 1.0 if r >= 0 else -1.0
            self.lo[col], self.hi[col] = 0.0, _INF
            phase1[col] = 1.0
            art_active = True
        # any artificial not needed this round stays fixed at zero
        for i in range(self.m):
            col = int(self.art_col[i])
            if col >= 0 and phase1[col] == 0.0:
                self.lo[col], self.hi[col] = 0.0, 0.0
        self.basic = np.array(
            [self.slack_col[i] if basic[i] >= 0 else self.art_col[i]
             for i in range(self.m)], dtype=np.int64)
        self.stat[self.basic] = BASIC
        return phase1 if art_active else np.zeros(0)

    def _close_phase1(self, phase1: np.ndarray) -> None:
        """Fix artificials at zero for phase 2."""
        active = np.nonzero(phase1)[0]
        for col in active:
            self.lo[col], self.hi[col] = 0.0, 0.0
            if self.stat[col] != BASIC:
                self.stat[col] = NB_LO

    def solve(self, warm: Basis | None = None) -> LpStatus:
        if warm is not None:
            try:
                return self._solve_warm(warm)
            except (_Singular, NumericalBreakdownError):
                pass  # fall through to a cold solve
        return self._solve_cold()

    def _solve_cold(self) -> LpStatus:
        phase1 = self._cold_start()
        try:
            self._refactor()
        except _Singular as exc:
            raise NumericalBreakdownError(f"cold basis singular: {exc}") from exc
        if phase1.size:
            st = self._primal(phase1)
            if st is not LpStatus.OPTIMAL:
                raise NumericalBreakdownError("phase 1 terminated unbounded")
            infeas = float(phase1 @ self._full_x())
            if infeas > self.cfg.feas_tol * max(1.0, float(np.abs(self.b).max(initial=0.0))):
                return LpStatus.INFEASIBLE
            self._close_phase1(phase1)
            self._recompute_xB()
        try:
            return self._primal(self.cost)
        except _Singular as exc:
            raise NumericalBreakdownError(str(exc)) from exc

    def _solve_warm(self, warm: Basis) -> LpStatus:
        prev_basic = None
        if self._lu is not None and getattr(self, "basic", None) is not None:
            prev_basic = self.basic.copy()
        self._install(warm)
        # a branch step changes bounds but not the basis; the current
        # factorization then still represents it and only the basic
        # values need refreshing
        if (prev_basic is not None and prev_basic.shape == self.basic.shape
                and np.array_equal(prev_basic, self.basic)):
            self._recompute_xB()
            if self._residual() > self.cfg.residual_tol:
                self._refactor()
        else:
            self._refactor()
        cfg = self.cfg
        blo = self.lo[self.basic]
        bhi = self.hi[self.basic]
        primal_ok = bool(((self.xB >= blo - cfg.feas_tol)
                          & (self.xB <= bhi + cfg.feas_tol)).all())
        _, r = self._price(self.cost)
        movable = self.lo < self.hi
        bad_lo = (self.stat == NB_LO) & movable & (r < -10 * cfg.opt_tol)
        bad_up = (self.stat == NB_UP) & movable & (r > 10 * cfg.opt_tol)
        bad_fr = (self.stat == NB_FREE) & (np.abs(r) > 10 * cfg.opt_tol)
        dual_ok = not (bad_lo | bad_up | bad_fr).any()
        if primal_ok:
            return self._primal(self.cost)
        if dual_ok:
            st = self._dual(self.cost)
            if st is LpStatus.INFEASIBLE:
                return st
            return self._primal(self.cost)  # polish; returns immediately if optimal
        raise _Singular("warm basis neither primal nor dual feasible")

    def _install(self, warm: Basis) -> None:
        if len(warm.basic) != self.m:
            raise _Singular(f"warm basis has {len(warm.basic)} rows, engine has {self.m}")
        cols = []
        seen = set()
        for key in warm.basic:
            if key in seen:
                raise _Singular("warm basis repeats a column")
            seen.add(key)
            if 0 <= key < self.nv:
                cols.append(key)
            elif self.nv <= key < self.nv + self.m:
                cols.append(int(self.slack_col[key - self.nv]))
            else:
                raise _Singular(f"warm basis key {key} out of range")
        self.stat[:] = NB_LO
        free_mask = ~np.isfinite(self.lo)
        self.stat[free_mask & np.isfinite(self.hi)] = NB_UP
        self.stat[free_mask & ~np.isfinite(self.hi)] = NB_FREE
        for key, name in warm.statuses.items():
            col = (key if key < self.nv else int(self.slack_col[key - self.nv])
                   ) if key < self.nv + self.m else None
            if col is None:
                continue
            code = _STATUS_CODES.get(name)
            if code is None:
                continue
            if code == NB_UP and not math.isfinite(self.hi[col]):
                code = NB_LO
            if code == NB_LO and not math.isfinite(self.lo[col]):
                code = NB_UP if math.isfinite(self.hi[col]) else NB_FREE
            self.stat[col] = code
        # artificial columns stay fixed at zero and nonbasic
        for i in range(self.m):
            col = int(self.art_col[i])
            if col >= 0:
                self.lo[col], self.hi[col] = 0.0, 0.0
                self.stat[col] = NB_LO
        self.basic = np.array(cols, dtype=np.int64)
        self.stat[self.basic] = BASIC

    # ------------------------------------------------------------------
    # extraction

    def _full_x(self) -> np.ndarray:
        x = self._nonbasic_values()
        x[self.basic] = self.xB
        return x

    def result(self, status: LpStatus) -> LpResult:
        if status is not LpStatus.OPTIMAL:
            obj = -_INF if status is LpStatus.UNBOUNDED else math.nan
            return LpResult(status, None, obj, None, None, None, self.iterations, self)
        x = self._full_x()
        xs = np.array(x[:self.nv])
        y = self._btran(self.cost[self.basic])
        red = self.cost - y @ self.A
        basic_pub = []
        for rr in range(self.m):
            col = int(self.basic[rr])
            key = int(self.pub[col])
            if key < 0:  # artificial basic at zero level: report the row's slack
                key = self.nv + rr
            basic_pub.append(key)
        statuses = {}
        for col in range(self.ncols):
            if self.stat[col] == BASIC or self.pub[col] < 0:
                continue
            statuses[int(self.pub[col])] = _STATUS_NAMES[int(self.stat[col])]
        obj = float(self.cost[:self.nv] @ xs)
        return LpResult(LpStatus.OPTIMAL, xs, obj, np.array(y),
                        np.array(red[:self.nv]), Basis(tuple(basic_pub), statuses),
                        self.iterations, self)


def solve_lp(model: MipModel, warm: Basis | None = None,
             config: SimplexConfig | None = None) -> LpResult:
    """Solve the continuous relaxation of `model`.

    Integer kinds are ignored (bounds still apply); callers that care
    pass an explicit lp_relaxation. Deterministic given (model, warm).
    """
    eng = SimplexEngine(model, config)
    eng.iterations = 0
    status = eng.solve(warm)
    return eng.result(status)


def reoptimize_with_rows(model: MipModel, new_rows: list[Constraint],
                         prev: LpResult) -> LpResult:
    """Add rows to a solved system and reoptimize, dual simplex first.

    `model` is the system `prev` solved (used only for the rebuild
    fallback when the previous engine is unavailable).
    """
    eng = prev._engine
    if eng is None or prev.basis is None:
        return _rebuild_and_solve(model, new_rows)
    base_m = eng.m
    eng.add_rows(new_rows)
    ext_basic = list(prev.basis.basic) + [eng.nv + base_m + t for t in range(len(new_rows))]
    warm = Basis(tuple(ext_basic), dict(prev.basis.statuses))
    eng.iterations = 0
    try:
        eng._install(warm)
        eng._refactor()
        st = eng._dual(eng.cost)
        if st is LpStatus.OPTIMAL:
            st = eng._primal(eng.cost)
        return eng.result(st)
    except (_Singular, NumericalBreakdownError):
        try:
            st = eng._solve_cold()
            return eng.result(st)
        except NumericalBreakdownError:
            return _rebuild_and_solve(model, new_rows)


def _rebuild_and_solve(model: MipModel, new_rows: list[Constraint]) -> LpResult:
    extended = MipModel(model.name, model.variables,
                        model.constraints + tuple(new_rows), model.objective)
    return solve_lp(extended)


@dataclass
class TableauRow:
    """One simplex tableau row: basic = rhs - sum coef * shifted nonbasic.

    Nonbasic columns are expressed as nonnegative deviations from their
    active bound; `entries` maps public column key -> (coefficient,
    status string). Keys >= n_vars denote row slacks.
    """

    basic_key: int
    rhs: float
    entries: dict[int, tuple[float, str]]


def tableau_row(result: LpResult, var_id: int) -> TableauRow:
    """Extract the tableau row of a basic structural variable."""
    eng = result._engine
    if eng is None or result.status is not LpStatus.OPTIMAL:
        raise ValidationError("tableau rows require an optimal result with engine state")
    rows = [rr for rr in range(eng.m) if eng.basic[rr] == var_id]
    if not rows:
        raise ValidationError(f"variable {var_id} is not basic")
    rr = rows[0]
    e = np.zeros(eng.m)
    e[rr] = 1.0
    alpha = eng._btran(e) @ eng.A
    entries: dict[int, tuple[float, str]] = {}
    for col in range(eng.ncols):
        if eng.stat[col] == BASIC or eng.pub[col] < 0:
            continue
        if eng.lo[col] == eng.hi[col]:
            continue  # fixed columns cannot move; they contribute nothing
        coef = float(alpha[col])
        if abs(coef) <= 1e-12:
            continue
        status = _STATUS_NAMES[int(eng.stat[col])]
        if eng.stat[col] == NB_UP:
            coef = -coef
        entries[int(eng.pub[col])] = (coef, status)
    return TableauRow(basic_key=int(var_id), rhs=float(eng.xB[rr]), entries=entries)
