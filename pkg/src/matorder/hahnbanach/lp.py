"""Dense dual simplex on a compact (Tucker) tableau with Bland's anti-cycling rule.

By default pivots follow the most infeasible row and the largest pivot among
near-tied ratios; after a run of degenerate pivots the solver drops to Bland's
lowest-label rule until progress resumes.  ``rule="bland"`` uses Bland throughout.

Every variable lives in a box ``[-B, B]``.  Shifting each variable to the bound
favoured by the objective makes the all-slack basis dual feasible, so the
solver never needs a phase one: it runs the dual simplex until the primal rows
are satisfied or a row proves infeasibility.  Rows may be appended between
solves, which is what the cutting-plane loops rely on.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_BOX = 1e6
FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
HARRIS_TOL = 1e-9
BLAND_PIVOT_TOL = 1e-6
STALL_PIVOTS = 50
ACCEPT_TOL = 1e-8


@dataclass
class LPInstance:
    """Rows ``a . x >= b``; an optional objective is maximized, otherwise feasibility only."""

    variable_count: int
    rows: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    objective: np.ndarray | None = None
    bound: float = DEFAULT_BOX

    def __post_init__(self):
        self.rows = [np.asarray(r, dtype=float).reshape(-1) for r in self.rows]
        self.rhs = [float(b) for b in self.rhs]
        if len(self.rows) != len(self.rhs):
            raise ValueError("rows and rhs differ in length")
        for r in self.rows:
            if r.size != self.variable_count:
                raise ValueError(f"row of length {r.size} for {self.variable_count} variables")
            if not np.all(np.isfinite(r)):
                raise ValueError("non-finite coefficient")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("non-finite right-hand side")

    def add_row(self, a, b) -> None:
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.size != self.variable_count or not np.all(np.isfinite(a)) or not np.isfinite(b):
            raise ValueError("malformed row")
        self.rows.append(a)
        self.rhs.append(float(b))

    def max_violation(self, x) -> float:
        if not self.rows:
            return 0.0
        a = np.array(self.rows)
        return float(max(0.0, np.max(np.asarray(self.rhs) - a @ x)))


@dataclass
class LPSolution:
    feasible: bool
    x: np.ndarray | None
    objective: float | None = None
    violating_row: int | None = None
    pivots: int = 0

    def __bool__(self) -> bool:
        return self.feasible


class InfeasibleLP(Exception):
    def __init__(self, message: str, row: int | None):
        super().__init__(message)
        self.row = row


class DualSimplex:
    """Maximize ``c . x`` subject to rows ``a . x <= b`` and the box ``|x_j| <= bound_j``.

    Row labels: ``0..N-1`` are the (shifted) structural variables, ``N..2N-1`` the box
    slacks, and ``2N + i`` the slack of the ``i``-th appended row.
    """

    def __init__(self, n: int, objective=None, bound=DEFAULT_BOX, rule: str = "stable"):
        self.n = n
        c = np.zeros(n) if objective is None else np.asarray(objective, dtype=float).reshape(n)
        self.bound = np.broadcast_to(np.asarray(bound, dtype=float), (n,)).copy()
        if np.any(self.bound <= 0):
            raise ValueError("bounds must be positive")
        self.rule = rule
        # x = offset + sign * y with y in [0, 2B]
        self.sign = np.where(c > 0, -1.0, 1.0)
        self.offset = np.where(c > 0, self.bound, -self.bound)
        self.c = c
        self.raw_rows: list[np.ndarray] = []
        self.raw_rhs: list[float] = []
        self.pivots = 0
        self._stalled = False
        self._y_rows = np.zeros((0, n))
        self._y_rhs = np.zeros(0)
        self._init_tableau()

    def _init_tableau(self):
        n = self.n
        self.T = np.eye(n)
        self.rhs = 2 * self.bound.copy()
        self.basic = list(range(n, 2 * n))
        self.nonbasic = list(range(n))
        self.obj = -(self.c * self.sign)
        self.obj_rhs = float(self.c @ self.offset)
        self._positions()

    def _positions(self):
        self.row_of = {lab: i for i, lab in enumerate(self.basic)}
        self.col_of = {lab: j for j, lab in enumerate(self.nonbasic)}

    @property
    def row_count(self) -> int:
        return len(self.raw_rows)

    def add_rows(self, a, b) -> None:
        """Append rows ``a . x <= b`` (``a`` is ``k x n``)."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        ya = a * self.sign
        yb = b - a @ self.offset
        for arow, brow, yrow, ybrow in zip(a, b, ya, yb):
            self.raw_rows.append(arow)
            self.raw_rhs.append(float(brow))
            label = 2 * self.n + len(self.raw_rows) - 1
            t = np.zeros(len(self.nonbasic))
            rhs = ybrow
            for j in range(self.n):
                if yrow[j] == 0.0:
                    continue
                if j in self.col_of:
                    t[self.col_of[j]] += yrow[j]
                else:
                    r = self.row_of[j]
                    t -= yrow[j] * self.T[r]
                    rhs -= yrow[j] * self.rhs[r]
            self.T = np.vstack([self.T, t])
            self.rhs = np.append(self.rhs, rhs)
            self.basic.append(label)
            self.row_of[label] = len(self.basic) - 1
        self._y_rows = np.vstack([self._y_rows, ya])
        self._y_rhs = np.append(self._y_rhs, yb)

    def _pivot(self, r: int, s: int) -> None:
        p = self.T[r, s]
        row = self.T[r] / p
        row[s] = 1.0 / p
        rhs_r = self.rhs[r] / p
        col = self.T[:, s].copy()
        col[r] = 0.0
        self.T -= np.outer(col, row)
        self.T[:, s] = -col / p
        self.T[r] = row
        self.rhs -= col * rhs_r
        self.rhs[r] = rhs_r
        os_ = self.obj[s]
        self.obj = self.obj - os_ * row
        self.obj[s] = -os_ / p
        self.obj_rhs -= os_ * rhs_r
        lb, ln = self.basic[r], self.nonbasic[s]
        self.basic[r], self.nonbasic[s] = ln, lb
        del self.row_of[lb], self.col_of[ln]
        self.row_of[ln] = r
        self.col_of[lb] = s
        self.pivots += 1

    def _choose_row(self, tol: float) -> int | None:
        neg = np.flatnonzero(self.rhs < -tol)
        if neg.size == 0:
            return None
        if self.rule == "bland" or self._stalled:
            labels = np.asarray(self.basic)[neg]
            return int(neg[np.argmin(labels)])
        return int(neg[np.argmin(self.rhs[neg])])

    def _choose_col(self, r: int) -> int | None:
        t = self.T[r]
        cand = np.flatnonzero(t < -PIVOT_TOL * max(1.0, np.max(np.abs(t))))
        if cand.size == 0:
            return None
        ratios = np.maximum(self.obj[cand], 0.0) / -t[cand]
        best = ratios.min()
        if self._stalled or self.rule == "bland":
            tie = cand[ratios <= best + 1e-12 * max(1.0, best)]
            big = np.abs(t[tie]) >= BLAND_PIVOT_TOL * np.abs(t[tie]).max()
            tie = tie[big]
            labels = np.asarray(self.nonbasic)[tie]
            return int(tie[np.argmin(labels)])
        # near-ties: take the largest pivot element for stability
        tie = cand[ratios <= best + HARRIS_TOL]
        return int(tie[np.argmax(-t[tie])])

    def refactor(self) -> None:
        """Rebuild the tableau for the current basis from the stored rows."""
        n = self.n
        nb = self.nonbasic
        ys_basic = [lab for lab in self.basic if lab < n]
        ys_non = [lab for lab in nb if lab < n]
        # Equations for tight rows (those whose slack is nonbasic): A_t y = b_t - slack.
        tight = [lab for lab in nb if lab >= n]
        a_full = np.vstack([np.eye(n), self._y_rows])
        b_full = np.concatenate([2 * self.bound, self._y_rhs])
        rows_t = [lab - n for lab in tight]
        at, bt = a_full[rows_t], b_full[rows_t]
        if ys_basic:
            m = at[:, ys_basic]
            minv = np.linalg.solve(m, np.eye(len(ys_basic)))
        else:
            minv = np.zeros((0, 0))
        col_pos = {lab: j for j, lab in enumerate(nb)}
        # y_basic = minv (b_t - A_t[:, nonbasic y] y_n - s_t)
        expr = np.zeros((len(ys_basic), len(nb)))
        for j, lab in enumerate(ys_non):
            expr[:, col_pos[lab]] = minv @ at[:, lab]
        for i, lab in enumerate(tight):
            expr[:, col_pos[lab]] += minv[:, i]
        yb_val = minv @ bt
        T = np.zeros((len(self.basic), len(nb)))
        rhs = np.zeros(len(self.basic))
        ypos = {lab: i for i, lab in enumerate(ys_basic)}
        for r, lab in enumerate(self.basic):
            if lab < n:
                T[r] = expr[ypos[lab]]
                rhs[r] = yb_val[ypos[lab]]
            else:
                a = a_full[lab - n]
                T[r] = -(a[ys_basic] @ expr) if ys_basic else 0.0
                for ylab in ys_non:
                    T[r, col_pos[ylab]] += a[ylab]
                rhs[r] = b_full[lab - n] - (a[ys_basic] @ yb_val if ys_basic else 0.0)
        cy = self.c * self.sign
        obj = np.zeros(len(nb))
        obj_rhs = float(self.c @ self.offset)
        if ys_basic:
            obj -= cy[ys_basic] @ expr
            obj_rhs += cy[ys_basic] @ yb_val
        for ylab in ys_non:
            obj[col_pos[ylab]] += cy[ylab]
        self.T, self.rhs = T, rhs
        self.obj, self.obj_rhs = -obj, obj_rhs

    def x(self) -> np.ndarray:
        y = np.zeros(self.n)
        for lab, r in self.row_of.items():
            if lab < self.n:
                y[lab] = self.rhs[r]
        return self.offset + self.sign * y

    def max_violation(self, x=None) -> float:
        x = self.x() if x is None else x
        viol = np.abs(x) - self.bound
        v = float(max(0.0, viol.max()))
        if self.raw_rows:
            v = max(v, float(np.max(np.array(self.raw_rows) @ x - np.array(self.raw_rhs))))
        return v

    def solve(self, max_pivots: int = 100000, tol: float = FEAS_TOL, refactor_every: int = 200) -> LPSolution:
        since = 0
        start = self.pivots
        flat = 0
        self._stalled = False
        for _ in range(3):
            while self.pivots - start < max_pivots:
                r = self._choose_row(tol)
                if r is None:
                    break
                s = self._choose_col(r)
                if s is None:
                    self.refactor()
                    if self.rhs[r] >= -tol:
                        continue
                    lab = self.basic[r]
                    row = lab - 2 * self.n if lab >= 2 * self.n else None
                    return LPSolution(False, None, None, row, self.pivots - start)
                before = self.obj_rhs
                self._pivot(r, s)
                # a run of degenerate pivots switches to Bland's rule, which cannot cycle
                flat = flat + 1 if abs(self.obj_rhs - before) <= 1e-12 * max(1.0, abs(before)) else 0
                self._stalled = flat >= STALL_PIVOTS
                since += 1
                if since >= refactor_every:
                    self.refactor()
                    since = 0
            self.refactor()
            if self._choose_row(tol) is None:
                break
        x = self.x()
        # leftover infeasibility at roundoff level relative to the box is accepted
        if self._choose_row(tol) is not None and \
                self.max_violation(x) > ACCEPT_TOL * max(1.0, float(np.max(self.bound))):
            raise RuntimeError("dual simplex did not converge")
        return LPSolution(True, x, float(self.c @ x), None, self.pivots - start)


def lp_feasible(inst: LPInstance, rule: str = "stable") -> LPSolution:
    """Find a point with ``a . x >= b`` for every row (maximizing the objective if one is set)."""
    solver = DualSimplex(inst.variable_count, inst.objective, inst.bound, rule)
    if inst.rows:
        solver.add_rows(-np.array(inst.rows), -np.array(inst.rhs))
    return solver.solve()
