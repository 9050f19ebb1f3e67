"""Dense bounded-variable simplex (primal two-phase plus dual for re-solves).

Every structural variable has finite bounds; row ``i`` gets a slack with
``A_i x + s_i = b_i`` whose bounds encode the sense. The tableau
``T = B^-1 [A | I | R]`` is kept explicitly and refreshed from the basis
every ``refactor_every`` pivots. Rows whose initial slack violates its
bounds receive an artificial column ``R`` for phase 1.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from .model import INFEASIBLE, ITERATION_LIMIT, LE, OPTIMAL, UNBOUNDED, LinearProgram, LpSolution

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2


class Tableau:
    """Simplex state for one LP; copyable for branch-and-bound children."""

    feas_tol = 1e-9
    dual_tol = 1e-9
    piv_tol = 1e-11
    refactor_every = 100  # at least; large tableaus refactor every m pivots
    confirm_after = 1  # pivots since the last refactor that trigger a fresh check at optimality

    def __init__(self, A, senses, b, c, lo, hi, kern=None):
        self.k = kern or kernels
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        self.b = np.asarray(b, dtype=float)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("structural variables need finite bounds")
        s_lo = np.array([0.0 if s in (LE, "=") else -np.inf for s in senses])
        s_hi = np.array([np.inf if s == LE else 0.0 for s in senses])

        # start with structurals at their lower bounds
        resid = self.b - A @ lo
        art_rows, art_sign = [], []
        slack_status = np.full(m, BASIC, dtype=np.int8)
        for i in range(m):
            if resid[i] > s_hi[i] + self.feas_tol:
                art_rows.append(i)
                art_sign.append(1.0)
                slack_status[i] = AT_UPPER
            elif resid[i] < s_lo[i] - self.feas_tol:
                art_rows.append(i)
                art_sign.append(-1.0)
                slack_status[i] = AT_LOWER
        na = len(art_rows)
        R = np.zeros((m, na))
        R[art_rows, np.arange(na)] = art_sign
        self.M = np.hstack([A, np.eye(m), R])
        self.N = n + m + na
        self.n_art = na
        self.lb = np.concatenate([lo, s_lo, np.zeros(na)])
        self.ub = np.concatenate([hi, s_hi, np.full(na, np.inf)])
        self.cost = np.concatenate([np.asarray(c, float), np.zeros(m + na)])
        self.status = np.concatenate([np.full(n, AT_LOWER, dtype=np.int8), slack_status,
                                      np.zeros(na, dtype=np.int8)])
        basis = np.arange(n, n + m, dtype=np.int64)
        for j, i in enumerate(art_rows):
            basis[i] = n + m + j
        self.basis = basis
        self.status[basis] = BASIC
        self.iterations = 0
        self._since_refactor = 0
        # the starting basis is a signed identity, so no factorization is needed
        sign = self.M[np.arange(m), basis]
        self.active_cost = self._phase1_cost() if na else self.cost
        self.T = np.ascontiguousarray(self.M * sign[:, None])
        self.beta = sign * (self.b - self.M @ self.nonbasic_values())
        self.lbB = self.lb[self.basis].copy()
        self.ubB = self.ub[self.basis].copy()
        self.movable = (self.ub > self.lb).astype(np.uint8)
        self.reprice()

    # ------------------------------------------------------------------
    def _phase1_cost(self):
        c = np.zeros(self.N)
        c[self.n + self.m:] = -1.0
        return c

    def copy(self) -> "Tableau":
        t = object.__new__(Tableau)
        t.__dict__.update(self.__dict__)
        for name in ("T", "d", "beta", "basis", "status", "lb", "ub", "lbB", "ubB",
                     "movable", "active_cost"):
            setattr(t, name, getattr(self, name).copy())
        return t

    def snapshot(self):
        """Basis and bounds only; enough to rebuild the tableau later."""
        return (self.basis.copy(), self.status.copy(), self.lb.copy(), self.ub.copy())

    def restore(self, snap) -> "Tableau":
        """New tableau sharing this LP's data, rebuilt from ``snap``."""
        t = object.__new__(Tableau)
        t.__dict__.update(self.__dict__)
        basis, status, lb, ub = snap
        t.basis, t.status, t.lb, t.ub = basis.copy(), status.copy(), lb.copy(), ub.copy()
        t.refactor(self.cost)
        return t

    def nonbasic_values(self):
        x = np.where(self.status == AT_UPPER, self.ub, self.lb)
        x[self.basis] = 0.0
        # free nonbasic variables (never produced here) would sit at 0
        return np.where(np.isfinite(x), x, 0.0)

    def refactor(self, cost=None):
        """Rebuild ``T``, basic values and reduced costs from the basis."""
        if cost is not None:
            self.active_cost = np.asarray(cost, dtype=float)
        B = self.M[:, self.basis]
        xN = self.nonbasic_values()
        if self.m:
            Binv = np.linalg.inv(B)
            self.T = np.ascontiguousarray(Binv @ self.M)
            self.beta = Binv @ (self.b - self.M @ xN)
        else:
            self.T = np.zeros((0, self.N))
            self.beta = np.zeros(0)
        self.d = np.ascontiguousarray(self.active_cost - self.active_cost[self.basis] @ self.T)
        self.d[self.basis] = 0.0
        self.lbB = self.lb[self.basis].copy()
        self.ubB = self.ub[self.basis].copy()
        self.movable = (self.ub > self.lb).astype(np.uint8)
        self._since_refactor = 0

    def _fresh_values(self):
        """Recompute basic values and reduced costs from the basis without
        rebuilding ``T`` (cheaper check before accepting optimality)."""
        if self.m:
            B = self.M[:, self.basis]
            self.beta = np.linalg.solve(B, self.b - self.M @ self.nonbasic_values())
            y = np.linalg.solve(B.T, self.active_cost[self.basis])
            d = self.active_cost - y @ self.M
        else:
            d = self.active_cost.copy()
        d[self.basis] = 0.0
        self.d = np.ascontiguousarray(d)

    def reprice(self, cost=None):
        """Reduced costs for ``cost`` from the current ``T``."""
        if cost is not None:
            self.active_cost = np.asarray(cost, dtype=float)
        d = self.active_cost - self.active_cost[self.basis] @ self.T
        d[self.basis] = 0.0
        self.d = np.ascontiguousarray(d)

    def values(self):
        x = self.nonbasic_values()
        x[self.basis] = self.beta
        return x

    # ------------------------------------------------------------------
    def _pivot(self, r, q):
        self.k.pivot(self.T, self.d, r, q)
        leaving = self.basis[r]
        self.basis[r] = q
        self.status[q] = BASIC
        self.lbB[r] = self.lb[q]
        self.ubB[r] = self.ub[q]
        self._since_refactor += 1
        return leaving

    def primal(self, max_iter=100000):
        """Primal simplex from a primal feasible basis. Returns a status string."""
        m, N = self.m, self.N
        degenerate = 0
        bland = False
        bland_after = 10 * (m + N)
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            if self._since_refactor >= max(self.refactor_every, self.m):
                self.refactor()
            q, direction = self.k.price(self.d, self.status, self.movable, self.dual_tol, bland)
            if q < 0:
                # confirm on a fresh factorization before declaring optimality
                if self._since_refactor >= self.confirm_after:
                    self._fresh_values()
                    q, direction = self.k.price(self.d, self.status, self.movable,
                                                self.dual_tol, bland)
                    if q >= 0:
                        self.refactor()
                        continue
                if q < 0:
                    return OPTIMAL
            self.iterations += 1
            col = np.ascontiguousarray(self.T[:, q])
            r, theta, to_upper = self.k.primal_ratio(col, self.beta, self.lbB, self.ubB,
                                                     direction, self.piv_tol, bland, self.basis)
            span = self.ub[q] - self.lb[q]
            if span <= theta:
                # bound flip, basis unchanged
                self.beta -= direction * span * col
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                degenerate = 0
                continue
            if r < 0:
                return UNBOUNDED
            degenerate = degenerate + 1 if theta <= self.feas_tol else 0
            if degenerate > bland_after:
                bland = True
            enter_val = (self.lb[q] if direction > 0 else self.ub[q]) + direction * theta
            self.beta -= direction * theta * col
            leaving = self._pivot(r, q)
            self.beta[r] = enter_val
            self.status[leaving] = AT_UPPER if to_upper else AT_LOWER

    def dual(self, max_iter=100000):
        """Dual simplex from a dual feasible basis (used after bound changes)."""
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            if self._since_refactor >= max(self.refactor_every, self.m):
                self.refactor()
            r, to_upper = self.k.dual_leave(self.beta, self.lbB, self.ubB, self.feas_tol)
            if r < 0:
                return OPTIMAL
            self.iterations += 1
            row = np.ascontiguousarray(self.T[r])
            q = self.k.dual_ratio(row, self.d, self.status, self.movable, to_upper, self.piv_tol)
            if q < 0:
                return INFEASIBLE
            target = self.ubB[r] if to_upper else self.lbB[r]
            step = (self.beta[r] - target) / row[q]
            xq = self.ub[q] if self.status[q] == AT_UPPER else self.lb[q]
            self.beta -= step * self.T[:, q]
            leaving = self._pivot(r, q)
            self.beta[r] = xq + step
            self.status[leaving] = AT_UPPER if to_upper else AT_LOWER

    def set_bounds(self, j, lo, hi):
        """Change bounds of column ``j`` keeping the basis dual feasible."""
        if self.status[j] != BASIC:
            old = self.ub[j] if self.status[j] == AT_UPPER else self.lb[j]
        self.lb[j] = lo
        self.ub[j] = hi
        self.movable[j] = hi > lo
        if self.status[j] == BASIC:
            r = int(np.nonzero(self.basis == j)[0][0])
            self.lbB[r] = lo
            self.ubB[r] = hi
            return
        if self.d[j] > self.dual_tol:
            self.status[j] = AT_UPPER
        elif self.d[j] < -self.dual_tol:
            self.status[j] = AT_LOWER
        else:
            self.status[j] = AT_UPPER if old >= hi else AT_LOWER
        new = self.ub[j] if self.status[j] == AT_UPPER else self.lb[j]
        if new != old:
            # nonbasic move: only the basic values shift
            self.beta -= (new - old) * self.T[:, j]

    # ------------------------------------------------------------------
    def solve(self, max_iter=100000):
        """Two-phase primal simplex. Returns a status string."""
        if self.n_art:
            st = self.primal(max_iter)
            if st != OPTIMAL:
                return st
            art = slice(self.n + self.m, self.N)
            if self.values()[art].sum() > self.feas_tol * max(1.0, np.abs(self.b).max(initial=0.0)):
                return INFEASIBLE
            self._drive_out_artificials()
            self.lb[art] = 0.0
            self.ub[art] = 0.0
            self.ubB = self.ub[self.basis].copy()
            self.lbB = self.lb[self.basis].copy()
            self.movable = (self.ub > self.lb).astype(np.uint8)
            self.reprice(self.cost)
        return self.primal(max_iter)

    def _drive_out_artificials(self):
        first_art = self.n + self.m
        for r in range(self.m):
            if self.basis[r] < first_art:
                continue
            row = self.T[r, :first_art]
            cand = np.nonzero((np.abs(row) > 1e-7) & (self.status[:first_art] != BASIC))[0]
            if len(cand) == 0:
                continue  # redundant row; artificial stays basic at zero
            q = int(cand[np.argmax(np.abs(row[cand]))])
            xq = self.ub[q] if self.status[q] == AT_UPPER else self.lb[q]
            leaving = self._pivot(r, q)
            self.beta[r] = xq
            self.status[leaving] = AT_LOWER

    def objective(self):
        return float(self.cost[: self.n] @ self.values()[: self.n])

    def duals(self):
        """Row duals ``y = c_B B^-1`` recovered from the slack reduced costs."""
        return -self.d[self.n:self.n + self.m].copy()

    def check(self):
        """Max primal bound violation and max dual infeasibility at this basis."""
        x = self.values()
        pviol = float(max(np.max(self.lb - x, initial=0.0), np.max(x - self.ub, initial=0.0)))
        d = self.d
        movable = self.movable.astype(bool)
        dviol = np.concatenate([
            d[(self.status == AT_LOWER) & movable],
            -d[(self.status == AT_UPPER) & movable],
        ])
        return pviol, float(np.max(dviol, initial=0.0))


def solve_lp(lp: LinearProgram, max_iter: int = 100000, kern=None, return_tableau=False):
    """Solve the LP relaxation of ``lp`` (binary flags ignored)."""
    A, senses, b, c, lo, hi, _ = lp.arrays()
    if np.any(lo > hi):
        sol = LpSolution(INFEASIBLE)
        return (sol, None) if return_tableau else sol
    tab = Tableau(A, senses, b, c, lo, hi, kern=kern)
    status = tab.solve(max_iter)
    if status == OPTIMAL:
        x = tab.values()[: tab.n]
        sol = LpSolution(OPTIMAL, x, tab.objective(), tab.duals(),
                         tab.d[: tab.n].copy(), tab.iterations)
    else:
        sol = LpSolution(status, iterations=tab.iterations)
    return (sol, tab) if return_tableau else sol
