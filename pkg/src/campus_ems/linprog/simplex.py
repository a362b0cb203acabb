"""Dense bounded-variable primal/dual simplex built on the pivot kernel.

Every row ``a x (sense) b`` gets a slack ``s`` with ``a x + s = b`` whose
bounds encode the sense, so ``B^-1`` is always readable from the slack
block of the tableau. Rows whose slack cannot absorb the initial residual
get an artificial column for phase one.
"""
from __future__ import annotations

import numpy as np

from ..model.linear import EQ, GE, LE, LinearModel
from . import kernel
from .types import INFEASIBLE, OPTIMAL, UNBOUNDED, LpSolution, SolverError

TOL_OPT = 1e-9
TOL_PIV = 1e-9
TOL_FEAS = 1e-9
TOL_PHASE1 = 1e-7
TOL_CHECK = 1e-7

RULES = {"bland": kernel.BLAND, "dantzig": kernel.DANTZIG}


class Tableau:
    """Simplex state for one LP in minimisation form.

    The object can be copied and re-optimised after bound or right-hand
    side changes, which is how branch-and-bound and repeated right-hand-side
    solves warm start.
    """

    def __init__(self, model: LinearModel, rule: str = "dantzig"):
        if rule not in RULES:
            raise ValueError(f"unknown pivot rule {rule!r}")
        self.rule = RULES[rule]
        self.n, self.m = model.n_vars, model.n_rows
        self.sign = -1.0 if model.maximize else 1.0
        self.offset = model.offset
        n, m = self.n, self.m
        s_lb = np.where(model.sense == GE, -np.inf, 0.0)
        s_ub = np.where(model.sense == LE, np.inf, 0.0)
        self.lb = np.concatenate([model.lb, s_lb])
        self.ub = np.concatenate([model.ub, s_ub])
        self.cost = np.concatenate([self.sign * model.c, np.zeros(m)])
        self.A_full = np.hstack([model.A.toarray(), np.eye(m)])
        self.b = np.array(model.rhs, dtype=float)
        self.iterations = 0
        self.status = None
        self._cold_start()

    # -- setup -------------------------------------------------------------
    def _initial_point(self):
        N = self.A_full.shape[1]
        x = np.zeros(N)
        status = np.full(N, kernel.FREE, dtype=np.int8)
        has_lb, has_ub = np.isfinite(self.lb), np.isfinite(self.ub)
        x[has_lb] = self.lb[has_lb]
        status[has_lb] = kernel.AT_LB
        only_ub = ~has_lb & has_ub
        x[only_ub] = self.ub[only_ub]
        status[only_ub] = kernel.AT_UB
        return x, status

    def _cold_start(self):
        n, m = self.n, self.m
        N0 = n + m
        self.A_full = self.A_full[:, :N0]
        self.lb, self.ub, self.cost = self.lb[:N0], self.ub[:N0], self.cost[:N0]
        x, status = self._initial_point()
        x[n:] = 0.0
        resid = self.b - self.A_full[:, :n] @ x[:n]
        s_lb, s_ub = self.lb[n:], self.ub[n:]
        need = (resid < s_lb - TOL_FEAS) | (resid > s_ub + TOL_FEAS)
        art_rows = np.flatnonzero(need)
        k = art_rows.size
        basis = np.empty(m, dtype=np.int64)
        basis[:] = n + np.arange(m)
        row_sign = np.ones(m)
        slack_val = np.clip(resid, s_lb, s_ub)
        x[n:] = slack_val
        for i in range(m):
            if need[i]:
                status[n + i] = kernel.AT_LB if slack_val[i] == s_lb[i] else kernel.AT_UB
                if s_lb[i] == s_ub[i]:
                    status[n + i] = kernel.AT_LB
            else:
                status[n + i] = kernel.BASIC
        if k:
            e = resid[art_rows] - slack_val[art_rows]
            sgn = np.where(e >= 0, 1.0, -1.0)
            row_sign[art_rows] = sgn
            art = np.zeros((m, k))
            art[art_rows, np.arange(k)] = sgn
            self.A_full = np.hstack([self.A_full, art])
            self.lb = np.concatenate([self.lb, np.zeros(k)])
            self.ub = np.concatenate([self.ub, np.full(k, np.inf)])
            self.cost = np.concatenate([self.cost, np.zeros(k)])
            x = np.concatenate([x, np.abs(e)])
            status = np.concatenate([status, np.full(k, kernel.BASIC, dtype=np.int8)])
            basis[art_rows] = N0 + np.arange(k)
        self.n_art = k
        self.T = np.ascontiguousarray(self.A_full * row_sign[:, None])
        self.x, self.basis, self.vstatus = x, basis, status

        if k:
            c1 = np.zeros(self.A_full.shape[1])
            c1[N0:] = 1.0
            self.d = c1 - c1[self.basis] @ self.T
            code = self._primal()
            if code != kernel.OPTIMAL:
                raise SolverError("phase one did not terminate", {"kernel_code": code})
            if self.x[N0:].sum() > TOL_PHASE1 * max(1.0, np.abs(self.b).max(initial=0.0)):
                self.status = INFEASIBLE
                return
            self._retire_artificials()
        self._reset_costs()
        code = self._primal()
        self.status = {kernel.OPTIMAL: OPTIMAL, kernel.UNBOUNDED: UNBOUNDED}.get(code)
        if self.status is None:
            raise SolverError("simplex iteration limit reached", {"iterations": self.iterations})

    def _retire_artificials(self):
        N0 = self.n + self.m
        self.lb[N0:] = 0.0
        self.ub[N0:] = 0.0
        self.x[N0:] = 0.0
        for r in range(self.m):
            if self.basis[r] < N0:
                continue
            row = self.T[r, :N0]
            cand = np.flatnonzero((np.abs(row) > 1e-7) & (self.vstatus[:N0] != kernel.BASIC))
            if cand.size == 0:
                continue  # redundant row, artificial stays basic at zero
            q = int(cand[np.argmax(np.abs(row[cand]))])
            leaving = self.basis[r]
            kernel.pivot(self.T, self.d, r, q)
            self.vstatus[leaving] = kernel.AT_LB
            self.basis[r] = q
            self.vstatus[q] = kernel.BASIC
        nb = self.vstatus[N0:] != kernel.BASIC
        self.vstatus[N0:][nb] = kernel.AT_LB

    def _reset_costs(self):
        self.d = self.cost - self.cost[self.basis] @ self.T

    def _max_iter(self):
        return 50 * (self.T.shape[0] + self.T.shape[1]) + 1000

    def _primal(self):
        code, it = kernel.primal_simplex(self.T, self.d, self.x, self.lb, self.ub, self.basis,
                                         self.vstatus, self.rule, self._max_iter(),
                                         TOL_OPT, TOL_PIV)
        self.iterations += int(it)
        return int(code)

    def _dual(self):
        code, it = kernel.dual_simplex(self.T, self.d, self.x, self.lb, self.ub, self.basis,
                                       self.vstatus, self._max_iter(), TOL_FEAS, TOL_PIV)
        self.iterations += int(it)
        return int(code)

    # -- warm start ----------------------------------------------------------
    def copy(self) -> "Tableau":
        new = object.__new__(Tableau)
        new.__dict__.update(self.__dict__)
        for name in ("T", "d", "x", "lb", "ub", "basis", "vstatus", "b"):
            setattr(new, name, getattr(self, name).copy())
        return new

    def set_bounds(self, cols, lb, ub) -> None:
        """Change structural column bounds, keeping nonbasic columns on a bound."""
        cols = np.atleast_1d(np.asarray(cols, dtype=int))
        lb = np.broadcast_to(np.asarray(lb, dtype=float), cols.shape)
        ub = np.broadcast_to(np.asarray(ub, dtype=float), cols.shape)
        self.lb[cols] = lb
        self.ub[cols] = ub
        moved = False
        for j, lo, hi in zip(cols, lb, ub):
            st = self.vstatus[j]
            if st == kernel.BASIC:
                continue
            old = self.x[j]
            if st == kernel.AT_UB and np.isfinite(hi):
                new = hi
            elif np.isfinite(lo):
                new, self.vstatus[j] = lo, kernel.AT_LB
            elif np.isfinite(hi):
                new, self.vstatus[j] = hi, kernel.AT_UB
            else:
                new, self.vstatus[j] = 0.0, kernel.FREE
            if new != old:
                self.x[j] = new
                moved = True
        if moved:
            self._recompute_basics()

    def set_rhs(self, b) -> None:
        self.b = np.array(b, dtype=float)
        self._recompute_basics()

    def _recompute_basics(self):
        xn = self.x.copy()
        xn[self.basis] = 0.0
        Binv = self.T[:, self.n:self.n + self.m]
        self.x[self.basis] = Binv @ (self.b - self.A_full @ xn)

    def dual_feasible(self, tol=1e-7) -> bool:
        st, d = self.vstatus, self.d
        movable = self.lb < self.ub
        bad = movable & (((st == kernel.AT_LB) & (d < -tol)) | ((st == kernel.AT_UB) & (d > tol))
                         | ((st == kernel.FREE) & (np.abs(d) > tol)))
        return not bad.any()

    def primal_feasible(self, tol=1e-7) -> bool:
        xb = self.x[self.basis]
        return bool(np.all(xb >= self.lb[self.basis] - tol) and np.all(xb <= self.ub[self.basis] + tol))

    def reoptimize(self) -> str:
        """Restore optimality after bound/rhs changes; cold start if needed."""
        if self.dual_feasible():
            code = self._dual()
            if code == kernel.INFEASIBLE:
                self.status = INFEASIBLE
                return self.status
            if code == kernel.OPTIMAL:
                code = self._primal()
                if code in (kernel.OPTIMAL, kernel.UNBOUNDED):
                    self.status = OPTIMAL if code == kernel.OPTIMAL else UNBOUNDED
                    return self.status
        elif self.primal_feasible():
            code = self._primal()
            if code in (kernel.OPTIMAL, kernel.UNBOUNDED):
                self.status = OPTIMAL if code == kernel.OPTIMAL else UNBOUNDED
                return self.status
        self._cold_start()
        return self.status

    # -- results ---------------------------------------------------------------
    def refine(self) -> None:
        """Recompute basic values and duals from a fresh factorisation of B.

        Reinverts the tableau and re-optimises when drift has left the basis
        slightly primal or dual infeasible. Raises ``SolverError`` if that
        does not converge.
        """
        for attempt in range(4):
            B = self.A_full[:, self.basis]
            try:
                xn = self.x.copy()
                xn[self.basis] = 0.0
                xb = np.linalg.solve(B, self.b - self.A_full @ xn)
                y = np.linalg.solve(B.T, self.cost[self.basis])
            except np.linalg.LinAlgError as exc:
                raise SolverError("singular basis", {"basis": self.basis.tolist()}) from exc
            self.x[self.basis] = xb
            self.d = self.cost - y @ self.A_full
            self.d[self.basis] = 0.0
            self.y = y
            scale = 1.0 + np.abs(xb).max(initial=0.0)
            if self.primal_feasible(TOL_CHECK * scale) and self.dual_feasible(TOL_CHECK):
                return
            if attempt == 3:
                break
            self.T = np.ascontiguousarray(np.linalg.solve(B, self.A_full))
            code = self._dual() if self.dual_feasible() else self._primal()
            if code == kernel.INFEASIBLE:
                self.status = INFEASIBLE
                return
            if code == kernel.UNBOUNDED:
                self.status = UNBOUNDED
                return
        raise SolverError("could not restore a feasible optimal basis after reinversion",
                          {"iterations": self.iterations})

    def objective(self) -> float:
        return self.sign * float(self.cost @ self.x) + self.offset

    def to_solution(self, model: LinearModel | None = None) -> LpSolution:
        if self.status != OPTIMAL:
            return LpSolution(status=self.status, iterations=self.iterations, backend="native",
                              state=self)
        self.refine()
        if self.status != OPTIMAL:
            return LpSolution(status=self.status, iterations=self.iterations, backend="native",
                              state=self)
        x = self.x[:self.n].copy()
        duals = self.sign * self.y
        rc = self.sign * self.d[:self.n]
        obj = self.objective()
        return LpSolution(status=OPTIMAL, objective=obj, x=x, duals=duals, reduced_costs=rc,
                          bound=obj, iterations=self.iterations, backend="native", state=self)


def solve_lp_native(model: LinearModel, rule: str = "dantzig") -> LpSolution:
    model = model.relaxed()
    if model.n_rows == 0:
        return _solve_boxed(model)
    return Tableau(model, rule=rule).to_solution(model)


def _solve_boxed(model: LinearModel) -> LpSolution:
    c = model.c if model.maximize else -model.c
    x = np.where(c > 0, model.ub, np.where(c < 0, model.lb,
                 np.clip(0.0, model.lb, model.ub)))
    if not np.all(np.isfinite(x)):
        return LpSolution(status=UNBOUNDED, backend="native")
    obj = model.objective_value(x)
    return LpSolution(status=OPTIMAL, objective=obj, x=x, duals=np.zeros(0),
                      reduced_costs=model.c.copy(), bound=obj, backend="native")
