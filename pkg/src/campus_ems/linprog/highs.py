"""HiGHS (through scipy) as the backend for models too large for a dense tableau."""
from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from ..model.linear import EQ, GE, LE, LinearModel
from .types import INFEASIBLE, NOT_SOLVED, OPTIMAL, UNBOUNDED, LpSolution, SolverError

_LP_STATUS = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}


def solve_lp_highs(model: LinearModel) -> LpSolution:
    sign = -1.0 if model.maximize else 1.0
    A = model.A.tocsr()
    le = np.flatnonzero(model.sense == LE)
    ge = np.flatnonzero(model.sense == GE)
    eq = np.flatnonzero(model.sense == EQ)
    ub_rows = np.concatenate([le, ge])
    A_ub = sp.vstack([A[le], -A[ge]], format="csr") if ub_rows.size else None
    b_ub = np.concatenate([model.rhs[le], -model.rhs[ge]]) if ub_rows.size else None
    A_eq = A[eq] if eq.size else None
    b_eq = model.rhs[eq] if eq.size else None
    bounds = np.column_stack([model.lb, model.ub])
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in bounds]
    res = linprog(sign * model.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options={"primal_feasibility_tolerance": 1e-9,
                                           "dual_feasibility_tolerance": 1e-9})
    status = _LP_STATUS.get(res.status)
    if status is None:
        raise SolverError(f"HiGHS LP failed: {res.message}", {"status": res.status})
    if status != OPTIMAL:
        return LpSolution(status=status, backend="highs")
    duals = np.zeros(model.n_rows)
    if ub_rows.size:
        mu = res.ineqlin.marginals
        duals[le] = mu[:le.size]
        duals[ge] = -mu[le.size:]
    if eq.size:
        duals[eq] = res.eqlin.marginals
    duals *= sign
    rc = sign * (res.lower.marginals + res.upper.marginals)
    x = np.asarray(res.x, dtype=float)
    obj = model.objective_value(x)
    return LpSolution(status=OPTIMAL, objective=obj, x=x, duals=duals, reduced_costs=rc,
                      bound=obj, iterations=int(getattr(res, "nit", 0)), backend="highs")


def solve_milp_highs(model: LinearModel, gap: float = 1e-6, abs_gap: float = 1e-9,
                     time_limit: float | None = None) -> LpSolution:
    sign = -1.0 if model.maximize else 1.0
    lo = np.where(model.sense == LE, -np.inf, model.rhs)
    hi = np.where(model.sense == GE, np.inf, model.rhs)
    constraints = [LinearConstraint(model.A.tocsr(), lo, hi)] if model.n_rows else []
    options = {"mip_rel_gap": gap, "presolve": True}
    highs_extra = {"mip_abs_gap": abs_gap, "primal_feasibility_tolerance": 1e-9,
                   "dual_feasibility_tolerance": 1e-9}
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = _run_milp(sign * model.c, constraints, model.integer.astype(int),
                    Bounds(model.lb, model.ub), options, highs_extra)
    if res.status == 2:
        return LpSolution(status=INFEASIBLE, backend="highs")
    if res.status == 3:
        return LpSolution(status=UNBOUNDED, backend="highs")
    if res.x is None:
        if res.status == 1:
            return LpSolution(status=NOT_SOLVED, backend="highs")
        raise SolverError(f"HiGHS MILP failed: {res.message}", {"status": res.status})
    x = np.asarray(res.x, dtype=float)
    xi = model.integer
    x[xi] = np.round(x[xi])
    obj = model.objective_value(x)
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None or not np.isfinite(bound) else sign * bound + model.offset
    status = OPTIMAL if res.status == 0 else NOT_SOLVED
    return LpSolution(status=status, objective=obj, x=x, bound=bound,
                      nodes=int(getattr(res, "mip_node_count", 0) or 0), backend="highs")



def _run_milp(c, constraints, integrality, bounds, options, extra):
    # scipy forwards unknown options to HiGHS verbatim but warns about them
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Unrecognized options", category=RuntimeWarning)
        return milp(c, constraints=constraints, integrality=integrality, bounds=bounds,
                    options={**options, **extra})
