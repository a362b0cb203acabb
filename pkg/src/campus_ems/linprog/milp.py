"""Branch-and-bound over the dense simplex.

Nodes are explored depth first with ties broken by the best parent bound;
each child starts from its parent's optimal tableau (copied for all but
the last child to leave the queue) and is re-optimised with the dual
simplex.
"""
from __future__ import annotations

import heapq
import itertools
import math

import numpy as np

from ..model.linear import LinearModel
from .simplex import Tableau, solve_lp_native
from .types import INFEASIBLE, NOT_SOLVED, OPTIMAL, UNBOUNDED, BnBNode, LpSolution, SolverError

INT_TOL = 1e-6


def solve_milp_native(model: LinearModel, gap: float = 1e-6, abs_gap: float = 1e-9,
                      max_nodes: int = 500_000, rule: str = "dantzig",
                      trace: list | None = None) -> LpSolution:
    """Solve ``model`` to within ``gap`` (relative) or ``abs_gap``.

    If ``trace`` is a list, ``(BnBNode, relaxation value)`` pairs are appended
    to it for every solved node.
    """
    if not model.is_mip:
        return solve_lp_native(model, rule=rule)
    relax = model.relaxed()
    sense = 1.0 if model.maximize else -1.0
    int_idx = np.flatnonzero(model.integer)
    lb0 = relax.lb.copy()
    ub0 = relax.ub.copy()
    lb0[int_idx] = np.ceil(lb0[int_idx] - INT_TOL)
    ub0[int_idx] = np.floor(ub0[int_idx] + INT_TOL)
    if np.any(lb0 > ub0):
        return LpSolution(status=INFEASIBLE, backend="native")
    relax = relax.with_bounds(lb0, ub0)
    root = Tableau(relax, rule=rule)
    if root.status == INFEASIBLE:
        return LpSolution(status=INFEASIBLE, iterations=root.iterations, backend="native")
    if root.status == UNBOUNDED:
        return LpSolution(status=UNBOUNDED, iterations=root.iterations, backend="native")

    counter = itertools.count()
    best_x = None
    best_val = -math.inf  # in maximisation sense
    heap: list = []
    root_node = BnBNode(depth=0, var=-1, lower={}, upper={}, parent_bound=sense * math.inf)
    heapq.heappush(heap, (0, -math.inf, next(counter), root_node, (root, [1]), True))
    nodes = 0
    iterations = 0

    def close_enough(bound: float) -> bool:
        diff = bound - best_val
        return diff <= max(abs_gap, gap * max(1.0, abs(best_val)))

    while heap:
        if nodes >= max_nodes:
            break
        _, _, _, node, (parent, pending), is_root = heapq.heappop(heap)
        pending[0] -= 1
        if best_x is not None and close_enough(sense * node.parent_bound):
            continue
        if is_root:
            state = parent
        else:
            state = parent.copy() if pending[0] else parent
            for j, v in node.lower.items():
                state.set_bounds([j], v, state.ub[j])
            for j, v in node.upper.items():
                state.set_bounds([j], state.lb[j], v)
            state.reoptimize()
        nodes += 1
        iterations = max(iterations, state.iterations)
        if state.status == INFEASIBLE:
            continue
        if state.status == UNBOUNDED:
            raise SolverError("unbounded relaxation inside the tree", {"node": node})
        val = sense * state.objective()
        if trace is not None:
            trace.append((node, sense * val))
        if best_x is not None and close_enough(val):
            continue
        xi = state.x[int_idx]
        frac = np.abs(xi - np.round(xi))
        if frac.max(initial=0.0) <= INT_TOL:
            best_val = val
            best_x = state.x[:model.n_vars].copy()
            continue
        score = np.minimum(xi - np.floor(xi), np.ceil(xi) - xi)
        k = int(np.argmax(score))
        j = int(int_idx[k])
        v = xi[k]
        down = BnBNode(node.depth + 1, j, {}, {j: math.floor(v)}, sense * val)
        up = BnBNode(node.depth + 1, j, {j: math.ceil(v)}, {}, sense * val)
        first, second = (down, up) if v - math.floor(v) < 0.5 else (up, down)
        shared = (state, [2])
        for child in (first, second):
            heapq.heappush(heap, (-child.depth, -val, next(counter), child, shared, False))

    if best_x is None:
        if heap:
            return LpSolution(status=NOT_SOLVED, nodes=nodes, backend="native")
        return LpSolution(status=INFEASIBLE, nodes=nodes, backend="native")
    open_bound = max((sense * e[3].parent_bound for e in heap), default=-math.inf)
    bound_max = max(best_val, open_bound)
    status = OPTIMAL if (not heap or close_enough(open_bound)) else NOT_SOLVED
    sol = _polish(model, best_x, rule)
    sol.bound = sense * bound_max + 0.0
    sol.nodes = nodes
    sol.iterations = iterations
    sol.status = status if sol.status == OPTIMAL else sol.status
    return sol


def _polish(model: LinearModel, x: np.ndarray, rule: str) -> LpSolution:
    """Fix the integer columns at their rounded values and re-solve the LP."""
    int_idx = np.flatnonzero(model.integer)
    xi = np.round(x[int_idx])
    lb = model.lb.copy()
    ub = model.ub.copy()
    lb[int_idx] = xi
    ub[int_idx] = xi
    fixed = model.relaxed().with_bounds(lb, ub)
    sol = solve_lp_native(fixed, rule=rule)
    if not sol.optimal:
        raise SolverError("incumbent lost feasibility after rounding", {"status": sol.status})
    sol.x[int_idx] = xi
    sol.duals = None
    sol.reduced_costs = None
    sol.state = None
    return sol
