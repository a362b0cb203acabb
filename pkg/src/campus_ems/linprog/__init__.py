"""LP/MILP kernel: dense simplex, branch-and-bound, dualisation.

``backend="native"`` always uses the in-package simplex; ``"highs"`` uses
scipy's HiGHS; ``"auto"`` picks native while the dense tableau stays small.
"""
from __future__ import annotations

from ..model.linear import LinearModel
from .dual import DualModel, dualize
from .kernel import IMPLEMENTATION as KERNEL
from .milp import solve_milp_native
from .mps import write_mps
from .simplex import Tableau, solve_lp_native
from .types import (INFEASIBLE, NOT_SOLVED, OPTIMAL, UNBOUNDED, BnBNode, LpSolution,
                    SolverError)

# dense tableau entries (rows x columns) above which "auto" switches to HiGHS
NATIVE_LIMIT = 400_000
# plain branch-and-bound has no cuts or presolve; beyond this many integer
# columns "auto" hands MILPs to HiGHS
NATIVE_INT_LIMIT = 24

__all__ = [
    "BnBNode", "DualModel", "INFEASIBLE", "KERNEL", "LpSolution", "NOT_SOLVED", "OPTIMAL",
    "SolverError", "Tableau", "UNBOUNDED", "dualize", "pick_backend", "solve_lp",
    "solve_milp", "write_mps",
]


def pick_backend(model: LinearModel, backend: str = "auto") -> str:
    if backend not in ("auto", "native", "highs"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend != "auto":
        return backend
    size = model.n_rows * (model.n_vars + 2 * model.n_rows)
    if model.is_mip and int(model.integer.sum()) > NATIVE_INT_LIMIT:
        return "highs"
    return "native" if size <= NATIVE_LIMIT else "highs"


def solve_lp(model: LinearModel, backend: str = "auto", rule: str = "dantzig") -> LpSolution:
    """Solve the LP relaxation of ``model``."""
    model = model.relaxed()
    if pick_backend(model, backend) == "native":
        return solve_lp_native(model, rule=rule)
    from .highs import solve_lp_highs
    return solve_lp_highs(model)


def solve_milp(model: LinearModel, gap: float = 1e-6, backend: str = "auto",
               abs_gap: float = 1e-9, rule: str = "dantzig", **kw) -> LpSolution:
    if not model.is_mip:
        return solve_lp(model, backend=backend, rule=rule)
    if pick_backend(model, backend) == "native":
        return solve_milp_native(model, gap=gap, abs_gap=abs_gap, rule=rule, **kw)
    from .highs import solve_milp_highs
    return solve_milp_highs(model, gap=gap, abs_gap=abs_gap, **kw)
