"""Two-stage robust scheduling by column-and-constraint generation."""
from .ccg import DEFAULT_MAX_ITER, DEFAULT_TOL, CcgResult, CcgState, IterationRecord, ccg_solve
from .master import MasterInfeasible, build_master, solve_master
from .sets import DeviationPattern, UncertaintySets
from .subproblem import (BigMError, RecourseInfeasible, SubproblemResult, build_subproblem,
                         solve_subproblem)

__all__ = [
    "DEFAULT_MAX_ITER", "DEFAULT_TOL", "BigMError", "CcgResult", "CcgState", "DeviationPattern",
    "IterationRecord", "MasterInfeasible", "RecourseInfeasible", "SubproblemResult",
    "UncertaintySets",
    "build_master", "build_subproblem", "ccg_solve", "solve_master", "solve_subproblem",
]
