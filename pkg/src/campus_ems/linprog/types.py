from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NOT_SOLVED = "not_solved"


class SolverError(RuntimeError):
    """Raised when a solve cannot produce a trustworthy answer."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class LpSolution:
    """Result of an LP or MILP solve.

    ``duals[i]`` is the rate of change of the optimal objective (in the
    model's own sense) per unit increase of row ``i``'s right-hand side, so
    for a maximisation a binding ``<=`` row has a nonnegative dual.
    ``reduced_costs`` follows the same convention for column bounds.
    MILP results carry no duals.
    """

    status: str
    objective: float = float("nan")
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    bound: float = float("nan")
    iterations: int = 0
    nodes: int = 0
    backend: str = ""
    state: Any = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def gap(self) -> float:
        if not self.optimal or not np.isfinite(self.bound):
            return float("nan")
        return abs(self.bound - self.objective) / max(1.0, abs(self.objective))


@dataclass(frozen=True)
class BnBNode:
    depth: int
    var: int
    lower: dict
    upper: dict
    parent_bound: float
