"""Name the constraint groups behind an infeasible model."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linear import EQ, GE, LE, LinearModel, VarTag


@dataclass
class InfeasibilityReport:
    """Minimal total elastic violation, summed per constraint group."""

    total: float
    groups: dict[str, float]
    rows: list[tuple[str, float]] = field(default_factory=list)

    def worst_group(self) -> str | None:
        return max(self.groups, key=self.groups.get) if self.groups else None

    def to_json(self) -> dict:
        return {"total_violation": self.total, "groups": self.groups,
                "rows": [{"row": r, "violation": v} for r, v in self.rows]}

    def __str__(self) -> str:
        parts = ", ".join(f"{g} ({v:.3g})" for g, v in sorted(self.groups.items(),
                                                              key=lambda kv: -kv[1]))
        return f"infeasible; violated groups: {parts}"


def elastic_model(model: LinearModel) -> LinearModel:
    """Add one nonnegative slack per violable direction and minimise their sum."""
    m, n = model.n_rows, model.n_vars
    down = np.flatnonzero((model.sense == LE) | (model.sense == EQ))  # a x - e <= b
    up = np.flatnonzero((model.sense == GE) | (model.sense == EQ))    # a x + e >= b
    k = down.size + up.size
    E = sp.csr_matrix((np.concatenate([-np.ones(down.size), np.ones(up.size)]),
                       (np.concatenate([down, up]), np.arange(k))), shape=(m, k))
    tags = model.tags + tuple(VarTag("elastic", int(i), "minus" if j < down.size else "plus")
                              for j, i in enumerate(np.concatenate([down, up])))
    return LinearModel(tags=tags, lb=np.concatenate([model.lb, np.zeros(k)]),
                       ub=np.concatenate([model.ub, np.full(k, np.inf)]),
                       integer=np.concatenate([model.integer, np.zeros(k, dtype=bool)]),
                       A=sp.hstack([model.A, E], format="csr"), sense=model.sense,
                       rhs=model.rhs, c=np.concatenate([np.zeros(n), np.ones(k)]),
                       row_tags=model.row_tags, maximize=False, offset=0.0)


def diagnose(model: LinearModel, backend: str = "auto", tol: float = 1e-7
             ) -> InfeasibilityReport:
    """Report the rows that must be relaxed, and by how much, to restore feasibility."""
    from ..linprog import solve_milp

    el = elastic_model(model)
    sol = solve_milp(el, backend=backend)
    if not sol.optimal:
        # only bounds can make the elastic model infeasible
        bad = np.flatnonzero(model.lb > model.ub)
        return InfeasibilityReport(float("inf"), {"bounds": float(len(bad))},
                                   [(model.tags[j].label(), float("inf")) for j in bad])
    e = sol.x[model.n_vars:]
    rows = np.concatenate([np.flatnonzero((model.sense == LE) | (model.sense == EQ)),
                           np.flatnonzero((model.sense == GE) | (model.sense == EQ))])
    per_row: dict[int, float] = defaultdict(float)
    for i, v in zip(rows, e):
        if v > tol:
            per_row[int(i)] += float(v)
    groups: dict[str, float] = defaultdict(float)
    for i, v in per_row.items():
        groups[model.row_tags[i].group] += v
    listed = sorted(((model.row_tags[i].label(), v) for i, v in per_row.items()),
                    key=lambda rv: -rv[1])
    return InfeasibilityReport(float(e.sum()), dict(groups), listed)
