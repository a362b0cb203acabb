"""Master MILP over a pool of scenarios.

Each pooled realisation gets its own copy of every recourse column and
constraint, all sharing one block of ESS mode binaries. The master
maximises a single variable ``phi`` bounded above by every scenario's
recourse objective (comfort minus cost), so its optimum is the best
first stage against the worst pooled scenario.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..linprog import solve_milp
from ..model.assemble import FIRST_STAGE, assemble_constraints
from ..model.diagnose import InfeasibilityReport, diagnose
from ..model.linear import LE, LinearModel, RowTag, VarTag, stack_models
from ..model.types import FirstStageDecision, SystemConfig, UncertaintyRealization

PHI = VarTag("phi", 0, "worst")


class MasterInfeasible(RuntimeError):
    def __init__(self, report: InfeasibilityReport):
        self.report = report
        super().__init__(f"master problem {report}")


def _scenario_block(config: SystemConfig, real: UncertaintyRealization, s: int) -> LinearModel:
    m = assemble_constraints(config, real, check=False)
    if s > 0:
        keep = np.array([t.group != "mode_excl" for t in m.row_tags])
        rows = np.flatnonzero(keep)
        m = m.replace(A=m.A[rows], sense=m.sense[rows], rhs=m.rhs[rows],
                      row_tags=tuple(m.row_tags[i] for i in rows))
    tags = tuple(t if t.device == FIRST_STAGE else t._replace(scenario=s) for t in m.tags)
    rtags = tuple(t if t.group == "mode_excl" else t._replace(scenario=s) for t in m.row_tags)
    return m.replace(tags=tags, row_tags=rtags)


def build_master(config: SystemConfig, scenarios: list[UncertaintyRealization]) -> LinearModel:
    """max phi  s.t.  phi <= c_s . y_s + offset_s  and all scenario constraints."""
    if not scenarios:
        raise ValueError("the master needs at least one scenario")
    config.check()
    nb, T, nv = len(config.buildings), config.T, len(config.pevs)
    for s, r in enumerate(scenarios):
        if (np.shape(r.res) != (nb, T) or np.shape(r.load) != (nb, T)
                or np.size(r.dr) != T or np.size(r.pev_soc0) != nv):
            raise ValueError(f"scenario {s}: shape does not match the configured horizon "
                             f"({nb} buildings, {T} slots, {nv} vehicles)")
    blocks = [_scenario_block(config, r, s) for s, r in enumerate(scenarios)]
    shared = [t for t in blocks[0].tags if t.device == FIRST_STAGE]
    A, maps = stack_models(blocks, shared=[PHI] + shared)
    n = A.shape[1]
    lb, ub = np.empty(n), np.empty(n)
    integer = np.zeros(n, dtype=bool)
    tags: list = [None] * n
    lb[0], ub[0], tags[0] = -np.inf, np.inf, PHI
    link = np.zeros((len(blocks), n))
    rhs_link = np.empty(len(blocks))
    for s, (b, cmap) in enumerate(zip(blocks, maps)):
        lb[cmap], ub[cmap], integer[cmap] = b.lb, b.ub, b.integer
        for j, col in enumerate(cmap):
            tags[col] = b.tags[j]
        # phi - c_s . y_s <= offset_s
        link[s, 0] = 1.0
        np.add.at(link[s], cmap, -b.c)
        rhs_link[s] = b.offset
    c = np.zeros(n)
    c[0] = 1.0
    return LinearModel(
        tags=tuple(tags), lb=lb, ub=ub, integer=integer,
        A=sp.vstack([A, sp.csr_matrix(link)], format="csr"),
        sense=np.concatenate([np.concatenate([b.sense for b in blocks]),
                              np.full(len(blocks), LE, dtype=np.int8)]),
        rhs=np.concatenate([np.concatenate([b.rhs for b in blocks]), rhs_link]), c=c,
        row_tags=tuple(t for b in blocks for t in b.row_tags)
        + tuple(RowTag("worst_link", 0, None, s) for s in range(len(blocks))),
        maximize=True)


def solve_master(config: SystemConfig, scenarios: list[UncertaintyRealization],
                 backend: str = "auto", gap: float = 1e-9):
    """Returns ``(decision, objective, bound, model, solution)``.

    Raises :class:`MasterInfeasible` with a per-group violation report.
    """
    model = build_master(config, scenarios)
    sol = solve_milp(model, gap=gap, backend=backend)
    if not sol.optimal:
        raise MasterInfeasible(diagnose(model, backend=backend))
    u_ch = np.zeros((len(config.ess_buildings), config.T))
    u_dis = np.zeros_like(u_ch)
    for j, t in enumerate(model.tags):
        if t.device == FIRST_STAGE:
            (u_ch if t.quantity == "u_ch" else u_dis)[t.index, t.slot] = round(sol.x[j])
    bound = sol.bound if np.isfinite(sol.bound) else sol.objective
    return FirstStageDecision(u_ch, u_dis), sol.objective, max(bound, sol.objective), model, sol
