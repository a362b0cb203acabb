"""Column-and-constraint generation.

Bound naming follows the maximisation: ``lb`` is the best proven lower
bound on the worst-case value of any first stage tried so far
(nondecreasing), ``ub`` is the master bound over the scenario pool
(nonincreasing, since each added scenario only tightens the master).
The subproblem is solved to an absolute gap of ``tol / 10`` and its dual
bound, not its incumbent, feeds ``lb``.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..model.types import FirstStageDecision, SystemConfig, UncertaintyRealization
from .master import solve_master
from .subproblem import RecourseInfeasible, SubproblemResult, solve_subproblem

DEFAULT_TOL = 1e-2
DEFAULT_MAX_ITER = 50


@dataclass
class IterationRecord:
    iteration: int
    lb: float
    ub: float
    gap: float
    wall_time: float
    sub_value: float
    master_value: float
    scenarios: int
    decision: FirstStageDecision | None = field(default=None, repr=False)  # first stage probed


@dataclass
class CcgState:
    iteration: int = 0
    scenarios: list[UncertaintyRealization] = field(default_factory=list)
    lb: float = -np.inf
    ub: float = np.inf
    incumbent: FirstStageDecision | None = None
    log: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    worst: UncertaintyRealization | None = None   # worst case of the incumbent
    worst_value: float = np.nan                   # subproblem objective there
    tol: float = DEFAULT_TOL

    @property
    def gap(self) -> float:
        return self.ub - self.lb

    @property
    def value(self) -> float:
        """Proven lower bound on the incumbent's worst-case value."""
        return self.lb

    @property
    def bound(self) -> float:
        return self.ub

    def add_scenario(self, r: UncertaintyRealization) -> bool:
        if any(r.same_as(p) for p in self.scenarios):
            return False
        self.scenarios.append(r)
        return True

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "LB", "UB", "gap", "wall_time", "sub_value", "master_value",
                    "scenarios"])
        for r in self.log:
            w.writerow([r.iteration, repr(r.lb), repr(r.ub), repr(r.gap), f"{r.wall_time:.3f}",
                        repr(r.sub_value), repr(r.master_value), r.scenarios])
        return buf.getvalue()

    def scenarios_json(self) -> list[dict]:
        return [r.to_json() for r in self.scenarios]

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"iterations": out / "iterations.csv", "scenarios": out / "scenarios.json"}
        paths["iterations"].write_text(self.log_csv())
        paths["scenarios"].write_text(json.dumps(self.scenarios_json(), indent=1) + "\n")
        return paths


@dataclass
class CcgResult:
    state: CcgState
    decision: FirstStageDecision
    worst_scenarios: list[UncertaintyRealization]


def ccg_solve(config: SystemConfig, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
              backend: str = "auto", big_m=None, start: FirstStageDecision | None = None,
              master_gap: float = 1e-9, verbose: bool = False) -> CcgResult:
    """Alternate worst-case subproblem and master until ``ub - lb <= tol``.

    The loop starts from ``start`` (all ESS idle by default): the
    subproblem's worst case at the current first stage raises ``lb`` and
    joins the pool, then the master over the pool lowers ``ub`` and
    proposes the next first stage. A pooled scenario returned again means
    the master already priced it in, so the bounds meet. A realisation
    where the current first stage has no recourse joins the pool without
    moving ``lb``.

    Raises :class:`~campus_ems.robust.master.MasterInfeasible` when the
    master has no feasible first stage.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    config.check()
    t0 = time.perf_counter()
    state = CcgState(tol=tol)
    x = start if start is not None else FirstStageDecision.idle(config)
    for it in range(1, max_iter + 1):
        state.iteration = it
        probed = x
        try:
            sub: SubproblemResult = solve_subproblem(config, x, big_m=big_m, backend=backend,
                                                     abs_gap=tol / 10)
            found, sub_value = sub.realization, sub.value
            proven = min(sub.value, sub.bound)
            if proven > state.lb:
                state.lb = proven
                state.incumbent, state.worst, state.worst_value = x, sub.realization, sub.value
        except RecourseInfeasible as exc:
            # x has no recourse there; the scenario acts as a feasibility cut
            found, sub_value = exc.realization, -np.inf
        master_value = np.nan
        if state.ub - state.lb > tol:
            state.add_scenario(found)
            x, master_value, bound, _, _ = solve_master(config, state.scenarios,
                                                        backend=backend, gap=master_gap)
            state.ub = min(state.ub, bound)
        state.log.append(IterationRecord(it, state.lb, state.ub, state.ub - state.lb,
                                         time.perf_counter() - t0, sub_value, master_value,
                                         len(state.scenarios), probed))
        if verbose:
            print(f"iter {it}: LB {state.lb:.6f} UB {state.ub:.6f} gap {state.gap:.3g} "
                  f"({time.perf_counter() - t0:.1f}s)", flush=True)
        if state.ub - state.lb <= tol:
            state.converged = True
            break
    return CcgResult(state, state.incumbent, list(state.scenarios))
