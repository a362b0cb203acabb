"""Brute-force references for tiny instances: every vertex, every first stage.

Only the LP simplex is used. All realisations and first-stage patterns
change right-hand sides only, so one optimal basis certifies the value of
every vertex whose right-hand side keeps that basis primal feasible (dual
feasibility does not depend on the right-hand side). Vertices it does not
cover are re-solved from a warm start, and the new basis is then tried on
the rest. Every value is therefore an exact LP optimum, not an estimate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .linprog import INFEASIBLE, OPTIMAL, Tableau
from .model.assemble import FIRST_STAGE, PLACEHOLDERS, assemble_constraints
from .model.linear import LinearModel
from .model.types import FirstStageDecision, SystemConfig, TimeGrid, UncertaintyRealization

VERTEX_CAP = 10**6
PATTERN_CAP = 10**5
TIE = 1e-9


class EnumerationCapExceeded(ValueError):
    pass


class RobustInfeasible(RuntimeError):
    """Some vertex leaves the recourse problem infeasible."""

    def __init__(self, realization: UncertaintyRealization, decision: FirstStageDecision):
        self.realization, self.decision = realization, decision
        super().__init__("recourse LP infeasible at an uncertainty vertex")


def _sign_patterns(n: int, budget: int) -> list[np.ndarray]:
    """All vectors in {-1, 0, 1}^n with at most ``budget`` nonzeros."""
    out = []
    for k in range(min(budget, n) + 1):
        for idx in itertools.combinations(range(n), k):
            for signs in itertools.product((1, -1), repeat=k):
                v = np.zeros(n)
                v[list(idx)] = signs
                out.append(v)
    return out


def _subset_patterns(n: int, budget: int) -> list[np.ndarray]:
    out = []
    for k in range(min(budget, n) + 1):
        for idx in itertools.combinations(range(n), k):
            v = np.zeros(n)
            v[list(idx)] = 1.0
            out.append(v)
    return out


def vertex_count(sets, grid: TimeGrid) -> int:
    """Closed-form number of budget-feasible 0/1 deviation patterns."""
    T = grid.slot_count
    nb = sets.res_nominal.shape[0]
    nv = sets.soc0_nominal.size

    def signed(n, g):
        return sum(math.comb(n, k) * 2**k for k in range(min(g, n) + 1))

    return (signed(T, sets.gamma_w) ** nb * signed(T, sets.gamma_d) ** nb * signed(nv, sets.gamma_z)
            * sum(math.comb(T, k) for k in range(min(sets.gamma_i, T) + 1)))


@dataclass
class VertexEnumeration:
    """All vertex realisations, stored as one row of values per vertex.

    Columns of ``res`` / ``load`` are (building, slot) flattened.
    """

    res: np.ndarray       # (V, buildings * slots)
    load: np.ndarray
    pev_soc0: np.ndarray  # (V, vehicles)
    dr: np.ndarray        # (V, slots)
    shape: tuple[int, int, int]

    def __len__(self) -> int:
        return self.dr.shape[0]

    def realization(self, k: int) -> UncertaintyRealization:
        nb, T, _ = self.shape
        return UncertaintyRealization(self.res[k].reshape(nb, T), self.load[k].reshape(nb, T),
                                      self.pev_soc0[k], self.dr[k])

    @property
    def realizations(self) -> list[UncertaintyRealization]:
        return [self.realization(k) for k in range(len(self))]

    def vectors(self) -> np.ndarray:
        """Rows in the order of :meth:`UncertaintyRealization.vector`."""
        return np.hstack([self.res, self.load, self.pev_soc0, self.dr])


def enumerate_vertices(sets, grid: TimeGrid, cap: int = VERTEX_CAP) -> VertexEnumeration:
    """Every combination of per-set vertex patterns within the budgets."""
    count = vertex_count(sets, grid)
    if count > cap:
        raise EnumerationCapExceeded(
            f"{count} vertices exceed the cap of {cap}; shrink the horizon, devices or budgets")
    T = grid.slot_count
    nb = sets.res_nominal.shape[0]
    nv = sets.soc0_nominal.size

    def values(nominal, plus, minus, pats):
        return [nominal + np.where(p > 0, plus, 0.0) - np.where(p < 0, minus, 0.0) for p in pats]

    res_opts = [values(sets.res_nominal[i], sets.res_plus[i], sets.res_minus[i],
                       _sign_patterns(T, sets.gamma_w)) for i in range(nb)]
    load_opts = [values(sets.load_nominal[i], sets.load_plus[i], sets.load_minus[i],
                        _sign_patterns(T, sets.gamma_d)) for i in range(nb)]
    soc_opts = values(sets.soc0_nominal, sets.soc0_plus, sets.soc0_minus,
                      _sign_patterns(nv, sets.gamma_z))
    dr_opts = [1.0 - (1.0 - sets.dr_floor) * s for s in _subset_patterns(T, sets.gamma_i)]

    def combos(options):
        if not options:
            return np.zeros((1, 0))
        rows = [np.concatenate(c) for c in itertools.product(*options)]
        return np.array(rows)

    R, L = combos(res_opts), combos(load_opts)
    S, D = np.array(soc_opts).reshape(len(soc_opts), nv), np.array(dr_opts)
    idx = np.array(list(itertools.product(range(len(R)), range(len(L)), range(len(S)),
                                          range(len(D)))), dtype=int).reshape(-1, 4)
    assert len(idx) == count
    return VertexEnumeration(R[idx[:, 0]], L[idx[:, 1]], S[idx[:, 2]], D[idx[:, 3]],
                             (nb, T, nv))


class _RhsFamily:
    """The recourse LP with first stage and uncertain data as right-hand-side parameters."""

    def __init__(self, config: SystemConfig):
        full = assemble_constraints(config)
        par = [j for j, t in enumerate(full.tags) if t.device == FIRST_STAGE
               or t.device in PLACEHOLDERS]
        zero = dict.fromkeys(par, 0.0)
        base = full.fix(zero)
        keep = np.flatnonzero(np.diff(base.A.indptr) > 0)  # drop the mode exclusivity rows
        self.lp = base.replace(A=base.A[keep], sense=base.sense[keep], rhs=base.rhs[keep],
                               row_tags=tuple(base.row_tags[i] for i in keep))
        A_par = full.A.tocsc()[:, par][keep]
        self.A_par = A_par.toarray()
        tags = [full.tags[j] for j in par]
        nb, T, nv = len(config.buildings), config.T, len(config.pevs)
        self.fs_pos = {(t.index, t.quantity, t.slot): k for k, t in enumerate(tags)
                       if t.device == FIRST_STAGE}
        # position of each placeholder in the order res, load, soc0, dr
        order = []
        for k, t in enumerate(tags):
            if t.device == "res":
                order.append((k, t.index * T + t.slot))
            elif t.device == "load":
                order.append((k, nb * T + t.index * T + t.slot))
            elif t.device == "pev_init":
                order.append((k, 2 * nb * T + t.index))
            elif t.device == "dr":
                order.append((k, 2 * nb * T + nv + t.slot))
        self.ph_par = np.array([k for k, _ in order], dtype=int)
        self.ph_vec = np.array([p for _, p in order], dtype=int)
        self.n_par = len(par)

    def rhs(self, x: FirstStageDecision, vectors: np.ndarray) -> np.ndarray:
        """Right-hand sides, one column per realisation vector."""
        theta = np.zeros((self.n_par, vectors.shape[0]))
        for (k, q, t), pos in self.fs_pos.items():
            theta[pos] = (x.u_ch if q == "u_ch" else x.u_dis)[k, t]
        theta[self.ph_par] = vectors[:, self.ph_vec].T
        return self.lp.rhs[:, None] - self.A_par @ theta


def _evaluate_family(tab: Tableau, lp: LinearModel, R: np.ndarray):
    """Optimal values for every right-hand-side column of ``R`` (``-inf`` if infeasible)."""
    V = R.shape[1]
    values = np.full(V, np.nan)
    pending = np.arange(V)
    n = tab.n
    while pending.size:
        if tab.status != OPTIMAL:
            tab = _start(lp, R[:, pending[0]])
            if tab.status != OPTIMAL:
                values[pending[0]] = -np.inf
                pending = pending[1:]
                continue
        basis = tab.basis  # may hold a zero-bounded artificial on a redundant row
        B = tab.A_full[:, basis]
        xn = tab.x.copy()
        xn[basis] = 0.0
        Nx = tab.A_full @ xn
        XB = np.linalg.solve(B, R[:, pending] - Nx[:, None])
        lo, hi = tab.lb[basis][:, None], tab.ub[basis][:, None]
        scale = 1.0 + np.abs(XB).max(axis=0)
        ok = np.all((XB >= lo - 1e-9 * scale) & (XB <= hi + 1e-9 * scale), axis=0)
        if ok.any():
            X = np.repeat(xn[:n, None], ok.sum(), axis=1)
            struct = basis < n
            X[basis[struct]] = XB[struct][:, ok]
            values[pending[ok]] = lp.c @ X + lp.offset
        pending = pending[~ok]
        if not pending.size:
            break
        nxt = tab.copy()
        nxt.set_rhs(R[:, pending[0]])
        status = nxt.reoptimize()
        if status == INFEASIBLE:
            values[pending[0]] = -np.inf
            pending = pending[1:]
            continue
        if status != OPTIMAL:
            raise RuntimeError(f"recourse LP {status}")
        nxt.refine()
        tab = nxt
    return values, tab


def _start(lp: LinearModel, b: np.ndarray) -> Tableau:
    """An optimal tableau for one right-hand side, or any basis if that one is infeasible."""
    tab = Tableau(lp.replace(rhs=b))
    if tab.status == OPTIMAL:
        tab.refine()
    return tab


def _argmin_lex(values: np.ndarray, vectors: np.ndarray) -> int:
    best = values.min()
    near = np.flatnonzero(values <= best + TIE * max(1.0, abs(best)))
    if near.size == 1:
        return int(near[0])
    order = np.lexsort(vectors[near].T[::-1])
    return int(near[order[0]])


@dataclass
class WorstCase:
    realization: UncertaintyRealization
    value: float
    values: np.ndarray          # value at every vertex, in enumeration order
    vertices: VertexEnumeration


def _sets(config: SystemConfig):
    from .robust.sets import UncertaintySets  # data container only
    return UncertaintySets.from_config(config)


def worst_case_by_enumeration(config: SystemConfig, x: FirstStageDecision,
                              cap: int = VERTEX_CAP) -> WorstCase:
    """Minimum recourse value over all vertices; raises on an infeasible vertex."""
    config.check()
    issues = x.issues(config)
    if issues:
        raise ValueError("; ".join(issues))
    verts = enumerate_vertices(_sets(config), config.grid, cap)
    fam = _RhsFamily(config)
    vecs = verts.vectors()
    R = fam.rhs(x, vecs)
    values, _ = _evaluate_family(_start(fam.lp, R[:, 0]), fam.lp, R)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise RobustInfeasible(verts.realization(int(bad[0])), x)
    k = _argmin_lex(values, vecs)
    return WorstCase(verts.realization(k), float(values[k]), values, verts)


def first_stage_patterns(config: SystemConfig, cap: int = PATTERN_CAP):
    """Every (idle, charge, discharge) assignment per ESS and slot."""
    n = len(config.ess_buildings) * config.T
    if 3**n > cap:
        raise EnumerationCapExceeded(f"{3**n} first-stage patterns exceed the cap of {cap}")
    shape = (len(config.ess_buildings), config.T)
    for modes in itertools.product((0, 1, 2), repeat=n):
        m = np.array(modes).reshape(shape)
        yield FirstStageDecision((m == 1).astype(float), (m == 2).astype(float))


@dataclass
class ExhaustiveResult:
    decision: FirstStageDecision
    value: float
    worst: UncertaintyRealization
    values: list[float]         # worst-case value of every pattern, in enumeration order
    patterns: int


def robust_solve_exhaustive(config: SystemConfig, vertex_cap: int = VERTEX_CAP,
                            pattern_cap: int = PATTERN_CAP) -> ExhaustiveResult:
    """Max over first-stage patterns of the min over vertices of the recourse value."""
    config.check()
    verts = enumerate_vertices(_sets(config), config.grid, vertex_cap)
    patterns = list(first_stage_patterns(config, pattern_cap))
    fam = _RhsFamily(config)
    vecs = verts.vectors()
    tab = None
    best = None
    per = []
    for x in patterns:
        R = fam.rhs(x, vecs)
        if tab is None or tab.status != OPTIMAL:
            start = _start(fam.lp, R[:, 0])
        else:
            start = tab.copy()
            start.set_rhs(R[:, 0])
            start.reoptimize()
        if start.status != OPTIMAL:
            per.append(-np.inf)
            continue
        values, tab = _evaluate_family(start, fam.lp, R)
        if not np.all(np.isfinite(values)):
            per.append(-np.inf)
            continue
        k = _argmin_lex(values, vecs)
        v = float(values[k])
        per.append(v)
        if best is None or v > best[1] + TIE * max(1.0, abs(v)):
            best = (x, v, verts.realization(k))
    if best is None:
        raise RobustInfeasible(verts.realization(0), patterns[0])
    return ExhaustiveResult(best[0], best[1], best[2], per, len(patterns))
