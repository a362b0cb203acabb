"""Worst-case realisation for a fixed first stage, as one MILP.

The recourse LP (first stage fixed, uncertain data at nominal) is
dualised. A realisation moves only right-hand sides: placeholder ``j``
enters a single row ``r`` with coefficient ``a``, so selecting deviation
``k`` of size ``delta_k`` shifts ``b_r`` by ``-a * delta_k``. The dual
objective then gains ``-a * delta_k * y_r * sel_k``; each product is
replaced by a column ``q_k`` with the usual envelope rows for
``y_r in [L_r, U_r]`` and binary ``sel_k``. Budget rows and one-sign rows
restrict the selectors to the vertices of the uncertainty sets.

``L_r, U_r`` come from the natural sign of ``y_r`` intersected with
``+/- M_r``, where ``M_r`` is derived from duals sampled at a few
realisations. After solving, the primal recourse LP is re-solved at the
extracted realisation; disagreement means some ``M_r`` cut off the true
dual optimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..linprog import SolverError, dualize, solve_lp, solve_milp
from ..model.assemble import assemble_constraints, placeholder_rows, placeholder_values
from ..model.linear import GE, LE, LinearModel, RowTag, VarTag
from ..model.types import FirstStageDecision, SystemConfig, UncertaintyRealization
from .sets import DeviationPattern, UncertaintySets

VERIFY_TOL = 1e-4
SAFETY = 2.0
SAMPLES = 6


class BigMError(SolverError):
    pass


class RecourseInfeasible(SolverError):
    """The first stage has no feasible recourse at ``realization``."""

    def __init__(self, realization: UncertaintyRealization):
        self.realization = realization
        super().__init__("recourse infeasible at the extracted realisation",
                         {"status": "infeasible"})


@dataclass
class Selector:
    group: str       # "u+", "u-", "v+", "v-", "z+", "z-", "s"
    index: tuple     # (building, slot) / (vehicle,) / (slot,)
    row: int         # primal row whose right-hand side moves
    shift: float     # change of b_row when selected


@dataclass
class SubproblemResult:
    value: float                 # MILP objective: worst-case recourse value
    bound: float                 # MILP dual bound (<= value)
    realization: UncertaintyRealization
    pattern: DeviationPattern
    verified_value: float        # primal recourse value at the realisation
    big_m: np.ndarray            # per primal row, 0 where no product is formed
    model: LinearModel = field(repr=False)
    nodes: int = 0
    attempts: int = 1


def _selectors(config: SystemConfig, sets: UncertaintySets, sym: LinearModel) -> list[Selector]:
    rows = placeholder_rows(sym)
    out = []
    shrink = 1.0 - sets.dr_floor
    for tag, (r, a) in rows.items():
        if tag.device == "res":
            i, t = tag.index, tag.slot
            out += [Selector("u+", (i, t), r, -a * sets.res_plus[i, t]),
                    Selector("u-", (i, t), r, a * sets.res_minus[i, t])]
        elif tag.device == "load":
            i, t = tag.index, tag.slot
            out += [Selector("v+", (i, t), r, -a * sets.load_plus[i, t]),
                    Selector("v-", (i, t), r, a * sets.load_minus[i, t])]
        elif tag.device == "pev_init":
            v = tag.index
            out += [Selector("z+", (v,), r, -a * sets.soc0_plus[v]),
                    Selector("z-", (v,), r, a * sets.soc0_minus[v])]
        elif tag.device == "dr":
            out.append(Selector("s", (tag.slot,), r, a * shrink))
    return [s for s in out if s.shift != 0.0]


def _budget_rows(sets: UncertaintySets, sels: list[Selector]):
    """(selector indices, rhs, tag) for every budget and one-sign row."""
    groups: dict[tuple, list[int]] = {}
    for k, s in enumerate(sels):
        g = s.group[0]
        if g in "uv":
            groups.setdefault((g, "budget", s.index[0]), []).append(k)
            groups.setdefault((g, "sign") + s.index, []).append(k)
        elif g == "z":
            groups.setdefault(("z", "budget"), []).append(k)
            groups.setdefault(("z", "sign") + s.index, []).append(k)
        else:
            groups.setdefault(("s", "budget"), []).append(k)
    caps = {"u": sets.gamma_w, "v": sets.gamma_d, "z": sets.gamma_z, "s": sets.gamma_i}
    out = []
    for key, ks in groups.items():
        g, kind = key[0], key[1]
        if kind == "budget":
            if len(ks) > caps[g]:
                out.append((ks, float(caps[g]), RowTag(f"budget_{g}", key[2] if len(key) > 2 else 0)))
        elif len(ks) > 1:
            out.append((ks, 1.0, RowTag(f"one_sign_{g}", key[2], key[3] if len(key) > 3 else None)))
    return out


def _pattern(sets: UncertaintySets, sels: list[Selector], chosen: np.ndarray) -> DeviationPattern:
    nb, T, nv = sets.shape
    arr = {"u+": np.zeros((nb, T)), "u-": np.zeros((nb, T)), "v+": np.zeros((nb, T)),
           "v-": np.zeros((nb, T)), "z+": np.zeros(nv), "z-": np.zeros(nv), "s": np.zeros(T)}
    for s, c in zip(sels, chosen):
        if c:
            arr[s.group][s.index] = 1.0
    return DeviationPattern(arr["u+"], arr["u-"], arr["v+"], arr["v-"], arr["z+"], arr["z-"],
                            arr["s"])


def _sample_patterns(sets: UncertaintySets, rng: np.random.Generator, n: int):
    """Nominal, the all-adverse and all-favourable corners, and random admissible vertices."""
    nb, T, nv = sets.shape
    one2, one1, zero2, zero1 = np.ones((nb, T)), np.ones(nv), np.zeros((nb, T)), np.zeros(nv)
    yield sets.nominal_pattern()
    yield DeviationPattern(zero2, one2, one2, zero2, zero1, one1, np.ones(T))
    yield DeviationPattern(one2, zero2, zero2, one2, one1, zero1, np.zeros(T))
    for _ in range(n):
        def pick(shape, budget):
            up, dn = np.zeros(shape), np.zeros(shape)
            flat = int(np.prod(shape))
            k = min(budget, flat)
            if k:
                idx = rng.choice(flat, size=k, replace=False)
                sign = rng.random(k) < 0.5
                up.reshape(-1)[idx[sign]] = 1.0
                dn.reshape(-1)[idx[~sign]] = 1.0
            return up, dn
        u = [pick((T,), sets.gamma_w) for _ in range(nb)]
        v = [pick((T,), sets.gamma_d) for _ in range(nb)]
        zp, zm = pick((nv,), sets.gamma_z)
        s = np.zeros(T)
        if sets.gamma_i:
            s[rng.choice(T, size=min(sets.gamma_i, T), replace=False)] = 1.0
        yield DeviationPattern(np.array([a for a, _ in u]).reshape(nb, T),
                               np.array([b for _, b in u]).reshape(nb, T),
                               np.array([a for a, _ in v]).reshape(nb, T),
                               np.array([b for _, b in v]).reshape(nb, T), zp, zm, s)


def dual_bounds(config: SystemConfig, sym: LinearModel, sets: UncertaintySets, rows: np.ndarray,
                backend: str = "auto", samples: int = SAMPLES, safety: float = SAFETY,
                seed: int = 0) -> np.ndarray:
    """Per-row magnitude bound ``M_r`` for the duals of ``rows``.

    ``safety`` times the largest dual seen at the sample realisations,
    plus a floor of ``max|c| * (slots + 1)``.
    """
    rng = np.random.default_rng(seed)
    seen = np.zeros(rows.size)
    for pat in _sample_patterns(sets, rng, samples):
        real = sets.realize(pat)
        lp = sym.fix(placeholder_values(config, real, sym))
        sol = solve_lp(lp, backend=backend)
        if sol.optimal:
            seen = np.maximum(seen, np.abs(sol.duals[rows]))
    floor = float(np.abs(sym.c).max(initial=0.0)) * (config.T + 1)
    return safety * seen + max(floor, 1.0)


def build_subproblem(config: SystemConfig, x: FirstStageDecision, big_m=None,
                     backend: str = "auto") -> tuple[LinearModel, dict]:
    """The worst-case MILP (minimisation) and the bookkeeping to read it back.

    ``big_m`` may be a scalar applied to every product row, an array of
    per-row bounds indexed by primal row, or ``None`` for sampled bounds.
    """
    sets = UncertaintySets.from_config(config)
    sym = assemble_constraints(config, None, x)
    sels = _selectors(config, sets, sym)
    nominal = UncertaintyRealization.nominal(config)
    p0 = sym.fix(placeholder_values(config, nominal, sym))
    dm = dualize(p0)
    D = dm.model
    prod_rows = np.array(sorted({s.row for s in sels}), dtype=int)
    M = np.zeros(p0.n_rows)
    if big_m is None:
        if prod_rows.size:
            M[prod_rows] = dual_bounds(config, sym, sets, prod_rows, backend=backend,
                                       seed=config.seed)
    elif np.ndim(big_m) == 0:
        M[prod_rows] = float(big_m)
    else:
        M[prod_rows] = np.asarray(big_m, dtype=float)[prod_rows]

    n0, m0 = D.n_vars, D.n_rows
    nsel = len(sels)
    tags = list(D.tags)
    lb, ub = list(D.lb), list(D.ub)
    c = list(D.c)
    integer = [False] * n0
    for k, s in enumerate(sels):
        tags.append(VarTag("sel", k, s.group, s.index[-1] if s.group[0] != "z" else None))
        lb.append(0.0)
        ub.append(1.0)
        c.append(0.0)
        integer.append(True)
    for k, s in enumerate(sels):
        tags.append(VarTag("prod", k, s.group, s.index[-1] if s.group[0] != "z" else None))
        lb.append(-np.inf)
        ub.append(np.inf)
        c.append(s.shift)
        integer.append(False)
    L = np.maximum(D.lb[dm.row_var], -M)
    U = np.minimum(D.ub[dm.row_var], M)

    r_idx, c_idx, vals, sense, rhs, rtags = [], [], [], [], [], []

    def row(terms, sn, b, tag):
        i = len(rhs)
        for j, v in terms:
            if v != 0.0:
                r_idx.append(i)
                c_idx.append(j)
                vals.append(v)
        sense.append(sn)
        rhs.append(b)
        rtags.append(tag)

    for k, s in enumerate(sels):
        y = int(dm.row_var[s.row])
        sk, qk = n0 + k, n0 + nsel + k
        lo, hi = L[s.row], U[s.row]
        tag = lambda kind: RowTag(f"envelope_{kind}", k)  # noqa: E731
        row([(qk, 1.0), (sk, -lo)], GE, 0.0, tag("lo"))
        row([(qk, 1.0), (sk, -hi)], LE, 0.0, tag("hi"))
        row([(qk, 1.0), (y, -1.0), (sk, -hi)], GE, -hi, tag("ylo"))
        row([(qk, 1.0), (y, -1.0), (sk, -lo)], LE, -lo, tag("yhi"))
    for ks, cap, tag in _budget_rows(sets, sels):
        row([(n0 + k, 1.0) for k in ks], LE, cap, tag)

    n = len(tags)
    extra = sp.csr_matrix((vals, (r_idx, c_idx)), shape=(len(rhs), n))
    A = sp.vstack([sp.hstack([D.A, sp.csr_matrix((m0, n - n0))]), extra], format="csr")
    model = LinearModel(tags=tuple(tags), lb=np.array(lb), ub=np.array(ub),
                        integer=np.array(integer), A=A,
                        sense=np.concatenate([D.sense, np.array(sense, dtype=np.int8)]),
                        rhs=np.concatenate([D.rhs, np.array(rhs)]), c=np.array(c),
                        row_tags=D.row_tags + tuple(rtags), maximize=False, offset=D.offset)
    info = {"sets": sets, "selectors": sels, "sym": sym, "big_m": M, "n_dual": n0,
            "row_var": dm.row_var, "prod_rows": prod_rows}
    return model, info


def solve_subproblem(config: SystemConfig, x: FirstStageDecision, big_m=None,
                     backend: str = "auto", gap: float = 1e-9, abs_gap: float = 1e-9,
                     escalations: int = 3, verify_tol: float = VERIFY_TOL) -> SubproblemResult:
    """Solve the worst-case MILP, verifying it against a primal re-solve.

    When the verification fails, or a dual sits on one of its Big-M
    bounds, the bounds are multiplied by 10 and the MILP is rebuilt, at
    most ``escalations`` times. Raises :class:`BigMError` if that does not
    settle it.
    """
    issues = x.issues(config)
    if issues:
        raise ValueError("infeasible first-stage decision: " + "; ".join(issues))
    M = big_m
    for attempt in range(escalations + 1):
        model, info = build_subproblem(config, x, M, backend=backend)
        sol = solve_milp(model, gap=gap, abs_gap=abs_gap, backend=backend)
        if not sol.optimal:
            raise SolverError(f"worst-case MILP {sol.status}", {"status": sol.status})
        sels = info["selectors"]
        n0 = info["n_dual"]
        chosen = np.round(sol.x[n0:n0 + len(sels)]).astype(bool)
        pattern = _pattern(info["sets"], sels, chosen)
        real = info["sets"].realize(pattern)
        sym = info["sym"]
        check = solve_lp(sym.fix(placeholder_values(config, real, sym)), backend=backend)
        if not check.optimal:
            raise RecourseInfeasible(real)
        Mr = info["big_m"]
        rows = info["prod_rows"]
        y = sol.x[info["row_var"][rows]]
        pressed = np.abs(y) >= Mr[rows] * (1 - 1e-9) - 1e-9
        mismatch = abs(check.objective - sol.objective)
        ok = mismatch <= verify_tol * max(1.0, abs(check.objective))
        if ok and not pressed.any():
            return SubproblemResult(value=sol.objective, bound=sol.bound, realization=real,
                                    pattern=pattern, verified_value=check.objective,
                                    big_m=Mr, model=model, nodes=sol.nodes,
                                    attempts=attempt + 1)
        M = Mr * 10.0
    raise BigMError(
        "worst-case MILP disagrees with the primal re-solve "
        f"(MILP {sol.objective:.8g}, primal {check.objective:.8g}); pass a larger big_m",
        {"milp": sol.objective, "primal": check.objective})
