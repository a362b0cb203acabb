"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
happen; they are also repeated in the terminal summary.
"""
import itertools
import time

import numpy as np
import pytest
from conftest import random_lp

from campus_ems.comfort import (encode_epigraph, ewh_comfort, ewh_pieces, hvac_comfort,
                                hvac_pieces, pev_comfort, pev_pieces)
from campus_ems.evaluate import simulate
from campus_ems.linprog import dualize, solve_lp, solve_milp
from campus_ems.model.assemble import assemble_constraints
from campus_ems.model.defaults import default_config, tiny_config
from campus_ems.model.linear import LE, ModelBuilder, RowTag, VarTag
from campus_ems.model.types import UncertaintyRealization
from campus_ems.oracle import robust_solve_exhaustive, worst_case_by_enumeration
from campus_ems.robust import ccg_solve, solve_master

RESULTS: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS.append(line)
    print("\n" + line, flush=True)


# small enough for the exhaustive oracle: T = 4, budgets in {0, 1}
ORACLE_INSTANCES = [
    dict(),
    dict(seed=1, n_buildings=2, budgets=(1, 0, 1, 1), ess=(True, False)),
    dict(seed=2, n_pev=2),
    dict(n_buildings=2, n_pev=2, budgets=(0, 0, 0, 0)),
    dict(seed=3, n_buildings=2, n_pev=2, budgets=(1, 0, 1, 1), ess=(False, True)),
    dict(seed=4, budgets=(0, 1, 0, 1)),
    dict(tie_line=7.0),
]


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    worst_obj = worst_sub = 0.0
    for kw in ORACLE_INSTANCES:
        c = tiny_config(**kw)
        res = ccg_solve(c, tol=1e-6)
        exact = robust_solve_exhaustive(c)
        worst_obj = max(worst_obj, abs(res.state.value - exact.value))
        for rec in res.state.log:
            if np.isfinite(rec.sub_value):
                wc = worst_case_by_enumeration(c, rec.decision)
                worst_sub = max(worst_sub, abs(rec.sub_value - wc.value))
    elapsed = time.perf_counter() - t0
    ok = worst_obj <= 1e-5 and worst_sub <= 1e-5 and elapsed < 60
    report(1, ok, f"{len(ORACLE_INSTANCES)} instances, objective error {worst_obj:.2e}, "
                  f"subproblem error {worst_sub:.2e}, {elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def default_run():
    c = default_config()
    t0 = time.perf_counter()
    res = ccg_solve(c, tol=1e-2, max_iter=50)
    return c, res, time.perf_counter() - t0


def test_criterion_2_convergence(default_run):
    _, res, elapsed = default_run
    st = res.state
    lbs = [r.lb for r in st.log]
    ubs = [r.ub for r in st.log]
    mono = (all(b >= a for a, b in zip(lbs, lbs[1:]))
            and all(b <= a for a, b in zip(ubs, ubs[1:])))
    ok = st.converged and st.gap <= 1e-2 and st.iteration <= 50 and elapsed < 600 and mono
    report(2, ok, f"gap {st.gap:.2e} after {st.iteration} iterations, LB {st.lb:.6f}, "
                  f"UB {st.ub:.6f}, monotone bounds {mono}, {elapsed:.0f}s")
    assert ok


def reference(points):
    """Independent piecewise-linear interpolation, flat outside the end points."""
    xs, ys = zip(*points)
    return lambda x: np.interp(x, xs, ys)


def test_criterion_3_comfort_fidelity():
    c = default_config()
    h, v, e = c.buildings[0].hvac, c.pevs[0], c.buildings[0].ewh
    cases = [
        (hvac_comfort, h, [(h.t_desired - h.delta, 0.0), (h.t_desired - h.epsilon, 1.0),
                           (h.t_desired + h.epsilon, 1.0), (h.t_desired + h.delta, 0.0)]),
        (pev_comfort, v, [(v.soc_base, 0.0), (v.soc_desired, 1.0)]),
        (ewh_comfort, e, [(e.t_desired - e.delta, 0.0), (e.t_desired, 1.0)]),
    ]
    at_breaks = elsewhere = 0.0
    for f, params, pts in cases:
        brk = np.array([p[0] for p in pts])
        span = brk[-1] - brk[0]
        grid = np.linspace(brk[0] - 0.25 * span, brk[-1] + 0.25 * span, 1000 - brk.size)
        grid = np.sort(np.concatenate([grid, brk]))
        ref = reference(pts)
        got = f(grid, params)
        assert got.size == 1000
        on = np.isin(grid, brk)
        at_breaks = max(at_breaks, np.abs(got[on] - ref(grid[on])).max())
        elsewhere = max(elsewhere, np.abs(got[~on] - ref(grid[~on])).max())
    rng = np.random.default_rng(0)
    epi = 0.0
    n = 0
    for pieces, f, params, lo, hi in (
            (hvac_pieces(h), hvac_comfort, h, h.t_desired - h.delta, h.t_desired + h.delta),
            (pev_pieces(v), pev_comfort, v, v.soc_base, 1.0),
            (ewh_pieces(e), ewh_comfort, e, e.t_desired - e.delta, e.t_desired + e.delta)):
        args = rng.uniform(lo, hi, 3334)
        for chunk in np.array_split(args, 67):
            b = ModelBuilder()
            cols = []
            for k, a in enumerate(chunk):
                j = b.add_var(VarTag("arg", k, "x"), lb=a, ub=a)
                cols.append(encode_epigraph(pieces, j, b, VarTag("user", k, "J"), obj=1.0))
            sol = solve_lp(b.build(maximize=True), backend="native")
            epi = max(epi, np.abs(sol.x[cols] - f(chunk, params)).max())
            n += chunk.size
    ok = at_breaks == 0.0 and elsewhere <= 1e-12 and epi <= 1e-8 and n >= 10000
    report(3, ok, f"breakpoint error {at_breaks:.1e}, grid error {elsewhere:.1e}, "
                  f"epigraph error {epi:.1e} over {n} arguments")
    assert ok


def test_criterion_4_comfort_headline():
    rows = []
    for seed in range(10):
        pair = []
        for kappa in (0.0, 10.0):
            c = default_config(seed=seed, kappa=kappa)
            nominal = UncertaintyRealization.nominal(c)
            x = solve_master(c, [nominal], gap=1e-6)[0]
            rep = simulate(c, x, nominal)
            pair.append((rep.mean_comfort()["overall"], rep.total_cost))
        rows.append(pair)
    low = np.array([r[0][0] for r in rows])
    high = np.array([r[1][0] for r in rows])
    cost0 = np.array([r[0][1] for r in rows])
    cost1 = np.array([r[1][1] for r in rows])
    rise = 100 * (cost1 / cost0 - 1)
    ordered = bool(np.all(high > low))
    targets = bool(np.all(low < 0.6) and np.all(high > 0.9))
    ok = ordered and targets and bool(np.all(np.isfinite(rise))) and bool(np.all(rise >= 0))
    report(4, ok, f"comfort {low.mean():.3f} -> {high.mean():.3f} (min high {high.min():.3f}, "
                  f"max low {low.max():.3f}), cost +{rise.mean():.1f}% "
                  f"[{rise.min():.1f}%, {rise.max():.1f}%], ordering on 10/10 seeds: {ordered}")
    assert ok


def test_criterion_5_budget_monotonicity():
    t0 = time.perf_counter()
    values = {}
    for g in itertools.product((0, 1, 2), repeat=4):
        values[g] = ccg_solve(tiny_config(n_pev=2, budgets=g), tol=1e-7).state.value
    violations = 0
    worst = 0.0
    for g, v in values.items():
        for axis in range(4):
            if g[axis] < 2:
                h = list(g)
                h[axis] += 1
                w = values[tuple(h)]
                worst = max(worst, w - v)
                violations += w > v + 1e-6
    ok = violations == 0 and len(values) == 81
    report(5, ok, f"{len(values)} budget combinations, {violations} violations "
                  f"(largest increase {worst:.1e}), {time.perf_counter() - t0:.1f}s")
    assert ok


def binary_milp(rng, nb, n_cont):
    n = nb + n_cont
    m = int(rng.integers(2, 6))
    A = rng.uniform(0, 5, (m, n))
    rhs = A.sum(axis=1) * rng.uniform(0.3, 0.7, m)
    ub = np.concatenate([np.ones(nb), rng.uniform(1, 3, n_cont)])
    b = ModelBuilder()
    for j in range(n):
        b.add_var(VarTag("x", j, "v"), lb=0, ub=ub[j], obj=rng.normal() + 0.5,
                  integer=j < nb)
    for i in range(m):
        b.add_row([(j, A[i, j]) for j in range(n)], LE, rhs[i], RowTag("r", i))
    return b.build(maximize=True), A, rhs


def brute_force(model, A, rhs, nb):
    """All 2^nb assignments; the continuous tail is solved per assignment."""
    bits = np.array(list(itertools.product((0.0, 1.0), repeat=nb)))
    if model.n_vars == nb:
        feas = np.all(bits @ A.T <= rhs + 1e-9, axis=1)
        return float((bits[feas] @ model.c).max())
    best = -np.inf
    for x in bits:
        lb, ub = model.lb.copy(), model.ub.copy()
        lb[:nb] = ub[:nb] = x
        sol = solve_lp(model.relaxed().with_bounds(lb, ub), backend="highs")
        if sol.optimal:
            best = max(best, sol.objective)
    return best


def test_criterion_6_kernel():
    rng = np.random.default_rng(2024)
    duality = 0.0
    for _ in range(200):
        m = random_lp(rng, maximize=bool(rng.integers(2)))
        p = solve_lp(m, backend="native")
        d = solve_lp(dualize(m).model, backend="native")
        assert p.optimal and d.optimal
        duality = max(duality, abs(p.objective - d.objective))
    milp = 0.0
    for k in range(50):
        nb = int(rng.integers(4, 13)) if k < 40 else int(rng.integers(2, 6))
        n_cont = 0 if k < 40 else int(rng.integers(1, 4))
        model, A, rhs = binary_milp(rng, nb, n_cont)
        sol = solve_milp(model, backend="native", gap=1e-9)
        milp = max(milp, abs(sol.objective - brute_force(model, A, rhs, nb)))
    robust = 0.0
    for c in (tiny_config(budgets=(0, 0, 0, 0)),
              tiny_config(n_buildings=2, n_pev=2, seed=5, budgets=(0, 0, 0, 0)),
              default_config(seed=0).with_budgets(0, 0, 0, 0)):
        nominal = UncertaintyRealization.nominal(c)
        det = solve_milp(assemble_constraints(c, nominal), backend="highs", gap=1e-12,
                         abs_gap=1e-10)
        robust = max(robust, abs(ccg_solve(c, tol=1e-9).state.value - det.objective))
    ok = duality <= 1e-6 and milp <= 1e-6 and robust <= 1e-8
    report(6, ok, f"strong duality gap {duality:.1e} over 200 LPs, MILP vs enumeration "
                  f"{milp:.1e} over 50 MILPs, zero-budget robust vs deterministic {robust:.1e}")
    assert ok


def test_criterion_7_replay(default_run):
    cases = [default_run[:2]]
    for kw in ORACLE_INSTANCES[:3]:
        c = tiny_config(**kw)
        cases.append((c, ccg_solve(c, tol=1e-6)))
    worst = 0.0
    for c, res in cases:
        st = res.state
        rep = simulate(c, st.incumbent, st.worst)
        assert rep.feasible
        worst = max(worst, abs(rep.objective - st.worst_value))
    ok = worst <= 1e-4
    report(7, ok, f"replayed worst cases of {len(cases)} runs (incl. default config), "
                  f"largest deviation {worst:.1e}")
    assert ok
