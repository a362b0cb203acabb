import itertools
import math

import numpy as np
import pytest

from campus_ems.linprog import solve_lp
from campus_ems.model.assemble import recourse_lp
from campus_ems.model.defaults import tiny_config
from campus_ems.model.types import FirstStageDecision, UncertaintyRealization
from campus_ems.oracle import (EnumerationCapExceeded, RobustInfeasible, enumerate_vertices,
                               first_stage_patterns, robust_solve_exhaustive, vertex_count,
                               worst_case_by_enumeration)
from campus_ems.robust import UncertaintySets

# frozen from the independent per-vertex LP loop below
TINY_ROBUST = 2.9687495813446
IDLE_WORST = 1.2227495813446


def sets_for(budgets, slots=3, **kw):
    c = tiny_config(slots=slots, budgets=budgets, **kw)
    return c, UncertaintySets.from_config(c)


def test_single_budget_counts():
    c, s = sets_for((1, 0, 0, 0))
    assert vertex_count(s, c.grid) == 1 + 3 * 2 == 7
    assert len(enumerate_vertices(s, c.grid)) == 7
    c, s = sets_for((0, 1, 0, 0))
    assert len(enumerate_vertices(s, c.grid)) == 7
    c, s = sets_for((0, 0, 0, 2))
    assert len(enumerate_vertices(s, c.grid)) == 1 + 3 + 3


def test_zero_budgets_give_only_nominal():
    c, s = sets_for((0, 0, 0, 0))
    v = enumerate_vertices(s, c.grid)
    assert len(v) == 1
    assert v.realization(0).same_as(UncertaintyRealization.nominal(c))


@pytest.mark.parametrize("budgets", list(itertools.product((0, 1, 2), repeat=4))[::7])
def test_counts_match_binomials(budgets):
    c, s = sets_for(budgets, n_pev=2)
    T, nv = c.T, 2

    def signed(n, g):
        return sum(math.comb(n, k) * 2**k for k in range(min(g, n) + 1))

    want = (signed(T, budgets[0]) * signed(T, budgets[1]) * signed(nv, budgets[2])
            * sum(math.comb(T, k) for k in range(budgets[3] + 1)))
    verts = enumerate_vertices(s, c.grid)
    assert len(verts) == want
    vecs = verts.vectors()
    assert len(np.unique(vecs, axis=0)) == want
    for r in verts.realizations[:50]:
        assert r.issues(c) == []


def test_cap_is_enforced():
    c, s = sets_for((2, 2, 1, 2))
    with pytest.raises(EnumerationCapExceeded):
        enumerate_vertices(s, c.grid, cap=10)
    with pytest.raises(EnumerationCapExceeded):
        list(first_stage_patterns(tiny_config(), cap=10))


def test_first_stage_patterns():
    assert len(list(first_stage_patterns(tiny_config()))) == 3**4
    assert len(list(first_stage_patterns(tiny_config(ess=(False,))))) == 1
    for x in first_stage_patterns(tiny_config(slots=2)):
        assert np.all(x.u_ch + x.u_dis <= 1)


def per_vertex_values(config, x):
    verts = enumerate_vertices(UncertaintySets.from_config(config), config.grid)
    return np.array([solve_lp(recourse_lp(config, x, r), backend="highs").objective
                     for r in verts.realizations])


def test_worst_case_is_the_minimum(tiny):
    idle = FirstStageDecision.idle(tiny)
    wc = worst_case_by_enumeration(tiny, idle)
    loop = per_vertex_values(tiny, idle)
    assert np.allclose(wc.values, loop, atol=1e-7)
    assert wc.value == pytest.approx(loop.min(), abs=1e-9)
    assert np.all(wc.value <= wc.values + 1e-12)
    assert wc.value == pytest.approx(IDLE_WORST, abs=1e-9)
    direct = solve_lp(recourse_lp(tiny, idle, wc.realization)).objective
    assert direct == pytest.approx(wc.value, abs=1e-7)


def test_ties_break_deterministically(tiny):
    idle = FirstStageDecision.idle(tiny)
    a = worst_case_by_enumeration(tiny, idle)
    b = worst_case_by_enumeration(tiny, idle)
    assert a.realization.same_as(b.realization)


def test_exhaustive_robust_optimum(tiny):
    res = robust_solve_exhaustive(tiny)
    assert res.patterns == 81
    assert res.value == pytest.approx(TINY_ROBUST, abs=1e-9)
    assert res.value == pytest.approx(max(res.values), abs=1e-12)
    wc = worst_case_by_enumeration(tiny, res.decision)
    assert wc.value == pytest.approx(res.value, abs=1e-9)
    assert per_vertex_values(tiny, res.decision).min() == pytest.approx(res.value, abs=1e-7)


def test_without_storage_the_pattern_set_is_a_singleton():
    c = tiny_config(ess=(False,))
    res = robust_solve_exhaustive(c)
    assert res.patterns == 1
    assert res.value == pytest.approx(
        worst_case_by_enumeration(c, FirstStageDecision.idle(c)).value, abs=1e-12)


def test_infeasible_vertex_is_a_witness():
    c = tiny_config(tie_line=0.01)
    with pytest.raises(RobustInfeasible) as exc:
        worst_case_by_enumeration(c, FirstStageDecision.idle(c))
    assert exc.value.realization.issues(c) == []
