import numpy as np
import pytest
from conftest import EQ, GE, LE, enumerate_binary_milp, make_model, random_lp

from campus_ems.linprog import (INFEASIBLE, OPTIMAL, UNBOUNDED, dualize, kernel, pick_backend,
                                solve_lp, solve_milp, write_mps)
from campus_ems.linprog.milp import solve_milp_native


def test_two_box_rows():
    m = make_model([1, 1], [[1, 0], [0, 1]], [LE, LE], [1, 1])
    sol = solve_lp(m, backend="native")
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(sol.x, [1, 1])


def test_infeasible_and_unbounded():
    assert solve_lp(make_model([1], [[1]], [LE], [-1]), backend="native").status == INFEASIBLE
    assert solve_lp(make_model([1], [[-1]], [LE], [0]), backend="native").status == UNBOUNDED


def test_duals_are_objective_sensitivities():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(30):
        m = random_lp(rng)
        sol = solve_lp(m, backend="native")
        assert sol.optimal
        for i in range(m.n_rows):
            h = 1e-6
            bumped = solve_lp(m.replace(rhs=m.rhs + h * np.eye(m.n_rows)[i]), backend="native")
            if not bumped.optimal:
                continue
            fd = (bumped.objective - sol.objective) / h
            # finite differences are only exact away from degenerate breakpoints
            if abs(fd - sol.duals[i]) < 1e-4:
                checked += 1
    assert checked > 100


def test_primal_feasibility_and_complementary_slackness():
    rng = np.random.default_rng(11)
    for _ in range(40):
        m = random_lp(rng)
        sol = solve_lp(m, backend="native")
        assert m.row_violation(sol.x).max(initial=0) <= 1e-7
        slack = m.rhs - m.row_activity(sol.x)
        assert np.abs(sol.duals * slack).max(initial=0) <= 1e-6


@pytest.mark.parametrize("maximize", [True, False])
def test_strong_duality_and_involution(maximize):
    rng = np.random.default_rng(5 if maximize else 6)
    for _ in range(40):
        m = random_lp(rng, maximize=maximize)
        p = solve_lp(m, backend="native")
        dm = dualize(m)
        d = solve_lp(dm.model, backend="native")
        dd = solve_lp(dualize(dm.model).model, backend="native")
        assert p.optimal and d.optimal and dd.optimal
        assert d.objective == pytest.approx(p.objective, abs=1e-6)
        assert dd.objective == pytest.approx(p.objective, abs=1e-6)


def test_dual_variables_match_row_duals():
    rng = np.random.default_rng(8)
    for _ in range(20):
        m = random_lp(rng)
        p = solve_lp(m, backend="native")
        dm = dualize(m)
        y = np.zeros(dm.model.n_vars)
        y[dm.row_var] = p.duals
        # the remaining bound multipliers are determined by the reduced costs
        for j in range(m.n_vars):
            rc = p.reduced_costs[j]
            if dm.ub_var[j] >= 0 and rc > 0:
                y[dm.ub_var[j]] = rc
            if dm.lb_var[j] >= 0 and rc < 0:
                y[dm.lb_var[j]] = -rc
            if dm.fixed_var[j] >= 0:
                y[dm.fixed_var[j]] = rc
        assert dm.model.row_violation(y).max(initial=0) <= 1e-6
        assert dm.model.objective_value(y) == pytest.approx(p.objective, abs=1e-6)


def test_one_row_dual():
    m = make_model([1], [[1]], [LE], [1])
    dm = dualize(m)
    assert not dm.model.maximize
    assert solve_lp(dm.model, backend="native").objective == pytest.approx(1.0)


def test_dualize_rejects_integers():
    m = make_model([1], [[1]], [LE], [1.5], integer=[True])
    with pytest.raises(ValueError):
        dualize(m)


def test_weak_duality_on_sampled_points():
    rng = np.random.default_rng(21)
    for _ in range(15):
        m = random_lp(rng)
        D = dualize(m).model
        primal_vals, dual_vals = [], []
        for _ in range(6):
            p = solve_lp(m.replace(c=rng.normal(size=m.n_vars)), backend="native")
            if p.optimal:
                primal_vals.append(m.objective_value(p.x))
            q = solve_lp(D.replace(c=D.c + rng.uniform(0, 1, D.n_vars)), backend="native")
            if q.optimal:
                assert D.row_violation(q.x).max(initial=0) <= 1e-7
                dual_vals.append(D.objective_value(q.x))
        for pv in primal_vals:
            for dv in dual_vals:
                assert pv <= dv + 1e-7


def klee_minty(n):
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(i):
            A[i, j] = 2.0 ** (i - j + 1)
        A[i, i] = 1.0
    c = np.array([2.0 ** (n - 1 - j) for j in range(n)])
    return make_model(c, A, [LE] * n, [5.0 ** (i + 1) for i in range(n)])


@pytest.mark.parametrize("n", range(2, 9))
@pytest.mark.parametrize("rule", ["bland", "dantzig"])
def test_klee_minty(n, rule):
    sol = solve_lp(klee_minty(n), backend="native", rule=rule)
    assert sol.optimal
    assert sol.objective == pytest.approx(5.0 ** n, rel=1e-12)


def test_milp_floor_of_relaxation():
    m = make_model([1], [[1]], [LE], [1.5], integer=[True])
    assert solve_milp(m, backend="native").objective == pytest.approx(1.0)


def test_knapsack_enumeration():
    m = make_model([3, 2], [[2, 1]], [LE], [2], ub=[1, 1], integer=[True, True])
    sol = solve_milp(m, backend="native")
    assert sol.objective == pytest.approx(3.0)
    assert np.allclose(sol.x, [1, 0])
    assert enumerate_binary_milp(m) == pytest.approx(3.0)


def test_continuous_milp_is_lp():
    rng = np.random.default_rng(2)
    m = random_lp(rng)
    assert solve_milp(m, backend="native").objective == pytest.approx(
        solve_lp(m, backend="native").objective, abs=1e-12)


def random_milp(rng, nb):
    n_cont = int(rng.integers(0, 4))
    n = nb + n_cont
    m = int(rng.integers(2, 6))
    A = rng.uniform(0, 5, (m, n))
    rhs = A.sum(axis=1) * rng.uniform(0.3, 0.7, m)
    ub = np.concatenate([np.ones(nb), rng.uniform(1, 3, n_cont)])
    c = rng.normal(size=n) + 0.5
    integer = np.arange(n) < nb
    return make_model(c, A, [LE] * m, rhs, ub=ub, integer=integer)


@pytest.mark.parametrize("seed", range(15))
def test_milp_matches_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    m = random_milp(rng, int(rng.integers(3, 11)))
    sol = solve_milp(m, backend="native", gap=1e-9)
    assert sol.optimal
    assert sol.objective == pytest.approx(enumerate_binary_milp(m), abs=1e-7)
    xi = sol.x[m.integer]
    assert np.abs(xi - np.round(xi)).max() <= 1e-6


def test_bnb_children_never_beat_parents():
    rng = np.random.default_rng(9)
    for _ in range(10):
        m = random_milp(rng, 10)
        trace = []
        solve_milp_native(m, gap=1e-9, trace=trace)
        for node, value in trace[1:]:
            assert value <= node.parent_bound + 1e-9


def test_highs_agrees_with_native():
    rng = np.random.default_rng(4)
    for _ in range(10):
        m = random_lp(rng)
        assert solve_lp(m, backend="highs").objective == pytest.approx(
            solve_lp(m, backend="native").objective, abs=1e-6)
        q = random_milp(rng, 8)
        assert solve_milp(q, backend="highs").objective == pytest.approx(
            solve_milp(q, backend="native").objective, abs=1e-6)


def test_kernel_implementations_agree():
    names = [n for n, _ in kernel.implementations()]
    rng = np.random.default_rng(12)
    models = [random_lp(rng) for _ in range(15)]
    results = {}
    for name in names:
        with kernel.use(name):
            results[name] = [solve_lp(m, backend="native").objective for m in models]
    for name in names:
        assert np.allclose(results[name], results[names[0]], atol=1e-9)


def test_pick_backend():
    small = make_model([1], [[1]], [LE], [1])
    assert pick_backend(small) == "native"
    assert pick_backend(small, "highs") == "highs"
    with pytest.raises(ValueError):
        pick_backend(small, "cplex")
    many = make_model(np.ones(30), np.ones((1, 30)), [LE], [3], ub=np.ones(30),
                      integer=np.ones(30, bool))
    assert pick_backend(many) == "highs"


def test_mps_text():
    m = make_model([3, 2], [[2, 1], [1, 0]], [LE, GE], [2, 0], ub=[1, 1],
                   integer=[True, False])
    text = write_mps(m)
    for section in ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert section in text
    assert "MAX" in text
    assert "'INTORG'" in text and "'INTEND'" in text
    assert " L  R0000000" in text and " G  R0000001" in text


def test_equality_rows():
    m = make_model([1, 1], [[1, 1], [1, -1]], [EQ, EQ], [4, 2])
    sol = solve_lp(m, backend="native")
    assert np.allclose(sol.x, [3, 1])
