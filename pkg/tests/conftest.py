import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from campus_ems.model.defaults import tiny_config
from campus_ems.model.linear import EQ, GE, LE, LinearModel, RowTag, VarTag


def make_model(c, A, sense, rhs, lb=None, ub=None, integer=None, maximize=True):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    return LinearModel(
        tags=tuple(VarTag("x", j, "v") for j in range(n)),
        lb=np.zeros(n) if lb is None else np.asarray(lb, dtype=float),
        ub=np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float),
        integer=np.zeros(n, bool) if integer is None else np.asarray(integer, bool),
        A=sp.csr_matrix(A), sense=np.asarray(sense, dtype=np.int8),
        rhs=np.asarray(rhs, dtype=float), c=np.asarray(c, dtype=float),
        row_tags=tuple(RowTag("r", i) for i in range(m)), maximize=maximize)


def random_lp(rng, m=None, n=None, maximize=True):
    """Feasible and bounded by construction: a known interior point and finite boxes."""
    m = m or int(rng.integers(2, 15))
    n = n or int(rng.integers(2, 30))
    A = rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.6)
    x0 = rng.uniform(-2, 2, n)
    lb = np.where(rng.random(n) < 0.3, -np.inf, x0 - rng.uniform(0.5, 3, n))
    ub = np.where(rng.random(n) < 0.3, np.inf, x0 + rng.uniform(0.5, 3, n))
    # keep every column bounded on at least one side and the LP bounded overall
    both = ~np.isfinite(lb) & ~np.isfinite(ub)
    lb[both] = x0[both] - 5
    act = A @ x0
    sense = rng.choice([LE, GE, EQ], size=m, p=[0.45, 0.35, 0.2])
    rhs = np.where(sense == LE, act + rng.uniform(0, 2, m),
                   np.where(sense == GE, act - rng.uniform(0, 2, m), act))
    # box the unbounded directions with a cap row so the optimum is finite
    A = np.vstack([A, np.ones(n), -np.ones(n)])
    sense = np.concatenate([sense, [LE, LE]])
    rhs = np.concatenate([rhs, [x0.sum() + 20, -x0.sum() + 20]])
    for j in np.flatnonzero(~np.isfinite(ub)):
        row = np.zeros(n)
        row[j] = 1.0
        A = np.vstack([A, row])
        sense = np.append(sense, LE)
        rhs = np.append(rhs, x0[j] + 10)
    for j in np.flatnonzero(~np.isfinite(lb)):
        row = np.zeros(n)
        row[j] = -1.0
        A = np.vstack([A, row])
        sense = np.append(sense, LE)
        rhs = np.append(rhs, -x0[j] + 10)
    return make_model(rng.normal(size=n), A, sense, rhs, lb, ub, maximize=maximize)


def enumerate_binary_milp(model):
    """Best objective over all binary assignments (continuous part by LP)."""
    from campus_ems.linprog import solve_lp

    idx = np.flatnonzero(model.integer)
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=idx.size):
        lb, ub = model.lb.copy(), model.ub.copy()
        lb[idx] = bits
        ub[idx] = bits
        sol = solve_lp(model.relaxed().with_bounds(lb, ub), backend="native")
        if sol.optimal:
            v = sol.objective
            if best is None or (v > best if model.maximize else v < best):
                best = v
    return best


@pytest.fixture(scope="session")
def tiny():
    return tiny_config()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


__all__ = ["EQ", "GE", "LE", "make_model", "random_lp", "enumerate_binary_milp"]
