"""Compiled vs pure-Python simplex kernel on the same models.

    python3 benchmarks/bench_kernel.py [--repeat 3]

Times LP solves of random dense LPs, the tiny recourse LP and a
branch-and-bound run, once per available kernel, and checks that both
kernels agree on every objective.
"""
import argparse
import time

import numpy as np
import scipy.sparse as sp

from campus_ems.linprog import kernel, solve_lp, solve_milp
from campus_ems.model.assemble import recourse_lp
from campus_ems.model.defaults import default_config, tiny_config
from campus_ems.model.linear import LE, LinearModel, RowTag, VarTag
from campus_ems.model.types import FirstStageDecision, UncertaintyRealization


def random_lp(rng, m, n, integer=False):
    A = rng.uniform(0.0, 1.0, (m, n))
    return LinearModel(tags=tuple(VarTag("x", j, "v") for j in range(n)), lb=np.zeros(n),
                       ub=np.full(n, 10.0), integer=np.full(n, integer), A=sp.csr_matrix(A),
                       sense=np.full(m, LE, dtype=np.int8), rhs=A.sum(axis=1) * 2.5,
                       c=rng.uniform(0.5, 1.5, n), row_tags=tuple(RowTag("r", i) for i in range(m)), maximize=True)


def cases():
    rng = np.random.default_rng(7)
    out = [(f"dense LP {m}x{n}", random_lp(rng, m, n), solve_lp)
           for m, n in ((20, 30), (60, 80), (120, 160))]
    c = tiny_config()
    out.append(("tiny recourse LP", recourse_lp(c, FirstStageDecision.idle(c),
                                                UncertaintyRealization.nominal(c)), solve_lp))
    d = default_config()
    one = d.with_(buildings=d.buildings[:1], pevs=d.pevs[:5])
    out.append(("1-building T=48 recourse LP", recourse_lp(
        one, FirstStageDecision.idle(one), UncertaintyRealization.nominal(one)), solve_lp))
    out.append(("B&B 12 binaries", random_lp(rng, 8, 12, integer=True), solve_milp))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = [n for n, _ in kernel.implementations()]
    print(f"{'case':28s}" + "".join(f"{n:>14s}" for n in names) + "   speedup")
    for label, model, solve in cases():
        times, objs = [], []
        for name in names:
            with kernel.use(name):
                best = np.inf
                for _ in range(args.repeat):
                    t = time.perf_counter()
                    sol = solve(model, backend="native")
                    best = min(best, time.perf_counter() - t)
            times.append(best)
            objs.append(sol.objective)
        assert np.allclose(objs, objs[0], rtol=1e-9, atol=1e-9), (label, objs)
        speed = f"{times[-1] / times[0]:8.1f}x" if len(times) > 1 else ""
        print(f"{label:28s}" + "".join(f"{t * 1e3:12.2f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
