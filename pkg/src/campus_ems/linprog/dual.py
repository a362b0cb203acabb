"""Symbolic LP dualisation with provenance maps.

For a maximisation primal ``max c'x  s.t.  A x (<=,=,>=) b,  l <= x <= u``
the dual is ``min b'y + u'r - l'q  s.t.  A'y + r - q = c`` with ``y >= 0``
on ``<=`` rows, ``y <= 0`` on ``>=`` rows and ``y`` free on equalities.
A minimisation primal gets the mirrored ``max`` dual. In both cases ``y_i``
has the same meaning as ``LpSolution.duals[i]``: the derivative of the
primal optimum with respect to ``b_i``.

Bound multipliers for zero bounds carry no objective weight and are folded
into the row sense instead of becoming columns; a fixed column gets a
single free multiplier.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..model.linear import EQ, GE, LE, LinearModel, RowTag, VarTag


@dataclass(frozen=True)
class DualModel:
    model: LinearModel
    row_var: np.ndarray    # primal row -> dual column
    col_row: np.ndarray    # primal column -> dual row (-1 when no constraint remains)
    ub_var: np.ndarray     # primal column -> multiplier of its upper bound (-1 if none)
    lb_var: np.ndarray     # primal column -> multiplier of its lower bound (-1 if none)
    fixed_var: np.ndarray  # primal column -> free multiplier of a fixed column (-1 if none)


def dualize(model: LinearModel) -> DualModel:
    if model.is_mip:
        raise ValueError("cannot dualize a model with integrality restrictions")
    m, n = model.n_rows, model.n_vars
    maximize = model.maximize

    tags: list[VarTag] = []
    lo: list[float] = []
    hi: list[float] = []
    obj: list[float] = []

    # y: one per primal row
    row_var = np.arange(m)
    for i, (s, rt) in enumerate(zip(model.sense, model.row_tags)):
        nonneg = (s == LE) if maximize else (s == GE)
        if s == EQ:
            lo.append(-np.inf)
            hi.append(np.inf)
        elif nonneg:
            lo.append(0.0)
            hi.append(np.inf)
        else:
            lo.append(-np.inf)
            hi.append(0.0)
        obj.append(model.rhs[i])
        tags.append(VarTag("dual", i, rt.group, rt.slot, rt.scenario))

    ub_var = np.full(n, -1)
    lb_var = np.full(n, -1)
    fixed_var = np.full(n, -1)
    extra_rows, extra_cols, extra_vals = [], [], []
    col_sense = np.full(n, EQ, dtype=np.int8)
    keep_row = np.ones(n, dtype=bool)
    # sign of the upper-bound multiplier in the dual row and objective
    ub_sign = 1.0 if maximize else -1.0

    for j in range(n):
        l, u = model.lb[j], model.ub[j]
        label = model.tags[j]
        if np.isfinite(l) and np.isfinite(u) and l == u:
            if l == 0.0:
                keep_row[j] = False
                continue
            k = len(tags)
            tags.append(VarTag("dual_fixed", j, label.quantity, label.slot, label.scenario))
            lo.append(-np.inf)
            hi.append(np.inf)
            obj.append(l)
            extra_rows.append(j)
            extra_cols.append(k)
            extra_vals.append(1.0)
            fixed_var[j] = k
            continue
        has_u, has_l = np.isfinite(u), np.isfinite(l)
        drop_u = has_u and u == 0.0
        drop_l = has_l and l == 0.0
        if has_u and not drop_u:
            k = len(tags)
            tags.append(VarTag("dual_ub", j, label.quantity, label.slot, label.scenario))
            lo.append(0.0)
            hi.append(np.inf)
            obj.append(ub_sign * u)
            extra_rows.append(j)
            extra_cols.append(k)
            extra_vals.append(ub_sign)
            ub_var[j] = k
        if has_l and not drop_l:
            k = len(tags)
            tags.append(VarTag("dual_lb", j, label.quantity, label.slot, label.scenario))
            lo.append(0.0)
            hi.append(np.inf)
            obj.append(-ub_sign * l)
            extra_rows.append(j)
            extra_cols.append(k)
            extra_vals.append(-ub_sign)
            lb_var[j] = k
        # a dropped multiplier with zero bound turns the equality into an inequality
        if drop_u and drop_l:
            keep_row[j] = False
        elif drop_u:
            col_sense[j] = LE if maximize else GE
        elif drop_l:
            col_sense[j] = GE if maximize else LE

    n_dual = len(tags)
    At = model.A.T.tocsr()
    B = sp.csr_matrix((extra_vals, (extra_rows, extra_cols)), shape=(n, n_dual))
    full = sp.hstack([At, sp.csr_matrix((n, n_dual - m))], format="csr") + B
    kept = np.flatnonzero(keep_row)
    col_row = np.full(n, -1)
    col_row[kept] = np.arange(kept.size)
    dual = LinearModel(
        tags=tuple(tags), lb=np.array(lo), ub=np.array(hi), integer=np.zeros(n_dual, dtype=bool),
        A=full[kept], sense=col_sense[kept], rhs=model.c[kept],
        c=np.array(obj), row_tags=tuple(RowTag("dual_of", int(j)) for j in kept),
        maximize=not maximize, offset=model.offset)
    return DualModel(dual, row_var, col_row, ub_var, lb_var, fixed_var)
