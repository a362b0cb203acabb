"""Fixed-form MPS export for cross-checking a model in an external solver.

Names are replaced by 8-character indices (``R0000012``, ``C0000034``);
numbers are written in 12-character fields, so values are rounded.
"""
from __future__ import annotations

import io

import numpy as np

from ..model.linear import EQ, GE, LE, LinearModel

_SENSE = {LE: "L", EQ: "E", GE: "G"}


def _num(v: float) -> str:
    s = f"{v:.12g}"
    if len(s) > 12:
        s = f"{v:.5e}"
    return s


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    out = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        out += f"   {f5:<8}  {f6:>12}"
    return out.rstrip() + "\n"


def write_mps(model: LinearModel, target=None, name: str = "CAMPUS") -> str:
    buf = io.StringIO()
    buf.write(f"NAME          {name[:8]}\n")
    if model.maximize:
        buf.write("OBJSENSE\n    MAX\n")
    buf.write("ROWS\n")
    buf.write(_line("N", "OBJ").rstrip() + "\n")
    for i, s in enumerate(model.sense):
        buf.write(f" {_SENSE[int(s)]}  R{i:07d}\n")
    buf.write("COLUMNS\n")
    A = model.A.tocsc()
    in_int = False
    for j in range(model.n_vars):
        if model.integer[j] and not in_int:
            buf.write("    MARKER                 'MARKER'                 'INTORG'\n")
            in_int = True
        elif not model.integer[j] and in_int:
            buf.write("    MARKER                 'MARKER'                 'INTEND'\n")
            in_int = False
        col = f"C{j:07d}"
        if model.c[j] != 0.0:
            buf.write(_line("", col, "OBJ", _num(model.c[j])))
        start, end = A.indptr[j], A.indptr[j + 1]
        for i, v in zip(A.indices[start:end], A.data[start:end]):
            buf.write(_line("", col, f"R{i:07d}", _num(v)))
        if model.c[j] == 0.0 and start == end:
            buf.write(_line("", col, "OBJ", "0"))
    if in_int:
        buf.write("    MARKER                 'MARKER'                 'INTEND'\n")
    buf.write("RHS\n")
    if model.offset:
        buf.write(_line("", "RHS", "OBJ", _num(-model.offset)))
    for i, b in enumerate(model.rhs):
        if b != 0.0:
            buf.write(_line("", "RHS", f"R{i:07d}", _num(b)))
    buf.write("BOUNDS\n")
    for j in range(model.n_vars):
        col = f"C{j:07d}"
        lo, hi = model.lb[j], model.ub[j]
        if lo == hi:
            buf.write(_line("FX", "BND", col, _num(lo)))
            continue
        if not np.isfinite(lo) and not np.isfinite(hi):
            buf.write(_line("FR", "BND", col))
            continue
        if not np.isfinite(lo):
            buf.write(_line("MI", "BND", col))
        elif lo != 0.0:
            buf.write(_line("LO", "BND", col, _num(lo)))
        if np.isfinite(hi):
            buf.write(_line("UP", "BND", col, _num(hi)))
    buf.write("ENDATA\n")
    text = buf.getvalue()
    if target is not None:
        with open(target, "w") as fh:
            fh.write(text)
    return text
