"""Sparse LP/MILP container shared by the model builders and the solvers.

A :class:`LinearModel` is immutable once built. Columns carry a
:class:`VarTag` linking them back to a device, quantity and slot, and rows
carry a :class:`RowTag` naming their constraint group.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = -1, 0, 1
SENSE_SYMBOL = {LE: "<=", EQ: "=", GE: ">="}


class VarTag(NamedTuple):
    device: str
    index: int
    quantity: str
    slot: int | None = None
    scenario: int | None = None

    def label(self) -> str:
        s = f"{self.device}[{self.index}].{self.quantity}"
        if self.slot is not None:
            s += f"[{self.slot}]"
        if self.scenario is not None:
            s += f"@{self.scenario}"
        return s


class RowTag(NamedTuple):
    group: str
    index: int = 0
    slot: int | None = None
    scenario: int | None = None

    def label(self) -> str:
        s = f"{self.group}[{self.index}]"
        if self.slot is not None:
            s += f"[{self.slot}]"
        if self.scenario is not None:
            s += f"@{self.scenario}"
        return s


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearModel:
    tags: tuple[VarTag, ...]
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    c: np.ndarray
    row_tags: tuple[RowTag, ...]
    maximize: bool = True
    offset: float = 0.0
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n, m = len(self.tags), len(self.row_tags)
        A = sp.csr_matrix(self.A, dtype=float, shape=(m, n))
        A.sum_duplicates()
        A.eliminate_zeros()
        object.__setattr__(self, "A", A)
        for name, dtype in (("lb", float), ("ub", float), ("integer", bool),
                            ("sense", np.int8), ("rhs", float), ("c", float)):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=dtype)))
        if self.lb.shape != (n,) or self.ub.shape != (n,) or self.c.shape != (n,):
            raise ValueError("column arrays do not match the number of tags")
        if self.integer.shape != (n,):
            raise ValueError("integrality flags do not match the number of tags")
        if self.rhs.shape != (m,) or self.sense.shape != (m,):
            raise ValueError("row arrays do not match the number of row tags")
        bad = np.flatnonzero(self.lb > self.ub)
        if bad.size:
            raise ValueError(f"lower bound exceeds upper bound for {self.tags[bad[0]].label()}")
        if not np.all(np.isin(self.sense, (LE, EQ, GE))):
            raise ValueError("row senses must be LE, EQ or GE")
        if not (np.all(np.isfinite(self.rhs)) and np.all(np.isfinite(self.c))
                and np.all(np.isfinite(A.data))):
            raise ValueError("model data must be finite")

    @property
    def n_vars(self) -> int:
        return len(self.tags)

    @property
    def n_rows(self) -> int:
        return len(self.row_tags)

    @property
    def is_mip(self) -> bool:
        return bool(self.integer.any())

    def index(self, tag: VarTag) -> int:
        if self._index is None:
            object.__setattr__(self, "_index", {t: j for j, t in enumerate(self.tags)})
        return self._index[tag]

    def columns(self, **match) -> np.ndarray:
        """Indices of columns whose tag fields equal every keyword given."""
        keep = [j for j, t in enumerate(self.tags)
                if all(getattr(t, k) == v for k, v in match.items())]
        return np.asarray(keep, dtype=int)

    def rows(self, **match) -> np.ndarray:
        keep = [i for i, t in enumerate(self.row_tags)
                if all(getattr(t, k) == v for k, v in match.items())]
        return np.asarray(keep, dtype=int)

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.offset

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x

    def row_violation(self, x: np.ndarray) -> np.ndarray:
        """Nonnegative violation of each row at ``x``."""
        act = self.A @ x
        viol = np.zeros(self.n_rows)
        le, ge = self.sense <= 0, self.sense >= 0
        viol[le] = np.maximum(viol[le], act[le] - self.rhs[le])
        viol[ge] = np.maximum(viol[ge], self.rhs[ge] - act[ge])
        return viol

    def bound_violation(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(np.maximum(self.lb - x, x - self.ub), 0.0)

    def replace(self, **changes) -> "LinearModel":
        kw = dict(tags=self.tags, lb=self.lb, ub=self.ub, integer=self.integer, A=self.A,
                  sense=self.sense, rhs=self.rhs, c=self.c, row_tags=self.row_tags,
                  maximize=self.maximize, offset=self.offset)
        kw.update(changes)
        return LinearModel(**kw)

    def relaxed(self) -> "LinearModel":
        if not self.is_mip:
            return self
        return self.replace(integer=np.zeros(self.n_vars, dtype=bool))

    def with_bounds(self, lb=None, ub=None) -> "LinearModel":
        return self.replace(lb=self.lb if lb is None else lb, ub=self.ub if ub is None else ub)

    def fix(self, values: Mapping[int, float]) -> "LinearModel":
        """Substitute columns by constants, moving them to the right-hand side."""
        if not values:
            return self
        cols = np.fromiter(values.keys(), dtype=int, count=len(values))
        vals = np.fromiter(values.values(), dtype=float, count=len(values))
        keep = np.ones(self.n_vars, dtype=bool)
        keep[cols] = False
        A_csc = self.A.tocsc()
        rhs = self.rhs - A_csc[:, cols] @ vals
        offset = self.offset + float(self.c[cols] @ vals)
        kept = np.flatnonzero(keep)
        return LinearModel(
            tags=tuple(self.tags[j] for j in kept), lb=self.lb[kept], ub=self.ub[kept],
            integer=self.integer[kept], A=A_csc[:, kept].tocsr(), sense=self.sense,
            rhs=rhs, c=self.c[kept], row_tags=self.row_tags, maximize=self.maximize,
            offset=offset)

    def without_empty_rows(self, tol: float = 1e-9) -> "LinearModel":
        """Drop rows with no nonzeros, checking that each is satisfied by ``0``."""
        nnz = np.diff(self.A.indptr)
        empty = np.flatnonzero(nnz == 0)
        if empty.size == 0:
            return self
        viol = self.row_violation(np.zeros(self.n_vars))[empty]
        if np.any(viol > tol):
            i = int(empty[np.argmax(viol)])
            raise ValueError(f"constant row {self.row_tags[i].label()} is violated")
        keep = np.flatnonzero(nnz > 0)
        return self.replace(A=self.A[keep], sense=self.sense[keep], rhs=self.rhs[keep],
                            row_tags=tuple(self.row_tags[i] for i in keep))

    def describe(self) -> str:
        kind = "MILP" if self.is_mip else "LP"
        return (f"{kind} {'max' if self.maximize else 'min'}: {self.n_vars} columns "
                f"({int(self.integer.sum())} integer), {self.n_rows} rows, {self.A.nnz} nonzeros")


class ModelBuilder:
    """Incremental constructor for :class:`LinearModel`."""

    def __init__(self):
        self.tags: list[VarTag] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.obj: list[float] = []
        self.integer: list[bool] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self.sense: list[int] = []
        self.rhs: list[float] = []
        self.row_tags: list[RowTag] = []
        self._index: dict[VarTag, int] = {}

    @property
    def n_vars(self) -> int:
        return len(self.tags)

    def add_var(self, tag: VarTag, lb: float = 0.0, ub: float = np.inf, obj: float = 0.0,
                integer: bool = False) -> int:
        if tag in self._index:
            raise ValueError(f"duplicate column {tag.label()}")
        j = len(self.tags)
        self._index[tag] = j
        self.tags.append(tag)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        self.integer.append(bool(integer))
        return j

    def var(self, tag: VarTag) -> int:
        return self._index[tag]

    def add_obj(self, j: int, coef: float) -> None:
        self.obj[j] += coef

    def add_row(self, terms: Iterable[tuple[int, float]], sense: int, rhs: float,
                tag: RowTag) -> int:
        i = len(self.rhs)
        n = len(self.tags)
        for j, v in terms:
            if not 0 <= j < n:
                raise IndexError(f"row {tag.label()} references undeclared column {j}")
            if v != 0.0:
                self._rows.append(i)
                self._cols.append(j)
                self._vals.append(float(v))
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.row_tags.append(tag)
        return i

    def add_term(self, row: int, col: int, coef: float) -> None:
        """Add a coefficient to an existing row (columns may be declared later)."""
        if not (0 <= row < len(self.rhs) and 0 <= col < len(self.tags)):
            raise IndexError("row or column not declared")
        self._rows.append(row)
        self._cols.append(col)
        self._vals.append(float(coef))

    def build(self, maximize: bool = True, offset: float = 0.0) -> LinearModel:
        m, n = len(self.rhs), len(self.tags)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
        return LinearModel(
            tags=tuple(self.tags), lb=np.array(self.lb), ub=np.array(self.ub),
            integer=np.array(self.integer, dtype=bool), A=A,
            sense=np.array(self.sense, dtype=np.int8), rhs=np.array(self.rhs),
            c=np.array(self.obj), row_tags=tuple(self.row_tags), maximize=maximize,
            offset=offset)


def stack_models(blocks: Sequence[LinearModel], shared: Sequence[VarTag] = ()) -> tuple[
        sp.csr_matrix, list[np.ndarray]]:
    """Column maps for placing blocks side by side while sharing ``shared`` columns.

    Returns the block-row matrix of all blocks over the combined column space
    and, for each block, the combined index of each of its columns. Shared
    columns come first in the combined ordering.
    """
    shared_pos = {t: k for k, t in enumerate(shared)}
    offset = len(shared)
    maps, mats = [], []
    for b in blocks:
        cmap = np.empty(b.n_vars, dtype=int)
        for j, t in enumerate(b.tags):
            k = shared_pos.get(t)
            if k is None:
                cmap[j] = offset
                offset += 1
            else:
                cmap[j] = k
        maps.append(cmap)
    for b, cmap in zip(blocks, maps):
        coo = b.A.tocoo()
        mats.append(sp.csr_matrix((coo.data, (coo.row, cmap[coo.col])), shape=(b.n_rows, offset)))
    return sp.vstack(mats, format="csr") if mats else sp.csr_matrix((0, offset)), maps
