"""Comfort levels for HVAC, PEV and EWH users and their LP epigraphs.

The direct evaluators follow the piecewise definitions branch by branch and
always return values in [0, 1]. Inside an optimisation each function is
replaced by ``J <= line_k(arg)`` for every sloped piece plus ``J <= 1``;
maximising ``J`` then recovers the function wherever it is nonnegative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model.linear import LE, ModelBuilder, RowTag, VarTag
from .model.types import EwhParams, HvacParams, PevParams


@dataclass(frozen=True)
class ComfortPieces:
    """Concave piecewise-linear function through ``breakpoints``.

    Outside the first and last breakpoint the end pieces are extended
    linearly, which is what the epigraph rows express.
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(a), float(v)) for a, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        if len(pts) < 2:
            raise ValueError("need at least two breakpoints")
        args = np.array([p[0] for p in pts])
        if np.any(np.diff(args) <= 0):
            raise ValueError("breakpoint arguments must be strictly increasing")
        slopes = [s for s, _ in self.lines()]
        if np.any(np.diff(slopes) > 1e-12 * max(1.0, max(map(abs, slopes)))):
            raise ValueError("pieces are not concave (slopes must be nonincreasing)")

    def lines(self) -> list[tuple[float, float]]:
        """(slope, intercept) of every piece, left to right."""
        out = []
        for (a0, v0), (a1, v1) in zip(self.breakpoints, self.breakpoints[1:]):
            s = (v1 - v0) / (a1 - a0)
            out.append((s, v0 - s * a0))
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        vals = [s * x + c for s, c in self.lines()]
        return np.minimum.reduce(vals) if len(vals) > 1 else vals[0]


def hvac_pieces(p: HvacParams) -> ComfortPieces:
    lo, hi = p.t_desired - p.delta, p.t_desired + p.delta
    return ComfortPieces(((lo, 0.0), (p.t_desired - p.epsilon, 1.0),
                          (p.t_desired + p.epsilon, 1.0), (hi, 0.0)))


def pev_pieces(p: PevParams) -> ComfortPieces:
    return ComfortPieces(((p.soc_base, 0.0), (p.soc_desired, 1.0),
                          (max(1.0, p.soc_desired + 1.0), 1.0)))


def ewh_pieces(p: EwhParams) -> ComfortPieces:
    return ComfortPieces(((p.t_desired - p.delta, 0.0), (p.t_desired, 1.0),
                          (p.t_desired + p.delta, 1.0)))


def _scalar_or_array(f):
    def wrapper(x, params):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            return f(float(arr), params)
        return np.array([f(float(v), params) for v in arr.ravel()]).reshape(arr.shape)
    wrapper.__name__ = f.__name__
    wrapper.__doc__ = f.__doc__
    return wrapper


@_scalar_or_array
def hvac_comfort(t_in: float, params: HvacParams) -> float:
    """Tent-shaped indoor temperature comfort: 1 within ``t_desired +/- epsilon``."""
    td, d, e = params.t_desired, params.delta, params.epsilon
    if t_in >= td + d:
        return 0.0
    if t_in >= td + e:
        return (td + d - t_in) / (d - e)
    if t_in >= td - e:
        return 1.0
    if t_in >= td - d:
        return (t_in - (td - d)) / (d - e)
    return 0.0


@_scalar_or_array
def pev_comfort(soc: float, params: PevParams) -> float:
    if soc >= params.soc_desired:
        return 1.0
    if soc >= params.soc_base:
        return (soc - params.soc_base) / (params.soc_desired - params.soc_base)
    return 0.0


@_scalar_or_array
def ewh_comfort(t_water: float, params: EwhParams) -> float:
    td, d = params.t_desired, params.delta
    if t_water >= td:
        return 1.0
    if t_water >= td - d:
        return (t_water - (td - d)) / (td - (td - d))
    return 0.0


def encode_epigraph(pieces: ComfortPieces, arg_var: int, builder: ModelBuilder, tag: VarTag,
                    lower: float = -np.inf, obj: float = 0.0) -> int:
    """Add ``J`` bounded above by every sloped piece and by 1; returns its column.

    Flat pieces become an upper bound on ``J`` instead of a row.
    """
    if not 0 <= arg_var < builder.n_vars:
        raise IndexError(f"argument column {arg_var} is not declared")
    cap = 1.0
    sloped = []
    for s, c in pieces.lines():
        if s == 0.0:
            cap = min(cap, c)
        else:
            sloped.append((s, c))
    j = builder.add_var(tag, lb=lower, ub=cap, obj=obj)
    for k, (s, c) in enumerate(sloped):
        builder.add_row([(j, 1.0), (arg_var, -s)], LE, c,
                        RowTag(f"{tag.device}_comfort_{k}", tag.index, tag.slot, tag.scenario))
    return j
