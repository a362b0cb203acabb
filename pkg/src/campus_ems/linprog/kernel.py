"""Selects the compiled simplex kernel, falling back to the numpy twin."""
import os
from contextlib import contextmanager

from . import _kernel_py

IMPLEMENTATION = "python"
_ext = None
if not os.environ.get("CAMPUS_EMS_PURE_PYTHON"):
    try:
        from . import _kernel as _ext  # type: ignore[attr-defined]
        IMPLEMENTATION = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _ext = None

_impl = _ext if _ext is not None else _kernel_py

primal_simplex = _impl.primal_simplex
dual_simplex = _impl.dual_simplex
pivot = _impl.pivot

BASIC, AT_LB, AT_UB, FREE = _kernel_py.BASIC, _kernel_py.AT_LB, _kernel_py.AT_UB, _kernel_py.FREE
OPTIMAL, UNBOUNDED, INFEASIBLE, ITER_LIMIT = (
    _kernel_py.OPTIMAL, _kernel_py.UNBOUNDED, _kernel_py.INFEASIBLE, _kernel_py.ITER_LIMIT)
BLAND, DANTZIG = _kernel_py.BLAND, _kernel_py.DANTZIG


def implementations():
    """Available (name, module) pairs, compiled first."""
    out = []
    if _ext is not None:
        out.append(("compiled", _ext))
    out.append(("python", _kernel_py))
    return out


@contextmanager
def use(name: str):
    """Temporarily route every solve through one implementation (tests, benchmarks)."""
    global primal_simplex, dual_simplex, pivot, IMPLEMENTATION
    mods = dict(implementations())
    if name not in mods:
        raise ValueError(f"kernel {name!r} not available; have {sorted(mods)}")
    saved = primal_simplex, dual_simplex, pivot, IMPLEMENTATION
    m = mods[name]
    primal_simplex, dual_simplex, pivot, IMPLEMENTATION = (m.primal_simplex, m.dual_simplex,
                                                           m.pivot, name)
    try:
        yield
    finally:
        primal_simplex, dual_simplex, pivot, IMPLEMENTATION = saved
