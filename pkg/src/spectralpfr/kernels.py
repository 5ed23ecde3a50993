"""Kernel backend selection.

The compiled core is used when it imports, the pure-Python versions otherwise.
:func:`set_backend` switches explicitly.  Callers must look kernels up through
this module (``kernels.cyclic_stats``) so that a switch takes effect.
"""
from __future__ import annotations

from . import _pykernels

pure = _pykernels

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

MAX_BITMASK_ORDER = 64
_NAMES = ("cyclic_stats", "cyclic_canonical", "signed_sum_vanishes", "subset_min_sumsets")


def backends():
    """Every importable backend module, compiled first."""
    return [m for m in (compiled, pure) if m is not None]


def set_backend(name: str) -> str:
    """Select ``"cython"``, ``"python"`` or ``"auto"``; returns the active backend name."""
    global active, BACKEND
    if name == "auto":
        mod = compiled if compiled is not None else pure
    elif name == "python":
        mod = pure
    elif name == "cython":
        if compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        mod = compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    active, BACKEND = mod, mod.BACKEND
    globals().update({n: getattr(mod, n) for n in _NAMES})
    return BACKEND


active = BACKEND = None
cyclic_stats = cyclic_canonical = signed_sum_vanishes = subset_min_sumsets = None
set_backend("auto")
