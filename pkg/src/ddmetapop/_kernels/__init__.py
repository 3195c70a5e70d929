"""Iteration kernels with backend selection.

The compiled extension ``_fast`` is used when it imports; otherwise the
pure-Python ``_pure`` module is used.  Setting ``DDMETAPOP_PURE=1`` forces
the pure backend.  Both backends are bit-for-bit equivalent.
"""
import os

import numpy as np

from . import _pure
from ._pure import (  # noqa: F401  (re-exported codes)
    CONSTANT, GAMMA_GAUSS, GBH, HASSELL, LOGISTIC, NEGATIVE, NON_FINITE, OK,
    RICHARDS, RICKER, dispersal, growth, per_capita,
)

try:
    if os.environ.get("DDMETAPOP_PURE"):
        raise ImportError("pure backend forced")
    from . import _fast
except ImportError:
    _fast = None

BACKEND = "compiled" if _fast is not None else "python"


def get_backend(name=None):
    """Return the kernel module called ``name`` ("compiled" or "python")."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _pure
    if name == "compiled":
        if _fast is None:
            raise ImportError("compiled kernels are not available")
        return _fast
    raise ValueError(f"unknown backend {name!r}")


def simulate(packed, x0, T, burn_in, window, coupled=True, backend=None):
    """Run the selected kernel and normalise its output to numpy arrays."""
    mod = get_backend(backend)
    tail, t_first, final, stats, status, bad = mod.simulate(
        packed.map_kind, packed.map_par, packed.disp_kind, packed.disp_par,
        x0, int(T), int(burn_in), int(window), bool(coupled),
    )
    if tail is not None:
        tail = np.asarray(tail, dtype=np.float64)
    return tail, t_first, np.asarray(final, dtype=np.float64), stats, status, bad


def step(packed, x):
    """One coupled step, always through the pure kernel (single evaluations are cheap)."""
    return np.array(
        _pure.step(packed.map_kind_list, packed.map_par_list,
                   packed.disp_kind_list, packed.disp_par_list, list(map(float, x))),
        dtype=np.float64,
    )
