"""Kernel backend selection.

The compiled extension ``liquidmaas._kernels`` is used when it imports; set
``LIQUIDMAAS_PURE_PYTHON=1`` to force the pure-Python kernels.
"""

import os

from . import _kernels_py

BACKEND = "python"
primal_sweep = _kernels_py.primal_sweep

if not os.environ.get("LIQUIDMAAS_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        BACKEND = "cython"
        primal_sweep = _compiled.primal_sweep


def backends():
    """Available ``{name: primal_sweep}`` implementations."""
    out = {"python": _kernels_py.primal_sweep}
    try:
        from . import _kernels
    except ImportError:
        return out
    out["cython"] = _kernels.primal_sweep
    return out
