"""Backend selection for the sweep kernels.

The compiled extension is used when it was built; otherwise the
pure-Python fallback is loaded. Set ``AGGVI_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("AGGVI_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels
    else:
        BACKEND = "cython"
else:
    _impl = _pykernels

bellman_sweep = _impl.bellman_sweep
gauss_seidel_sweep = _impl.gauss_seidel_sweep


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
