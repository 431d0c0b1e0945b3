"""Backend selection for the hot loops.

The compiled extension ``_ckernels`` is used when it imports; otherwise
(or when ``FROSTLAB_PURE_PYTHON=1``) the numpy implementation in
``_pykernels`` is used.  Both expose the same functions.
"""
import os

from . import _pykernels

if os.environ.get("FROSTLAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"

riesz_rows = _impl.riesz_rows
riesz_potential = _impl.riesz_potential
linear_bin = _impl.linear_bin
p_grid_max = _impl.p_grid_max


def backend(name):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
