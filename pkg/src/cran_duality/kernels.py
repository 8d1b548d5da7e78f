"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
NumPy versions in ``_pykernels`` are used. Setting ``CRAN_DUALITY_PURE=1``
forces the NumPy backend.
"""
import os

from . import _pykernels

CONVERGED = _pykernels.CONVERGED
DIVERGED = _pykernels.DIVERGED
MAX_ITERS = _pykernels.MAX_ITERS

_backend = _pykernels
BACKEND = "python"
if os.environ.get("CRAN_DUALITY_PURE") != "1":
    try:
        from . import _ckernels as _backend  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

gamma_map = _backend.gamma_map
fixed_point = _backend.fixed_point
perron_root = _backend.perron_root


def compiled_available() -> bool:
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True
