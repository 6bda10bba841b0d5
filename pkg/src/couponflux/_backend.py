"""Pick the simulation kernels at import time.

The compiled extension is used when it was built; setting
``COUPONFLUX_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _pykernels

if os.environ.get("COUPONFLUX_PURE_PYTHON") == "1":
    kernels = _pykernels
    COMPILED = False
else:
    try:
        from . import _ckernels as kernels
        COMPILED = True
    except ImportError:
        kernels = _pykernels
        COMPILED = False

NAME = "cython" if COMPILED else "python"


def get(name=None):
    """Kernel module by name: ``"cython"``, ``"python"`` or None for the default."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
