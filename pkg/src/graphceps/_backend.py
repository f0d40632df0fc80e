"""Kernel backend selection.

The compiled extension is used when importable. Setting the environment
variable ``GRAPHCEPS_BACKEND=python`` forces the pure-Python kernels;
``GRAPHCEPS_BACKEND=compiled`` makes a missing extension an import error.
"""

import os

from . import _pykernels

_choice = os.environ.get("GRAPHCEPS_BACKEND", "auto").lower()

if _choice == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _pykernels
        BACKEND = "python"

jacobi_eigh = _impl.jacobi_eigh
diag_gmm_logpdf = _impl.diag_gmm_logpdf


def kernels(name):
    """Return the kernel module for ``name`` in {"python", "compiled"}."""
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
