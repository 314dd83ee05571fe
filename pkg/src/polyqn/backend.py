"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise the
NumPy fallback is used.  The choice is made once at import time so a given
installation always computes with the same kernels.
"""

from polyqn import _kernels_py

try:
    from polyqn import _kernels
except ImportError:  # pragma: no cover - depends on how the package was built
    _kernels = None

kernels = _kernels if _kernels is not None else _kernels_py
BACKEND = "cython" if _kernels is not None else "python"


def available_backends():
    """Mapping of backend name to kernel module (for tests and benchmarks)."""
    out = {"python": _kernels_py}
    if _kernels is not None:
        out["cython"] = _kernels
    return out
