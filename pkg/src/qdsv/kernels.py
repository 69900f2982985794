"""Backend selection for the path-stepping kernel.

The compiled extension is used when it was built; otherwise the NumPy
fallback. Set QDSV_PURE_PYTHON=1 to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
simulate_paths = _kernels_py.simulate_paths

if not os.environ.get("QDSV_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        simulate_paths = _kernels.simulate_paths
        BACKEND = "cython"


def get_kernel(backend: str | None = None):
    """Return the kernel for ``backend`` ("cython", "python" or None for the default)."""
    if backend is None:
        return simulate_paths
    if backend == "python":
        return _kernels_py.simulate_paths
    if backend == "cython":
        from . import _kernels

        return _kernels.simulate_paths
    raise ValueError(f"unknown backend {backend!r}")
