"""Pick the kernel implementation once, at import time.

``MULTIVERSE_PURE_PYTHON=1`` forces the fallback even when the compiled
extension is available (useful for benchmarking and for debugging).
"""
import os

from . import _pykernels

NAME = "python"
kernels = _pykernels

if not os.environ.get("MULTIVERSE_PURE_PYTHON"):
    try:
        from . import _kernels as kernels  # noqa: F811
    except ImportError:
        pass
    else:
        NAME = "cython"


def available():
    """Names of the backends importable in this environment."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        pass
    else:
        names.append("cython")
    return names


def get(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
