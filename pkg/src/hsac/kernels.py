"""Kernel backend selection: compiled extension when available, numpy fallback.

Set HSAC_FORCE_PY_KERNELS=1 to force the fallback (used by the benchmark
to compare both backends).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("HSAC_FORCE_PY_KERNELS"):
    _backend = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _backend = _kernels_py
        BACKEND = "python"

invert_plane = _backend.invert_plane
forward_plane = _backend.forward_plane


def get_backend(name: str):
    """Explicit backend access for benchmarking: 'cython' or 'python'."""
    if name == "python":
        return _kernels_py
    from . import _kernels  # raises ImportError if the extension is absent

    return _kernels
