"""Backend selection for dense operator assembly.

The compiled extension is used when it imports; otherwise the NumPy
implementation in ``_kernels_py``. Set ``DCBEM_BACKEND=python`` to force the
fallback (useful for comparing the two).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from ._kernels_py import QUAD_BARY, QUAD_WEIGHTS

_compiled = None
if os.environ.get("DCBEM_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _compiled is not None else ("python",)


def assemble_dense(corners, centroids, normals, areas, max_edges, near_ratio, threads=1, backend=None):
    """Dense (L, M') for all triangle pairs using the chosen backend."""
    backend = backend or BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.assemble(
            np.ascontiguousarray(corners, dtype=np.float64),
            np.ascontiguousarray(centroids, dtype=np.float64),
            np.ascontiguousarray(normals, dtype=np.float64),
            np.ascontiguousarray(areas, dtype=np.float64),
            np.ascontiguousarray(max_edges, dtype=np.float64),
            float(near_ratio),
            np.ascontiguousarray(QUAD_BARY),
            np.ascontiguousarray(QUAD_WEIGHTS),
            int(threads),
        )
    if backend == "python":
        return _kernels_py.assemble(corners, centroids, normals, areas, max_edges, near_ratio)
    raise ValueError(f"unknown backend {backend!r}")
