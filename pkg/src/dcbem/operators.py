"""Static Green's function integrals and dense operator assembly.

Potentials are expanded in unit-height pulses (one value per triangle) and
tested at triangle centroids, each row scaled by the observation triangle's
area. With that convention

    L[m, n]   = A_m * int_{T_n} G(c_m, r') dS'
    Mpv[m, n] = A_m * int_{T_n} dG/dn'(c_m, r') dS'   (principal value)

and the identity term of the double-layer operator becomes ``diag(A)``.
Internal (per-object) operators are principal submatrices of the global ones.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels_py as _py
from .constants import INV_4PI
from .kernels import BACKEND, assemble_dense
from .mesh import SurfaceMesh

#: Analytic single-layer integration when centroid distance / longest edge is below this.
NEAR_RATIO = 2.0


@dataclass(frozen=True)
class QuadratureRule:
    """Symmetric triangle rule in barycentric coordinates, weights summing to 1."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.points.shape != (len(self.weights), 3):
            raise ValueError("points must be (n, 3) barycentric coordinates")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-14:
            raise ValueError("quadrature weights must sum to 1")


DEFAULT_RULE = QuadratureRule(_py.QUAD_BARY, _py.QUAD_WEIGHTS)


def greens_function(r, rp) -> float:
    """1 / (4 pi |r - rp|)."""
    d = float(np.linalg.norm(np.asarray(r, dtype=float) - np.asarray(rp, dtype=float)))
    if d == 0.0:
        raise ValueError("Green's function is singular at coincident points")
    return INV_4PI / d


def _corners(tri) -> np.ndarray:
    c = np.asarray(tri, dtype=float)
    if c.shape != (3, 3):
        raise ValueError("triangle must be given as a (3, 3) array of corner coordinates")
    return c


def single_layer_integral(obs, tri, near_ratio: float = NEAR_RATIO) -> float:
    """int_T G(obs, r') dS' over a flat triangle with corners ``tri``.

    Uses the closed-form flat-panel formula when ``obs`` is within
    ``near_ratio`` longest edges of the centroid, a 12-point rule otherwise.
    """
    c = _corners(tri)
    obs = np.asarray(obs, dtype=float)
    cross = np.cross(c[1] - c[0], c[2] - c[0])
    area = 0.5 * np.linalg.norm(cross)
    edges = np.linalg.norm(c - np.roll(c, -1, axis=0), axis=1)
    if np.linalg.norm(obs - c.mean(axis=0)) < near_ratio * edges.max():
        return float(_py.single_layer_analytic(c - obs, cross / (2 * area)))
    return float(_py.single_layer_quadrature(obs, c, area))


def double_layer_integral(obs, tri) -> float:
    """Principal-value int_T n'.grad' G(obs, r') dS' = signed solid angle / 4 pi.

    Positive when ``obs`` lies behind the triangle. Points in the triangle's
    plane (including its own surface) give exactly 0.
    """
    c = _corners(tri)
    rel = c - np.asarray(obs, dtype=float)
    cross = np.cross(c[1] - c[0], c[2] - c[0])
    n = cross / np.linalg.norm(cross)
    scale = np.abs(rel).max()
    if abs(np.dot(n, rel[0])) <= 1e-12 * scale:
        return 0.0
    return float(_py.solid_angle(rel) * INV_4PI)


@dataclass(frozen=True)
class OperatorSet:
    """Dense tested operators for one mesh.

    ``per_object_index_sets[q]`` lists the global triangle indices of object q
    in ascending order; the internal blocks are the matching submatrices.
    """

    L: np.ndarray
    Mpv: np.ndarray
    areas: np.ndarray
    per_object_index_sets: tuple[np.ndarray, ...]
    backend: str = BACKEND

    @property
    def n(self) -> int:
        return len(self.areas)

    @property
    def IA(self) -> np.ndarray:
        return np.diag(self.areas)

    def L_in(self, q: int) -> np.ndarray:
        idx = self.per_object_index_sets[q]
        return self.L[np.ix_(idx, idx)]

    def Mpv_in(self, q: int) -> np.ndarray:
        idx = self.per_object_index_sets[q]
        return self.Mpv[np.ix_(idx, idx)]


def max_edges(corners: np.ndarray) -> np.ndarray:
    return np.linalg.norm(corners - np.roll(corners, -1, axis=1), axis=2).max(axis=1)


def assemble(mesh: SurfaceMesh, threads: int = 1, backend: str | None = None) -> OperatorSet:
    """Assemble L and Mpv for every triangle pair of ``mesh``."""
    corners = mesh.triangle_vertices()
    L, M = assemble_dense(
        corners,
        mesh.centroids,
        mesh.normals,
        mesh.areas,
        max_edges(corners),
        NEAR_RATIO,
        threads=threads,
        backend=backend,
    )
    for a in (L, M):
        a.setflags(write=False)
    idx = tuple(np.asarray(o.triangle_ids, dtype=np.int64) for o in mesh.objects)
    return OperatorSet(L=L, Mpv=M, areas=np.asarray(mesh.areas), per_object_index_sets=idx,
                       backend=backend or BACKEND)


def dump_matrix(matrix: np.ndarray, path) -> None:
    """Write ``int32 rows, int32 cols`` then little-endian float64 entries, row-major."""
    a = np.ascontiguousarray(matrix, dtype="<f8")
    if a.ndim != 2:
        raise ValueError("only 2-D matrices can be dumped")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<ii", *a.shape))
        fh.write(a.tobytes(order="C"))


def load_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    rows, cols = struct.unpack("<ii", raw[:8])
    data = np.frombuffer(raw, dtype="<f8", offset=8)
    if data.size != rows * cols:
        raise ValueError(f"matrix file holds {data.size} values, header says {rows}x{cols}")
    return data.reshape(rows, cols).astype(np.float64)
