"""Primitive closed surfaces used by the validation suite, benchmarks and examples.

Each builder returns ``(vertices, triangles)`` with coincident vertices merged;
pass the result through :func:`dcbem.mesh.build_mesh` (or :func:`combine`) to
get an oriented :class:`~dcbem.mesh.SurfaceMesh`.
"""

from __future__ import annotations

import numpy as np

from .mesh import SurfaceMesh, build_mesh


def _merge(soup: list, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Merge a triangle soup (list of 3x3 coordinate arrays) into an indexed mesh."""
    keys: dict[tuple[int, int, int], int] = {}
    verts = []
    tris = []
    for tri in soup:
        idx = []
        for p in tri:
            key = tuple(int(round(c / tol)) for c in p)
            if key not in keys:
                keys[key] = len(verts)
                verts.append(p)
            idx.append(keys[key])
        tris.append(idx)
    return np.array(verts, dtype=float), np.array(tris, dtype=np.int64)


_PHI = (1.0 + 5.0**0.5) / 2.0
_ICO_V = np.array(
    [
        (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
        (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
        (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
    ],
    dtype=float,
)
_ICO_F = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere(radius: float, frequency: int = 4, center=(0.0, 0.0, 0.0)):
    """Geodesic sphere with ``20 * frequency**2`` triangles, vertices on the sphere."""
    if frequency < 1:
        raise ValueError("frequency must be >= 1")
    base = _ICO_V / np.linalg.norm(_ICO_V[0])
    soup = []
    f = frequency
    for a, b, c in _ICO_F:
        A, B, C = base[a], base[b], base[c]

        def pt(i, j):
            p = A + (B - A) * (i / f) + (C - A) * (j / f)
            return p / np.linalg.norm(p)

        for i in range(f):
            for j in range(f - i):
                soup.append(np.array([pt(i, j), pt(i + 1, j), pt(i, j + 1)]))
                if i + j < f - 1:
                    soup.append(np.array([pt(i + 1, j), pt(i + 1, j + 1), pt(i, j + 1)]))
    verts, tris = _merge(soup, 1e-9)
    return verts * radius + np.asarray(center, dtype=float), tris


def _grid_face(origin, u, v, nu, nv):
    o, u, v = (np.asarray(x, dtype=float) for x in (origin, u, v))
    out = []
    for i in range(nu):
        for j in range(nv):
            p00 = o + u * (i / nu) + v * (j / nv)
            p10 = o + u * ((i + 1) / nu) + v * (j / nv)
            p01 = o + u * (i / nu) + v * ((j + 1) / nv)
            p11 = o + u * ((i + 1) / nu) + v * ((j + 1) / nv)
            out.append(np.array([p00, p10, p11]))
            out.append(np.array([p00, p11, p01]))
    return out


def box(lo, hi, divisions=(1, 1, 1)):
    """Axis-aligned box surface with a structured triangulation per face."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    size = hi - lo
    nx, ny, nz = divisions
    ex, ey, ez = np.diag(size)
    soup = []
    soup += _grid_face(lo, ex, ey, nx, ny)
    soup += _grid_face(lo + ez, ex, ey, nx, ny)
    soup += _grid_face(lo, ex, ez, nx, nz)
    soup += _grid_face(lo + ey, ex, ez, nx, nz)
    soup += _grid_face(lo, ey, ez, ny, nz)
    soup += _grid_face(lo + ex, ey, ez, ny, nz)
    return _merge(soup, 1e-9 * float(size.min()))


def _fan_strip(a0, a1, chain):
    """Triangulate the region between segment a0-a1 and a polyline ``chain``.

    ``chain[0]`` is adjacent to ``a0`` and ``chain[-1]`` to ``a1``. One triangle
    spans the whole segment with its apex at the middle chain point; the rest
    fan out from the two segment ends.
    """
    m = len(chain) - 1
    mid = m // 2
    out = [np.array([a0, a1, chain[mid]])]
    for j in range(mid):
        out.append(np.array([a0, chain[j], chain[j + 1]]))
    for j in range(mid, m):
        out.append(np.array([a1, chain[j], chain[j + 1]]))
    return out


def edge_terminal_plate(lo, hi, divisions=(16, 16)):
    """Thin plate (thin along z) whose two x-end side faces each carry a triangle
    spanning the full plate width, usable as a single-triangle edge terminal.

    The top face is fanned along the two x-end edges so that each end's top edge
    is a single mesh segment; the bottom face and the y-sides stay structured.
    The full-width triangle of the x=lo side has its centroid at
    ``(lo_x, mid_y, lo_z + 2/3 * thickness)``.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    nx, ny = divisions
    if nx < 3 or ny < 2:
        raise ValueError("need at least 3 x-cells and 2 y-cells")
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    soup = []
    # bottom face and y-side faces: structured
    soup += _grid_face(lo, (x1 - x0, 0, 0), (0, y1 - y0, 0), nx, ny)
    soup += _grid_face(lo, (x1 - x0, 0, 0), (0, 0, z1 - z0), nx, 1)
    soup += _grid_face((x0, y1, z0), (x1 - x0, 0, 0), (0, 0, z1 - z0), nx, 1)
    # top face: structured interior columns, fanned end columns
    for i in range(1, nx - 1):
        for j in range(ny):
            p00 = (xs[i], ys[j], z1)
            p10 = (xs[i + 1], ys[j], z1)
            p01 = (xs[i], ys[j + 1], z1)
            p11 = (xs[i + 1], ys[j + 1], z1)
            soup.append(np.array([p00, p10, p11]))
            soup.append(np.array([p00, p11, p01]))
    for xe, xin in ((xs[0], xs[1]), (xs[-1], xs[-2])):
        chain = [np.array((xin, y, z1)) for y in ys]
        soup += _fan_strip(np.array((xe, y0, z1)), np.array((xe, y1, z1)), chain)
        # end side face: single top segment, bottom follows the bottom grid
        chain = [np.array((xe, y, z0)) for y in ys]
        soup += _fan_strip(np.array((xe, y0, z1)), np.array((xe, y1, z1)), chain)
    return _merge(soup, 1e-9 * float((hi - lo).min()))


def combine(parts, names=None, unit_scale: float = 1.0) -> SurfaceMesh:
    """Build one tagged multi-object mesh from ``[(vertices, triangles), ...]``.

    ``parts`` entries may also be ``[(v, t), (v, t), ...]`` lists, which are
    merged into a single object (e.g. the two spheres of a hollow shell).
    """
    verts, tris, labels = [], [], []
    offset = 0
    for k, part in enumerate(parts):
        pieces = part if isinstance(part, list) else [part]
        for v, t in pieces:
            verts.append(np.asarray(v, dtype=float))
            tris.append(np.asarray(t) + offset)
            labels += [k] * len(t)
            offset += len(v)
    names = names or [f"object{k}" for k in range(len(parts))]
    return build_mesh(
        np.vstack(verts), np.vstack(tris), labels=labels, names=dict(enumerate(names)), unit_scale=unit_scale
    )


def single(part, name: str = "object0", unit_scale: float = 1.0) -> SurfaceMesh:
    return combine([part], names=[name], unit_scale=unit_scale)


__all__ = ["icosphere", "box", "edge_terminal_plate", "combine", "single"]
