"""Triangulated conductor surfaces.

A :class:`SurfaceMesh` groups oriented triangles into conductor objects.
Every object must be a closed, watertight, orientable surface; normals are
reoriented outward from the signed volume instead of being trusted from the
input. Hollow objects (a shell with an inner cavity) are supported: cavity
components end up with inward-facing normals, i.e. pointing out of the
conducting material.
"""

from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .constants import ASPECT_WARN, MIN_TRIANGLE_AREA

logger = logging.getLogger(__name__)

DEFAULT_CONDUCTIVITY = 5.8e7


class MeshError(ValueError):
    """Raised for unreadable, degenerate or non-watertight meshes."""


@dataclass(frozen=True)
class Triangle:
    vertex_ids: tuple[int, int, int]
    object_id: int
    area: float
    centroid: np.ndarray
    unit_normal: np.ndarray


@dataclass(frozen=True)
class ConductorObject:
    id: int
    name: str
    triangle_ids: np.ndarray
    conductivity: float
    total_area: float


@dataclass(frozen=True)
class Terminal:
    """Mesh area where a circuit port attaches.

    Normally a single triangle. ``patch`` optionally lists several triangles
    of the same object that act as one terminal: a uniform normal current
    density over their union and the area-weighted mean potential.

    ``orientation_sign`` is +1 for the terminal where the port current enters
    the conductor and -1 where it leaves, so the outward normal current
    density obeys ``J_n * area = -sign * I``.
    """

    id: int
    object_id: int
    triangle_id: int
    orientation_sign: int
    patch: tuple[int, ...] = ()

    @property
    def triangle_ids(self) -> tuple[int, ...]:
        return self.patch or (self.triangle_id,)


def triangle_geometry(vertices) -> tuple[float, np.ndarray, np.ndarray]:
    """Area, centroid and unit normal of one triangle, respecting its winding."""
    p = np.asarray(vertices, dtype=float).reshape(3, 3)
    cross = np.cross(p[1] - p[0], p[2] - p[0])
    twice_area = float(np.linalg.norm(cross))
    scale = max(np.linalg.norm(p[1] - p[0]), np.linalg.norm(p[2] - p[0]), 1e-300)
    if twice_area <= 1e-14 * scale * scale:
        raise MeshError("collinear triangle vertices")
    return 0.5 * twice_area, p.mean(axis=0), cross / twice_area


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SurfaceMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    object_ids: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray
    normals: np.ndarray
    objects: tuple[ConductorObject, ...]
    terminals: tuple[Terminal, ...] = field(default=())

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    def triangle(self, i: int) -> Triangle:
        return Triangle(
            vertex_ids=tuple(int(v) for v in self.triangles[i]),
            object_id=int(self.object_ids[i]),
            area=float(self.areas[i]),
            centroid=self.centroids[i],
            unit_normal=self.normals[i],
        )

    def triangle_vertices(self) -> np.ndarray:
        """(N, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    def object_index(self, name: str) -> int:
        for obj in self.objects:
            if obj.name == name:
                return obj.id
        raise KeyError(f"no object named {name!r}; mesh has {[o.name for o in self.objects]}")

    def with_conductivities(self, conductivity: Mapping[int | str, float]) -> SurfaceMesh:
        """Copy with per-object conductivities replaced (keys are ids or names)."""
        objs = list(self.objects)
        for key, sigma in conductivity.items():
            idx = self.object_index(key) if isinstance(key, str) else int(key)
            if not sigma > 0:
                raise MeshError(f"conductivity of object {objs[idx].name!r} must be > 0")
            objs[idx] = replace(objs[idx], conductivity=float(sigma))
        return replace(self, objects=tuple(objs))

    def with_terminals(self, terminals: Sequence[Terminal]) -> SurfaceMesh:
        return replace(self, terminals=tuple(terminals))

    def scaled(self, factor: float) -> SurfaceMesh:
        """Uniformly rescale all coordinates; grouping and orientation are kept."""
        v = self.vertices * factor
        objs = tuple(replace(o, total_area=o.total_area * factor**2) for o in self.objects)
        return replace(
            self,
            vertices=_freeze(v),
            areas=_freeze(self.areas * factor**2),
            centroids=_freeze(self.centroids * factor),
            objects=objs,
        )


def tag_terminal(
    mesh: SurfaceMesh, object_id: int, anchor, sign: int, terminal_id: int = 0
) -> Terminal:
    """Attach a terminal to the triangle of ``object_id`` whose centroid is nearest ``anchor``.

    Ties go to the lowest triangle index.
    """
    if not 0 <= object_id < mesh.n_objects:
        raise IndexError(f"object id {object_id} out of range (mesh has {mesh.n_objects})")
    if sign not in (1, -1):
        raise ValueError("terminal sign must be +1 or -1")
    ids = mesh.objects[object_id].triangle_ids
    d2 = np.sum((mesh.centroids[ids] - np.asarray(anchor, dtype=float)) ** 2, axis=1)
    # argmin returns the first minimum and ids are sorted ascending
    tri = int(ids[int(np.argmin(d2))])
    return Terminal(id=terminal_id, object_id=object_id, triangle_id=tri, orientation_sign=sign)


def tag_terminal_patch(
    mesh: SurfaceMesh, object_id: int, triangle_ids, sign: int, terminal_id: int = 0
) -> Terminal:
    """Terminal made of several triangles of one object (see :class:`Terminal`)."""
    if not 0 <= object_id < mesh.n_objects:
        raise IndexError(f"object id {object_id} out of range (mesh has {mesh.n_objects})")
    if sign not in (1, -1):
        raise ValueError("terminal sign must be +1 or -1")
    ids = tuple(sorted({int(t) for t in triangle_ids}))
    if not ids:
        raise MeshError("terminal patch is empty")
    members = set(mesh.objects[object_id].triangle_ids.tolist())
    outside = [t for t in ids if t not in members]
    if outside:
        raise MeshError(f"triangle {outside[0]} does not belong to object {mesh.objects[object_id].name!r}")
    return Terminal(id=terminal_id, object_id=object_id, triangle_id=ids[0], orientation_sign=sign,
                    patch=ids if len(ids) > 1 else ())


def triangles_in_box(mesh: SurfaceMesh, object_id: int, lo, hi) -> np.ndarray:
    """Triangles of ``object_id`` whose centroids lie in the closed box [lo, hi]."""
    ids = mesh.objects[object_id].triangle_ids
    c = mesh.centroids[ids]
    inside = np.all((c >= np.asarray(lo, dtype=float)) & (c <= np.asarray(hi, dtype=float)), axis=1)
    return ids[inside]


# --------------------------------------------------------------------------
# construction and validation


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _edge_map(tris: np.ndarray, subset: np.ndarray) -> dict[tuple[int, int], list[int]]:
    edges: dict[tuple[int, int], list[int]] = defaultdict(list)
    for t in subset:
        a, b, c = (int(x) for x in tris[t])
        for u, v in ((a, b), (b, c), (c, a)):
            edges[(u, v) if u < v else (v, u)].append(int(t))
    return edges


def _solid_angles(points: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Signed solid angle of each triangle in ``corners`` (T,3,3) seen from each point (P,3)."""
    r = corners[None, :, :, :] - points[:, None, None, :]
    d = np.linalg.norm(r, axis=-1)
    r0, r1, r2 = r[..., 0, :], r[..., 1, :], r[..., 2, :]
    num = np.einsum("ptk,ptk->pt", r0, np.cross(r1, r2))
    den = (
        d[..., 0] * d[..., 1] * d[..., 2]
        + np.einsum("ptk,ptk->pt", r0, r1) * d[..., 2]
        + np.einsum("ptk,ptk->pt", r0, r2) * d[..., 1]
        + np.einsum("ptk,ptk->pt", r1, r2) * d[..., 0]
    )
    return 2.0 * np.arctan2(num, den)


def _signed_volume(verts: np.ndarray, tris: np.ndarray) -> float:
    p = verts[tris]
    return float(np.einsum("tk,tk->", p[:, 0], np.cross(p[:, 1], p[:, 2])) / 6.0)


def _orient_component(tris: np.ndarray, comp: list[int], edges) -> None:
    """Make winding consistent inside one connected component (in place)."""
    seen = {comp[0]}
    queue = deque([comp[0]])
    while queue:
        t = queue.popleft()
        a, b, c = tris[t]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            for s in edges[key]:
                if s == t:
                    continue
                # neighbour must traverse the shared edge as v -> u
                row = list(tris[s])
                i = row.index(u)
                same_dir = row[(i + 1) % 3] == v
                if s in seen:
                    if same_dir:
                        raise MeshError("non-orientable surface")
                    continue
                if same_dir:
                    tris[s] = tris[s][::-1]
                seen.add(s)
                queue.append(s)


def build_mesh(
    vertices,
    triangles,
    labels: Sequence | None = None,
    names: Mapping | None = None,
    unit_scale: float = 1.0,
) -> SurfaceMesh:
    """Validate, group and orient raw triangle data.

    ``labels`` gives a group tag per triangle (any hashable); objects are formed
    by tag in order of first appearance. Without labels, objects are the
    edge-connected components. ``names`` optionally maps tags to object names.
    """
    verts = np.asarray(vertices, dtype=float).reshape(-1, 3) * float(unit_scale)
    tris = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    n = len(tris)
    if n == 0:
        raise MeshError("mesh contains no triangles")
    if tris.min() < 0 or tris.max() >= len(verts):
        raise MeshError("triangle references a missing vertex")
    if np.any((tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])):
        raise MeshError("triangle with repeated vertex ids")

    p = verts[tris]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    bad = np.flatnonzero(areas < MIN_TRIANGLE_AREA)
    if bad.size:
        raise MeshError(f"degenerate triangle {int(bad[0])} (area {areas[bad[0]]:.3e} m^2)")

    all_edges = _edge_map(tris, np.arange(n))
    for key, owners in all_edges.items():
        if len(owners) > 2:
            raise MeshError(f"non-manifold edge {key} shared by {len(owners)} triangles")

    # grouping
    if labels is not None:
        labels = list(labels)
        if len(labels) != n:
            raise MeshError("one label per triangle required")
        order: dict = {}
        for lab in labels:
            order.setdefault(lab, len(order))
        object_ids = np.array([order[lab] for lab in labels], dtype=np.int64)
        tags = list(order)
    else:
        uf = _UnionFind(n)
        for owners in all_edges.values():
            if len(owners) == 2:
                uf.union(*owners)
        roots: dict[int, int] = {}
        object_ids = np.empty(n, dtype=np.int64)
        for t in range(n):
            object_ids[t] = roots.setdefault(uf.find(t), len(roots))
        tags = list(range(len(roots)))

    names = dict(names or {})
    objects = []
    for q, tag in enumerate(tags):
        ids = np.flatnonzero(object_ids == q)
        name = str(names.get(tag, tag if labels is not None else f"object{q}"))
        if len(ids) < 2:
            raise MeshError(f"object {name!r} has fewer than 2 triangles")
        edges = _edge_map(tris, ids)
        for key, owners in edges.items():
            if len(owners) != 2:
                raise MeshError(f"object {name!r} is not watertight (open edge {key})")
        # connected components inside the object
        uf = _UnionFind(n)
        for owners in edges.values():
            uf.union(*owners)
        comps: dict[int, list[int]] = defaultdict(list)
        for t in ids:
            comps[uf.find(int(t))].append(int(t))
        comp_list = list(comps.values())
        for comp in comp_list:
            _orient_component(tris, comp, edges)
        # outward orientation: shells nested at odd depth are cavities
        vols = [_signed_volume(verts, tris[c]) for c in comp_list]
        for i, comp in enumerate(comp_list):
            depth = 0
            probe = verts[tris[comp[0], 0]][None, :]
            for j, other in enumerate(comp_list):
                if i == j:
                    continue
                sign = 1.0 if vols[j] > 0 else -1.0
                wind = sign * _solid_angles(probe, verts[tris[other]]).sum() / (4 * np.pi)
                if abs(wind) > 0.5:
                    depth += 1
            want_positive = depth % 2 == 0
            if (vols[i] > 0) != want_positive:
                tris[comp] = tris[comp][:, ::-1]
        volume = _signed_volume(verts, tris[ids])
        if not volume > 0:
            raise MeshError(f"object {name!r} encloses no volume")
        objects.append(
            ConductorObject(
                id=q,
                name=name,
                triangle_ids=_freeze(ids),
                conductivity=DEFAULT_CONDUCTIVITY,
                total_area=float(areas[ids].sum()),
            )
        )

    p = verts[tris]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    normals = cross / np.linalg.norm(cross, axis=1)[:, None]
    centroids = p.mean(axis=1)

    edge_len = np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2)
    longest = edge_len.max(axis=1)
    aspect = longest**2 / (2.0 * areas)
    n_bad = int(np.count_nonzero(aspect > ASPECT_WARN))
    if n_bad:
        logger.warning(
            "%d triangles exceed aspect ratio %.0f:1 (worst %.1f)", n_bad, ASPECT_WARN, aspect.max()
        )

    return SurfaceMesh(
        vertices=_freeze(verts),
        triangles=_freeze(tris),
        object_ids=_freeze(object_ids),
        areas=_freeze(areas),
        centroids=_freeze(centroids),
        normals=_freeze(normals),
        objects=tuple(objects),
    )
