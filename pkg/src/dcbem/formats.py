"""Readers and writers for Gmsh MSH (ASCII 2.2 / 4.1) and Wavefront OBJ surfaces."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .mesh import MeshError, SurfaceMesh, build_mesh

FORMATS = ("gmsh-msh-ascii", "obj")


def guess_format(path) -> str:
    ext = Path(path).suffix.lower()
    if ext == ".msh":
        return "gmsh-msh-ascii"
    if ext == ".obj":
        return "obj"
    raise MeshError(f"cannot infer mesh format from extension {ext!r}")


def load_mesh(path, format: str | None = None, unit_scale: float = 1.0) -> SurfaceMesh:
    """Read a triangle surface mesh and build an oriented :class:`SurfaceMesh`.

    Objects come from Gmsh physical groups or OBJ ``o``/``g`` groups when
    present, otherwise from edge-connected components.
    """
    fmt = format or guess_format(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MeshError(f"cannot read mesh {os.fspath(path)!r}: {exc}") from exc
    if fmt == "obj":
        verts, tris, labels, names = _parse_obj(text)
    elif fmt == "gmsh-msh-ascii":
        verts, tris, labels, names = _parse_msh(text)
    else:
        raise MeshError(f"unknown mesh format {fmt!r}; expected one of {FORMATS}")
    return build_mesh(verts, tris, labels=labels, names=names, unit_scale=unit_scale)


# --------------------------------------------------------------------------
# OBJ


def _parse_obj(text: str):
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    groups: list[str | None] = []
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "v":
                verts.append([float(x) for x in rest[:3]])
                if len(verts[-1]) != 3:
                    raise ValueError("vertex needs 3 coordinates")
            elif head in ("o", "g"):
                current = " ".join(rest) if rest else None
            elif head == "f":
                idx = []
                for tok in rest:
                    k = int(tok.split("/")[0])
                    idx.append(k - 1 if k > 0 else len(verts) + k)
                if len(idx) != 3:
                    raise MeshError(f"line {lineno}: only triangular faces are supported")
                tris.append(idx)
                groups.append(current)
        except ValueError as exc:
            raise MeshError(f"line {lineno}: cannot parse {raw!r} ({exc})") from exc
    if not tris:
        raise MeshError("OBJ file contains no faces")
    labels = groups if any(g is not None for g in groups) else None
    if labels is not None and any(g is None for g in groups):
        raise MeshError("OBJ mixes grouped and ungrouped faces")
    return np.array(verts), np.array(tris), labels, None


def write_obj(mesh: SurfaceMesh, path) -> None:
    lines = ["# dcbem surface mesh"]
    lines += [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    for obj in mesh.objects:
        lines.append(f"o {obj.name}")
        for t in obj.triangle_ids:
            a, b, c = mesh.triangles[t] + 1
            lines.append(f"f {a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# Gmsh MSH


def _sections(text: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if line.startswith("$") and not line.startswith("$End"):
            name = line[1:]
            body = []
            i += 1
            while i < len(lines) and lines[i].strip() != f"$End{name}":
                body.append(lines[i])
                i += 1
            if i == len(lines):
                raise MeshError(f"unterminated ${name} section")
            out[name] = body
        i += 1
    return out


def _parse_msh(text: str):
    sec = _sections(text)
    if "MeshFormat" not in sec:
        raise MeshError("missing $MeshFormat section")
    head = sec["MeshFormat"][0].split()
    version, filetype = head[0], int(head[1])
    if filetype != 0:
        raise MeshError("binary MSH files are not supported")
    names = {}
    for line in sec.get("PhysicalNames", [])[1:]:
        parts = line.split(maxsplit=2)
        if len(parts) == 3 and int(parts[0]) == 2:
            names[int(parts[1])] = parts[2].strip().strip('"')
    try:
        if version.startswith("2"):
            return _parse_msh2(sec, names)
        if version.startswith("4"):
            return _parse_msh4(sec, names)
    except (IndexError, ValueError) as exc:
        raise MeshError(f"malformed MSH {version} file: {exc}") from exc
    raise MeshError(f"unsupported MSH version {version}")


def _finish_msh(node_ids, coords, elements, names):
    index = {tag: i for i, tag in enumerate(node_ids)}
    try:
        tris = [[index[a], index[b], index[c]] for a, b, c, _ in elements]
    except KeyError as exc:
        raise MeshError(f"element references unknown node {exc}") from exc
    if not tris:
        raise MeshError("MSH file contains no 3-node triangles")
    phys = [p for *_, p in elements]
    labels = phys if any(p != 0 for p in phys) else None
    return np.array(coords), np.array(tris), labels, names


def _parse_msh2(sec, names):
    nodes = sec["Nodes"]
    count = int(nodes[0])
    node_ids, coords = [], []
    for line in nodes[1 : count + 1]:
        parts = line.split()
        node_ids.append(int(parts[0]))
        coords.append([float(x) for x in parts[1:4]])
    elems = sec["Elements"]
    elements = []
    for line in elems[1 : int(elems[0]) + 1]:
        parts = [int(x) for x in line.split()]
        etype, ntags = parts[1], parts[2]
        if etype != 2:
            continue
        phys = parts[3] if ntags > 0 else 0
        a, b, c = parts[3 + ntags : 6 + ntags]
        elements.append((a, b, c, phys))
    return _finish_msh(node_ids, coords, elements, names)


def _parse_msh4(sec, names):
    surf_phys: dict[int, int] = {}
    if "Entities" in sec:
        ent = sec["Entities"]
        npts, ncurv, nsurf, _ = (int(x) for x in ent[0].split())
        for line in ent[1 + npts + ncurv : 1 + npts + ncurv + nsurf]:
            parts = line.split()
            tag = int(parts[0])
            nphys = int(parts[7])
            surf_phys[tag] = int(parts[8]) if nphys > 0 else 0

    body = sec["Nodes"]
    nblocks = int(body[0].split()[0])
    node_ids, coords = [], []
    i = 1
    for _ in range(nblocks):
        _, _, parametric, nin = (int(x) for x in body[i].split())
        if parametric:
            raise MeshError("parametric node coordinates are not supported")
        i += 1
        node_ids += [int(body[i + k]) for k in range(nin)]
        i += nin
        coords += [[float(x) for x in body[i + k].split()[:3]] for k in range(nin)]
        i += nin

    body = sec["Elements"]
    nblocks = int(body[0].split()[0])
    elements = []
    i = 1
    for _ in range(nblocks):
        dim, tag, etype, nin = (int(x) for x in body[i].split())
        i += 1
        if etype == 2:
            phys = surf_phys.get(tag, 0)
            for k in range(nin):
                _, a, b, c = (int(x) for x in body[i + k].split()[:4])
                elements.append((a, b, c, phys))
        i += nin
    return _finish_msh(node_ids, coords, elements, names)


def write_msh(mesh: SurfaceMesh, path, version: str = "2.2") -> None:
    """Write ASCII MSH with one physical surface group per object (tags start at 1)."""
    nv = len(mesh.vertices)
    out = []
    if version == "2.2":
        out += ["$MeshFormat", "2.2 0 8", "$EndMeshFormat"]
        out += ["$PhysicalNames", str(mesh.n_objects)]
        out += [f'2 {o.id + 1} "{o.name}"' for o in mesh.objects]
        out += ["$EndPhysicalNames", "$Nodes", str(nv)]
        out += [f"{i + 1} {x:.17g} {y:.17g} {z:.17g}" for i, (x, y, z) in enumerate(mesh.vertices)]
        out += ["$EndNodes", "$Elements", str(mesh.n_triangles)]
        k = 1
        for o in mesh.objects:
            for t in o.triangle_ids:
                a, b, c = mesh.triangles[t] + 1
                out.append(f"{k} 2 2 {o.id + 1} {o.id + 1} {a} {b} {c}")
                k += 1
        out += ["$EndElements"]
    elif version == "4.1":
        out += ["$MeshFormat", "4.1 0 8", "$EndMeshFormat"]
        out += ["$PhysicalNames", str(mesh.n_objects)]
        out += [f'2 {o.id + 1} "{o.name}"' for o in mesh.objects]
        out += ["$EndPhysicalNames", "$Entities", f"0 0 {mesh.n_objects} 0"]
        lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
        for o in mesh.objects:
            box = " ".join(f"{v:.17g}" for v in (*lo, *hi))
            out.append(f"{o.id + 1} {box} 1 {o.id + 1} 0")
        out += ["$EndEntities", "$Nodes", f"1 {nv} 1 {nv}", f"2 1 0 {nv}"]
        out += [str(i + 1) for i in range(nv)]
        out += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
        out += ["$EndNodes", "$Elements", f"{mesh.n_objects} {mesh.n_triangles} 1 {mesh.n_triangles}"]
        k = 1
        for o in mesh.objects:
            out.append(f"2 {o.id + 1} 2 {len(o.triangle_ids)}")
            for t in o.triangle_ids:
                a, b, c = mesh.triangles[t] + 1
                out.append(f"{k} {a} {b} {c}")
                k += 1
        out += ["$EndElements"]
    else:
        raise ValueError(f"unsupported MSH version {version}")
    Path(path).write_text("\n".join(out) + "\n")
