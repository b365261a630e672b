"""YAML run configuration: schema checks, name resolution and defaults.

Errors carry the file, line and dotted field path of the offending entry.
Relative mesh and output paths are resolved against the config file's
directory. Coordinates (anchors, boxes, point-charge positions) are given in
the mesh file's units and scaled by ``mesh.unit_scale`` like the mesh itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .constants import EPS0
from .formats import FORMATS, load_mesh
from .formulation import AppliedPotential, ChargeSpec, ExcitationSpec, PointCharge, Port
from .mesh import SurfaceMesh, tag_terminal, tag_terminal_patch, triangles_in_box

COMMANDS = ("solve", "capmatrix", "sweep")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectConfig:
    name: str
    conductivity: float | None
    permittivity: float = EPS0  # accepted for completeness; the formulation does not use it


@dataclass(frozen=True)
class SweepConfig:
    parameter: str
    objects: tuple[str, ...]
    values: tuple[float, ...]


@dataclass(frozen=True)
class OutputConfig:
    summary: Path | None = None
    vtk: Path | None = None
    csv: Path | None = None


@dataclass(frozen=True)
class RunConfig:
    path: Path
    command: str
    mesh_path: Path
    mesh_format: str | None
    unit_scale: float
    objects: tuple[ObjectConfig, ...]
    mesh: SurfaceMesh  # loaded, with conductivities and terminals applied
    excitation: ExcitationSpec
    terminal_names: tuple[str, ...]
    outputs: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepConfig | None = None
    capmatrix_objects: tuple[int, ...] = ()
    capmatrix_anchors: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# YAML with line tracking


class _Doc:
    """Parsed YAML plus a map from dotted field path to source line."""

    def __init__(self, text: str, source: str):
        self.source = source
        try:
            loader = yaml.SafeLoader(text)
            try:
                node = loader.get_single_node()
                self.data = loader.construct_document(node) if node is not None else None
            finally:
                loader.dispose()
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"{source}:{mark.line + 1}" if mark else source
            raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from exc
        self.lines: dict[str, int] = {}
        if node is not None:
            self._walk(node, "")

    def _walk(self, node, path: str) -> None:
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                self._walk(v, f"{path}.{k.value}" if path else str(k.value))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, f"{path}[{i}]")

    def error(self, path: str, msg: str) -> ConfigError:
        probe = path
        while probe and probe not in self.lines:
            probe = probe.rsplit(".", 1)[0] if "." in probe else ""
        line = self.lines.get(probe)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: field '{path}': {msg}")


def _get(doc: _Doc, obj: dict, key: str, path: str, required: bool = False, default: Any = None):
    if not isinstance(obj, dict):
        raise doc.error(path, "expected a mapping")
    if key not in obj or obj[key] is None:
        if required:
            raise doc.error(f"{path}.{key}" if path else key, "is required")
        return default
    return obj[key]


def _number(doc: _Doc, value, path: str, positive: bool = False) -> float:
    try:
        x = float(value)  # PyYAML reads '1e-14' as a string
    except (TypeError, ValueError):
        raise doc.error(path, f"expected a number, got {value!r}") from None
    if not np.isfinite(x):
        raise doc.error(path, "must be finite")
    if positive and not x > 0:
        raise doc.error(path, f"must be > 0, got {x}")
    return x


def _vector(doc: _Doc, value, path: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise doc.error(path, "expected a list of 3 numbers")
    return tuple(_number(doc, v, f"{path}[{i}]") for i, v in enumerate(value))


def _list(doc: _Doc, value, path: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise doc.error(path, "expected a list")
    return value


def _check_keys(doc: _Doc, obj: dict, allowed: set[str], path: str) -> None:
    if not isinstance(obj, dict):
        raise doc.error(path, "expected a mapping")
    for k in obj:
        if k not in allowed:
            raise doc.error(f"{path}.{k}" if path else str(k), f"unknown field; expected one of {sorted(allowed)}")


# --------------------------------------------------------------------------


def parse_config(path) -> RunConfig:
    """Read, validate and resolve a run configuration (loads the mesh)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc}") from exc
    doc = _Doc(text, str(path))
    root = doc.data
    if not isinstance(root, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _check_keys(doc, root, {"command", "mesh", "objects", "terminals", "excitations", "outputs",
                            "sweep", "capmatrix"}, "")
    base = path.parent

    command = str(_get(doc, root, "command", "", default="solve"))
    if command not in COMMANDS:
        raise doc.error("command", f"must be one of {list(COMMANDS)}, got {command!r}")

    m = _get(doc, root, "mesh", "", required=True)
    _check_keys(doc, m, {"path", "format", "unit_scale"}, "mesh")
    mesh_path = base / str(_get(doc, m, "path", "mesh", required=True))
    fmt = _get(doc, m, "format", "mesh")
    if fmt is not None and fmt not in FORMATS:
        raise doc.error("mesh.format", f"must be one of {list(FORMATS)}")
    unit_scale = _number(doc, _get(doc, m, "unit_scale", "mesh", default=1.0), "mesh.unit_scale", positive=True)
    mesh = load_mesh(mesh_path, format=fmt, unit_scale=unit_scale)
    names = [o.name for o in mesh.objects]

    def point(value, p: str) -> tuple[float, float, float]:
        return tuple(x * unit_scale for x in _vector(doc, value, p))

    def resolve(name, p: str) -> int:
        if str(name) not in names:
            raise doc.error(p, f"object {name!r} is not in the mesh (objects: {names})")
        return names.index(str(name))

    objects = []
    sigmas = {}
    for i, o in enumerate(_list(doc, _get(doc, root, "objects", ""), "objects")):
        p = f"objects[{i}]"
        _check_keys(doc, o, {"name", "conductivity", "permittivity"}, p)
        name = str(_get(doc, o, "name", p, required=True))
        q = resolve(name, f"{p}.name")
        sigma = o.get("conductivity")
        if sigma is not None:
            sigmas[q] = _number(doc, sigma, f"{p}.conductivity", positive=True)
        eps = _number(doc, o.get("permittivity", EPS0), f"{p}.permittivity", positive=True)
        objects.append(ObjectConfig(name=name, conductivity=sigmas.get(q), permittivity=eps))
    if sigmas:
        mesh = mesh.with_conductivities(sigmas)

    ex = _get(doc, root, "excitations", "", default={}) or {}
    _check_keys(doc, ex, {"charges", "applied_potentials", "ports", "point_charges"}, "excitations")

    # terminals are named; port position fixes their sign
    term_defs = {}
    for i, t in enumerate(_list(doc, _get(doc, root, "terminals", ""), "terminals")):
        p = f"terminals[{i}]"
        _check_keys(doc, t, {"name", "object", "anchor", "box"}, p)
        tname = str(_get(doc, t, "name", p, required=True))
        if tname in term_defs:
            raise doc.error(f"{p}.name", f"duplicate terminal name {tname!r}")
        q = resolve(_get(doc, t, "object", p, required=True), f"{p}.object")
        if ("anchor" in t) == ("box" in t):
            raise doc.error(p, "give exactly one of 'anchor' (single triangle) or 'box' (patch)")
        if "anchor" in t:
            term_defs[tname] = (q, "anchor", point(t["anchor"], f"{p}.anchor"), p)
        else:
            box = t["box"]
            if not isinstance(box, list) or len(box) != 2:
                raise doc.error(f"{p}.box", "expected [[xmin, ymin, zmin], [xmax, ymax, zmax]]")
            lo, hi = point(box[0], f"{p}.box[0]"), point(box[1], f"{p}.box[1]")
            term_defs[tname] = (q, "box", (lo, hi), p)

    ports, terminals, used = [], [], {}
    for i, pt in enumerate(_list(doc, ex.get("ports"), "excitations.ports")):
        p = f"excitations.ports[{i}]"
        _check_keys(doc, pt, {"terminals", "resistance", "source_volts"}, p)
        pair = _get(doc, pt, "terminals", p, required=True)
        if not isinstance(pair, list) or len(pair) != 2:
            raise doc.error(f"{p}.terminals", "expected two terminal names")
        ids = []
        for pos, tname in enumerate(pair):
            tname = str(tname)
            if tname not in term_defs:
                raise doc.error(f"{p}.terminals[{pos}]", f"unknown terminal {tname!r}")
            if tname in used:
                raise doc.error(f"{p}.terminals[{pos}]", f"terminal {tname!r} already used by {used[tname]}")
            used[tname] = p
            q, kind, geo, tp = term_defs[tname]
            sign = 1 if pos == 0 else -1
            tid = len(terminals)
            if kind == "anchor":
                term = tag_terminal(mesh, q, geo, sign, tid)
            else:
                tris = triangles_in_box(mesh, q, *geo)
                if len(tris) == 0:
                    raise doc.error(f"{tp}.box", "no triangle centroid of the object lies in the box")
                term = tag_terminal_patch(mesh, q, tris, sign, tid)
            terminals.append((tname, term))
            ids.append(tid)
        res = _number(doc, _get(doc, pt, "resistance", p, required=True), f"{p}.resistance")
        if res < 0:
            raise doc.error(f"{p}.resistance", "must be >= 0")
        vs = _number(doc, _get(doc, pt, "source_volts", p, default=0.0), f"{p}.source_volts")
        ports.append(Port(terminals=tuple(ids), resistance=res, source_volts=vs))
    mesh = mesh.with_terminals([t for _, t in terminals])

    applied, applied_objs = [], {}
    for i, ap in enumerate(_list(doc, ex.get("applied_potentials"), "excitations.applied_potentials")):
        p = f"excitations.applied_potentials[{i}]"
        _check_keys(doc, ap, {"object", "volts", "anchor"}, p)
        q = resolve(_get(doc, ap, "object", p, required=True), f"{p}.object")
        if q in applied_objs:
            raise doc.error(f"{p}.object", f"object {names[q]!r} already has an applied potential")
        applied_objs[q] = p
        anchor = point(ap["anchor"], f"{p}.anchor") if ap.get("anchor") is not None else None
        applied.append(AppliedPotential(q, _number(doc, _get(doc, ap, "volts", p, required=True), f"{p}.volts"), anchor))

    charges = []
    for i, cs in enumerate(_list(doc, ex.get("charges"), "excitations.charges")):
        p = f"excitations.charges[{i}]"
        _check_keys(doc, cs, {"object", "objects", "charge"}, p)
        if ("object" in cs) == ("objects" in cs):
            raise doc.error(p, "give exactly one of 'object' or 'objects'")
        raw = [cs["object"]] if "object" in cs else _list(doc, cs["objects"], f"{p}.objects")
        qs = tuple(resolve(n, f"{p}.objects") for n in raw)
        for q in qs:
            if q in applied_objs:
                raise doc.error(p, f"object {names[q]!r} has both a total charge and an applied potential "
                                   f"({applied_objs[q]}); use one or the other")
        charges.append(ChargeSpec(qs, _number(doc, _get(doc, cs, "charge", p, required=True), f"{p}.charge")))

    point_charges = []
    for i, pc in enumerate(_list(doc, ex.get("point_charges"), "excitations.point_charges")):
        p = f"excitations.point_charges[{i}]"
        _check_keys(doc, pc, {"position", "charge"}, p)
        pos = point(_get(doc, pc, "position", p, required=True), f"{p}.position")
        point_charges.append(PointCharge(pos,
                                         _number(doc, _get(doc, pc, "charge", p, required=True), f"{p}.charge")))

    out = _get(doc, root, "outputs", "", default={}) or {}
    _check_keys(doc, out, {"summary", "vtk", "csv"}, "outputs")
    outputs = OutputConfig(**{k: (base / str(out[k])) if out.get(k) else None for k in ("summary", "vtk", "csv")})

    sweep = None
    if command == "sweep":
        sw = _get(doc, root, "sweep", "", required=True)
        _check_keys(doc, sw, {"parameter", "object", "objects", "values"}, "sweep")
        param = str(_get(doc, sw, "parameter", "sweep", default="conductivity"))
        if param != "conductivity":
            raise doc.error("sweep.parameter", "only 'conductivity' can be swept")
        if "object" in sw:
            objs = [sw["object"]]
        else:
            objs = _list(doc, sw.get("objects"), "sweep.objects") or names
        for n in objs:
            resolve(n, "sweep.object")
        vals = _list(doc, _get(doc, sw, "values", "sweep", required=True), "sweep.values")
        if not vals:
            raise doc.error("sweep.values", "needs at least one value")
        sweep = SweepConfig(param, tuple(str(n) for n in objs),
                            tuple(_number(doc, v, f"sweep.values[{i}]", positive=True) for i, v in enumerate(vals)))

    cap_objs, cap_anchors = (), {}
    if command == "capmatrix":
        cm = _get(doc, root, "capmatrix", "", default={}) or {}
        _check_keys(doc, cm, {"objects", "anchors"}, "capmatrix")
        cap_objs = tuple(resolve(n, "capmatrix.objects") for n in (_list(doc, cm.get("objects"), "capmatrix.objects") or names))
        for n, a in (cm.get("anchors") or {}).items():
            cap_anchors[resolve(n, f"capmatrix.anchors.{n}")] = point(a, f"capmatrix.anchors.{n}")

    return RunConfig(
        path=path, command=command, mesh_path=mesh_path, mesh_format=fmt, unit_scale=unit_scale,
        objects=tuple(objects), mesh=mesh,
        excitation=ExcitationSpec(tuple(charges), tuple(applied), tuple(ports), tuple(point_charges)),
        terminal_names=tuple(n for n, _ in terminals), outputs=outputs, sweep=sweep,
        capmatrix_objects=cap_objs, capmatrix_anchors=cap_anchors,
    )
