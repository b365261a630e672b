"""Reduced-potential basis, excitation rows and the full block system.

Unknowns, in column order:

    [ n.grad(phi) per triangle | v_r (N - N_obj) | phi_a per object | J per terminal ]

Rows, in order: external SPIE (N), internal SPIE projected onto the zero-mean
subspace (N - N_obj), total-charge rows, applied-potential rows, KVL rows,
KCL rows.

The assembled matrix is nondimensionalised with the length scale
``ell = sqrt(mean triangle area)`` so that every block is O(1) and the
condition number does not depend on the physical units. The scaled unknowns
are ``ell * n.grad(phi)``, ``v_r``, ``phi_a`` (volts) and ``J * ell / sigma``;
:meth:`AssembledSystem.unscale` maps a scaled solution back to SI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import EPS0, INV_4PI
from .mesh import SurfaceMesh, _UnionFind, tag_terminal
from .operators import OperatorSet


class FormulationError(ValueError):
    """Inconsistent or incomplete excitation for the given mesh."""


# --------------------------------------------------------------------------
# reduced basis


@dataclass(frozen=True)
class ReducedBasis:
    """Zero-mean potential basis ``D_r`` and the per-object constant map.

    For object q with triangles ``I_q`` (ascending), ``D_r^(q) = [I; -1^T]``:
    the first ``N_q - 1`` triangles carry ``v_r`` directly and the last one
    carries minus their sum. Matrices are applied structurally; the dense
    forms are available for small meshes and tests.
    """

    index_sets: tuple[np.ndarray, ...]
    n_triangles: int
    v_offsets: np.ndarray  # start of each object's v_r slice; length N_obj + 1

    @property
    def n_objects(self) -> int:
        return len(self.index_sets)

    @property
    def n_reduced(self) -> int:
        return self.n_triangles - self.n_objects

    def v_slice(self, q: int) -> slice:
        return slice(int(self.v_offsets[q]), int(self.v_offsets[q + 1]))

    def per_object_Dr(self, q: int) -> np.ndarray:
        n = len(self.index_sets[q])
        return np.vstack([np.eye(n - 1), -np.ones((1, n - 1))])

    @property
    def global_Dr(self) -> np.ndarray:
        out = np.zeros((self.n_triangles, self.n_reduced))
        for q, idx in enumerate(self.index_sets):
            out[np.ix_(idx, np.arange(*self.v_slice(q).indices(self.n_reduced)))] = self.per_object_Dr(q)
        return out

    @property
    def ones_map(self) -> np.ndarray:
        out = np.zeros((self.n_triangles, self.n_objects))
        for q, idx in enumerate(self.index_sets):
            out[idx, q] = 1.0
        return out

    def right(self, X: np.ndarray) -> np.ndarray:
        """``X @ D_r`` for X with N columns."""
        out = np.empty(X.shape[:-1] + (self.n_reduced,))
        for q, idx in enumerate(self.index_sets):
            out[..., self.v_slice(q)] = X[..., idx[:-1]] - X[..., idx[-1:]]
        return out

    def potentials(self, v_r: np.ndarray, phi_a: np.ndarray) -> np.ndarray:
        """``D_r v_r + 1 phi_a``, the per-triangle potential."""
        phi = np.empty(self.n_triangles)
        for q, idx in enumerate(self.index_sets):
            v = v_r[self.v_slice(q)]
            phi[idx[:-1]] = v + phi_a[q]
            phi[idx[-1]] = phi_a[q] - v.sum()
        return phi


def build_reduced_basis(mesh: SurfaceMesh) -> ReducedBasis:
    sets = []
    for obj in mesh.objects:
        idx = np.sort(np.asarray(obj.triangle_ids, dtype=np.int64))
        if len(idx) < 2:
            raise FormulationError(f"object {obj.name!r} has a single triangle; at least 2 are required")
        sets.append(idx)
    if not sets:
        raise FormulationError("mesh has no objects")
    sizes = np.array([len(s) - 1 for s in sets])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return ReducedBasis(index_sets=tuple(sets), n_triangles=mesh.n_triangles, v_offsets=offsets)


# --------------------------------------------------------------------------
# excitations


@dataclass(frozen=True)
class ChargeSpec:
    objects: tuple[int, ...]
    charge: float


@dataclass(frozen=True)
class AppliedPotential:
    object: int
    volts: float
    anchor: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class Port:
    """Thevenin source between two terminals.

    The port current ``I`` flows from the circuit into the conductor at
    ``terminals[0]`` and back out at ``terminals[1]``; KVL reads
    ``phi_T1 - phi_T2 + resistance * I = source_volts``.
    """

    terminals: tuple[int, int]
    resistance: float
    source_volts: float


@dataclass(frozen=True)
class PointCharge:
    position: tuple[float, float, float]
    charge: float


@dataclass(frozen=True)
class ExcitationSpec:
    charges: tuple[ChargeSpec, ...] = ()
    applied_potentials: tuple[AppliedPotential, ...] = ()
    ports: tuple[Port, ...] = ()
    point_charges: tuple[PointCharge, ...] = ()


def impressed_potential(points, charges) -> np.ndarray:
    """Free-space potential of point charges, ``sum_k q_k / (4 pi eps0 |r - r_k|)``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(len(pts))
    for pc in charges:
        d = np.linalg.norm(pts - np.asarray(pc.position, dtype=float), axis=1)
        if np.any(d == 0.0):
            raise FormulationError(f"point charge at {tuple(pc.position)} coincides with an evaluation point")
        out += pc.charge * INV_4PI / (EPS0 * d)
    return out


# --------------------------------------------------------------------------
# connectivity and excitation rows


@dataclass(frozen=True)
class PortTopology:
    """Terminal columns and port-connected object sets."""

    terminal_ids: tuple[int, ...]  # J column order: (T1, T2) of each port
    terminal_triangles: np.ndarray
    terminal_objects: np.ndarray
    terminal_signs: np.ndarray  # +1 where port current enters the conductor
    terminal_patches: tuple[np.ndarray, ...]  # triangles of each terminal
    terminal_areas: np.ndarray
    object_sets: tuple[tuple[int, ...], ...]  # sorted; every object appears once


def port_topology(mesh: SurfaceMesh, spec: ExcitationSpec) -> PortTopology:
    by_id = {t.id: t for t in mesh.terminals}
    uf = _UnionFind(mesh.n_objects)
    ids, tris, objs, signs, patches = [], [], [], [], []
    for k, port in enumerate(spec.ports):
        if len(port.terminals) != 2:
            raise FormulationError(f"port {k} must reference exactly two terminals")
        if not port.resistance >= 0:
            raise FormulationError(f"port {k} has negative resistance")
        pair = []
        for pos, tid in enumerate(port.terminals):
            if tid not in by_id:
                raise FormulationError(f"port {k} references untagged terminal {tid}")
            term = by_id[tid]
            want = 1 if pos == 0 else -1
            if term.orientation_sign != want:
                raise FormulationError(
                    f"terminal {tid} is terminal {pos + 1} of port {k} but has sign {term.orientation_sign}"
                )
            if tid in ids:
                raise FormulationError(f"terminal {tid} is used by more than one port")
            pair.append(term)
            ids.append(tid)
            tris.append(term.triangle_id)
            objs.append(term.object_id)
            signs.append(want)
            patches.append(np.asarray(term.triangle_ids, dtype=np.int64))
        shared = set(pair[0].triangle_ids) & set(pair[1].triangle_ids)
        if shared:
            raise FormulationError(f"port {k} is dangling: both terminals on triangle {min(shared)}")
        uf.union(pair[0].object_id, pair[1].object_id)
    flat = [t for p in patches for t in p.tolist()]
    if len(set(flat)) != len(flat):
        raise FormulationError("two terminals share a triangle")
    groups: dict[int, list[int]] = {}
    for q in range(mesh.n_objects):
        groups.setdefault(uf.find(q), []).append(q)
    sets = tuple(sorted(tuple(sorted(g)) for g in groups.values()))
    return PortTopology(
        terminal_ids=tuple(ids),
        terminal_triangles=np.asarray(tris, dtype=np.int64),
        terminal_objects=np.asarray(objs, dtype=np.int64),
        terminal_signs=np.asarray(signs, dtype=float),
        terminal_patches=tuple(patches),
        terminal_areas=np.array([mesh.areas[p].sum() for p in patches], dtype=float),
        object_sets=sets,
    )


@dataclass(frozen=True)
class ChargeRows:
    S: np.ndarray  # (rows, N), entries -eps0 * A_n on member triangles
    Q: np.ndarray
    sets: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class PotentialRows:
    D0Dr: np.ndarray  # (rows, N - N_obj)
    D0one: np.ndarray  # (rows, N_obj)
    phi0: np.ndarray
    objects: tuple[int, ...]
    triangles: tuple[int, ...]


@dataclass(frozen=True)
class CircuitRows:
    """KVL/KCL blocks in SI units.

    ``P`` (KVL x N) takes terminal potential differences, ``R`` (KVL x T)
    multiplies the terminal normal current densities, ``C`` (KCL x T) sums
    terminal currents per object and ``D_T`` (N x T) places ``J / sigma`` on
    the terminal triangles.
    """

    P: np.ndarray
    R: np.ndarray
    V_src: np.ndarray
    C: np.ndarray
    D_T: np.ndarray
    kcl_objects: tuple[int, ...]
    topology: PortTopology
    sigma: np.ndarray  # conductivity of each terminal's object


def _check_objects(mesh: SurfaceMesh, objs, what: str) -> None:
    for q in objs:
        if not 0 <= q < mesh.n_objects:
            raise FormulationError(f"{what} references object {q}, mesh has {mesh.n_objects}")


def build_charge_rows(mesh: SurfaceMesh, spec: ExcitationSpec, topology: PortTopology | None = None) -> ChargeRows:
    """One total-charge row per charge-specified object set.

    Every isolated object or port-connected set needs exactly one of a charge
    specification or an applied potential on one of its members.
    """
    topology = topology or port_topology(mesh, spec)
    set_of = {q: s for s in topology.object_sets for q in s}
    applied = {ap.object for ap in spec.applied_potentials}
    _check_objects(mesh, applied, "applied potential")
    charged: dict[tuple[int, ...], float] = {}
    for cs in spec.charges:
        objs = tuple(sorted(set(cs.objects)))
        if not objs:
            raise FormulationError("charge specification with no objects")
        _check_objects(mesh, objs, "charge specification")
        target = set_of[objs[0]]
        if objs != target:
            names = [mesh.objects[q].name for q in target]
            raise FormulationError(
                f"charge must be specified on the whole port-connected set {names}, got "
                f"{[mesh.objects[q].name for q in objs]}"
            )
        if target in charged:
            raise FormulationError(f"charge specified twice for {[mesh.objects[q].name for q in target]}")
        hit = applied.intersection(target)
        if hit:
            raise FormulationError(
                f"object {mesh.objects[min(hit)].name!r} has an applied potential; its total charge cannot be specified"
            )
        charged[target] = float(cs.charge)
    for s in topology.object_sets:
        n_applied = len(applied.intersection(s))
        if n_applied > 1:
            raise FormulationError(
                f"port-connected set {[mesh.objects[q].name for q in s]} has more than one applied potential"
            )
        if n_applied == 0 and s not in charged:
            raise FormulationError(
                f"object(s) {[mesh.objects[q].name for q in s]} are unconstrained: "
                "give a total charge or an applied potential"
            )
    sets = tuple(s for s in topology.object_sets if s in charged)
    S = np.zeros((len(sets), mesh.n_triangles))
    for r, s in enumerate(sets):
        for q in s:
            ids = mesh.objects[q].triangle_ids
            S[r, ids] = -EPS0 * mesh.areas[ids]
    Q = np.array([charged[s] for s in sets], dtype=float)
    return ChargeRows(S=S, Q=Q, sets=sets)


def build_potential_rows(mesh: SurfaceMesh, spec: ExcitationSpec, basis: ReducedBasis) -> PotentialRows:
    """Pin the potential of each applied-potential object at one anchor triangle."""
    seen = set()
    rows_dr, rows_one, phi0, objs, tris = [], [], [], [], []
    for ap in spec.applied_potentials:
        _check_objects(mesh, [ap.object], "applied potential")
        if ap.object in seen:
            raise FormulationError(f"object {mesh.objects[ap.object].name!r} has two applied potentials")
        seen.add(ap.object)
        idx = basis.index_sets[ap.object]
        if ap.anchor is None:
            tri = int(idx[0])
        else:
            tri = tag_terminal(mesh, ap.object, ap.anchor, 1).triangle_id
        sel = np.zeros(mesh.n_triangles)
        sel[tri] = 1.0
        rows_dr.append(basis.right(sel))
        one = np.zeros(basis.n_objects)
        one[ap.object] = 1.0
        rows_one.append(one)
        phi0.append(float(ap.volts))
        objs.append(ap.object)
        tris.append(tri)
    return PotentialRows(
        D0Dr=np.array(rows_dr).reshape(len(objs), basis.n_reduced),
        D0one=np.array(rows_one).reshape(len(objs), basis.n_objects),
        phi0=np.array(phi0, dtype=float),
        objects=tuple(objs),
        triangles=tuple(tris),
    )


def build_circuit_rows(mesh: SurfaceMesh, spec: ExcitationSpec, basis: ReducedBasis,
                       topology: PortTopology | None = None) -> CircuitRows:
    """KVL (two rows per port, one per terminal current) and KCL rows.

    With ``s = +1`` on the terminal where the port current enters and ``-1``
    where it leaves, the outward normal current density satisfies
    ``J_t A_t = -s_t I``. Each port contributes

        phi_T1 - phi_T2 - s_t R A_t J_t = V_src,   t in {T1, T2}

    and each object of a port-connected set (except the last) contributes
    ``sum_t A_t J_t = 0`` over its terminals.
    """
    topo = topology or port_topology(mesh, spec)
    nt = len(topo.terminal_ids)
    N = mesh.n_triangles
    P = np.zeros((nt, N))
    R = np.zeros((nt, nt))
    V = np.zeros(nt)
    # terminal potential: area-weighted mean over the terminal's triangles
    avg = np.zeros((nt, N))
    for j, patch in enumerate(topo.terminal_patches):
        avg[j, patch] = mesh.areas[patch] / topo.terminal_areas[j]
    for k, port in enumerate(spec.ports):
        for j in (2 * k, 2 * k + 1):
            P[j] = avg[2 * k] - avg[2 * k + 1]
            R[j, j] = -topo.terminal_signs[j] * port.resistance * topo.terminal_areas[j]
            V[j] = port.source_volts
    kcl = []
    for s in topo.object_sets:
        with_terms = [q for q in s if np.any(topo.terminal_objects == q)]
        if len(s) > 1:
            kcl += with_terms[:-1]
    C = np.zeros((len(kcl), nt))
    for r, q in enumerate(kcl):
        on = topo.terminal_objects == q
        C[r, on] = topo.terminal_areas[on]
    sigma = np.array([mesh.objects[q].conductivity for q in topo.terminal_objects], dtype=float)
    D_T = np.zeros((N, nt))
    for j, patch in enumerate(topo.terminal_patches):
        D_T[patch, j] = 1.0 / sigma[j]
    return CircuitRows(P=P, R=R, V_src=V, C=C, D_T=D_T, kcl_objects=tuple(kcl), topology=topo, sigma=sigma)


@dataclass(frozen=True)
class SystemRows:
    charge: ChargeRows
    potential: PotentialRows
    circuit: CircuitRows


def build_rows(mesh: SurfaceMesh, spec: ExcitationSpec, basis: ReducedBasis) -> SystemRows:
    topo = port_topology(mesh, spec)
    return SystemRows(
        charge=build_charge_rows(mesh, spec, topo),
        potential=build_potential_rows(mesh, spec, basis),
        circuit=build_circuit_rows(mesh, spec, basis, topo),
    )


# --------------------------------------------------------------------------
# full system


@dataclass(frozen=True)
class AssembledSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    unknown_index_map: dict[str, slice]
    row_index_map: dict[str, slice]
    length_scale: float
    terminal_sigma: np.ndarray
    basis: ReducedBasis
    rows: SystemRows
    areas: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def unscale(self, x: np.ndarray) -> dict[str, np.ndarray]:
        """Split a scaled solution vector into SI-unit blocks."""
        m = self.unknown_index_map
        ell = self.length_scale
        return {
            "ndgphi": x[m["ndgphi"]] / ell,
            "v_r": x[m["v_r"]].copy(),
            "phi_a": x[m["phi_a"]].copy(),
            "j_t": x[m["j_t"]] * self.terminal_sigma / ell,
        }


def _layout(sizes: list[tuple[str, int]]) -> dict[str, slice]:
    out, start = {}, 0
    for name, n in sizes:
        out[name] = slice(start, start + n)
        start += n
    return out


def assemble_system(operators: OperatorSet, basis: ReducedBasis, rows: SystemRows,
                    phi_im: np.ndarray | None = None) -> AssembledSystem:
    """Assemble the scaled block system for one excitation.

    ``phi_im`` is the impressed potential at the triangle centroids (volts).
    """
    N = basis.n_triangles
    if operators.n != N:
        raise FormulationError(f"operators are {operators.n}x{operators.n}, mesh has {N} triangles")
    areas = np.asarray(operators.areas)
    ell = float(np.sqrt(areas.mean()))
    nr, no = basis.n_reduced, basis.n_objects
    ch, pot, cir = rows.charge, rows.potential, rows.circuit
    nt = cir.R.shape[0]
    cols = _layout([("ndgphi", N), ("v_r", nr), ("phi_a", no), ("j_t", nt)])
    rmap = _layout([
        ("external", N), ("internal", nr), ("charge", len(ch.Q)),
        ("potential", len(pot.phi0)), ("kvl", nt), ("kcl", len(cir.kcl_objects)),
    ])
    dim = N + nr + no + nt
    if rmap["kcl"].stop != dim:
        raise FormulationError(
            f"system is not square: {rmap['kcl'].stop} equations for {dim} unknowns; "
            "check that each object set has exactly one charge or applied-potential constraint"
        )
    A = np.zeros((dim, dim))
    b = np.zeros(dim)
    a2, a3 = ell**2, ell**3
    sig = cir.sigma

    # external SPIE: L n.grad(phi) + (M' + A/2)(D_r v_r) + A phi_a = +/- A phi_im
    ext = rmap["external"]
    A[ext, cols["ndgphi"]] = operators.L / a3
    Mext = operators.Mpv / a2
    Mext[np.arange(N), np.arange(N)] += 0.5 * areas / a2
    A[ext, cols["v_r"]] = basis.right(Mext)
    del Mext
    ones = np.zeros((N, no))
    for q, idx in enumerate(basis.index_sets):
        ones[idx, q] = areas[idx] / a2
    A[ext, cols["phi_a"]] = ones
    if phi_im is not None:
        b[ext] = areas * np.asarray(phi_im, dtype=float) / a2

    # internal SPIE per object, projected: D_r^T (M'_in - A/2) D_r v_r - D_r^T L_in (J / sigma) = 0
    r0 = rmap["internal"].start
    topo = cir.topology
    for q, idx in enumerate(basis.index_sets):
        vs = basis.v_slice(q)
        rows_q = slice(r0 + vs.start, r0 + vs.stop)
        B = operators.Mpv[np.ix_(idx, idx)] / a2
        B[np.arange(len(idx)), np.arange(len(idx))] -= 0.5 * areas[idx] / a2
        B = B[:, :-1] - B[:, -1:]
        A[rows_q, cols["v_r"].start + vs.start: cols["v_r"].start + vs.stop] = B[:-1] - B[-1:]
        for j in np.nonzero(topo.terminal_objects == q)[0]:
            col = operators.L[idx][:, topo.terminal_patches[j]].sum(axis=1) / a3
            A[rows_q, cols["j_t"].start + j] = -(col[:-1] - col[-1])

    # total charge: -eps0 sum A_n n.grad(phi)_n = Q
    rc = rmap["charge"]
    A[rc, cols["ndgphi"]] = ch.S / (EPS0 * a2)
    b[rc] = ch.Q / (EPS0 * ell)

    # applied potentials
    rp = rmap["potential"]
    A[rp, cols["v_r"]] = pot.D0Dr
    A[rp, cols["phi_a"]] = pot.D0one
    b[rp] = pot.phi0

    if nt:
        rk = rmap["kvl"]
        A[rk, cols["v_r"]] = basis.right(cir.P)
        A[rk, cols["phi_a"]] = cir.P @ basis.ones_map
        A[rk, cols["j_t"]] = cir.R * (sig / ell)[None, :]
        b[rk] = cir.V_src
        rl = rmap["kcl"]
        for r, q in enumerate(cir.kcl_objects):
            A[rl.start + r, cols["j_t"]] = cir.C[r] / a2
    A.setflags(write=False)
    b.setflags(write=False)
    return AssembledSystem(
        matrix=A, rhs=b, unknown_index_map=cols, row_index_map=rmap, length_scale=ell,
        terminal_sigma=sig.copy(), basis=basis, rows=rows, areas=areas,
    )


def formulate(mesh: SurfaceMesh, spec: ExcitationSpec, operators: OperatorSet) -> AssembledSystem:
    """Convenience: basis, rows, impressed potential and system in one call."""
    basis = build_reduced_basis(mesh)
    rows = build_rows(mesh, spec, basis)
    phi_im = impressed_potential(mesh.centroids, spec.point_charges) if spec.point_charges else None
    return assemble_system(operators, basis, rows, phi_im)


__all__ = [
    "AppliedPotential", "AssembledSystem", "ChargeRows", "ChargeSpec", "CircuitRows",
    "ExcitationSpec", "FormulationError", "PointCharge", "Port", "PortTopology", "PotentialRows",
    "ReducedBasis", "SystemRows", "assemble_system", "build_charge_rows", "build_circuit_rows",
    "build_potential_rows", "build_reduced_basis", "build_rows", "formulate", "impressed_potential",
    "port_topology",
]
