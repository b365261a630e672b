"""Physical quantities from a solved system, capacitance matrices and field export."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import EPS0
from .formulation import (
    AppliedPotential,
    AssembledSystem,
    ExcitationSpec,
    assemble_system,
    build_reduced_basis,
    build_rows,
)
from .mesh import SurfaceMesh
from .operators import OperatorSet
from .solver import Factorization, Solution, solve_many


@dataclass(frozen=True)
class FieldReport:
    phi_per_triangle: np.ndarray  # V
    charge_density_per_triangle: np.ndarray  # C/m^2
    charge_per_object: np.ndarray  # C
    phi_avg_per_object: np.ndarray  # V
    port_currents: np.ndarray  # A, one per port, positive into terminal 1
    terminal_currents: np.ndarray  # A, outward through each terminal triangle
    terminal_potentials: np.ndarray  # V
    port_resistances: np.ndarray  # ohm, (phi_T1 - phi_T2) / I
    object_resistances: dict[int, float]  # ohm, objects with exactly two terminals
    residual_norm: float

    def potential_spread(self, mesh: SurfaceMesh, q: int) -> float:
        """std / |mean| of the triangle potentials of object ``q``."""
        phi = self.phi_per_triangle[mesh.objects[q].triangle_ids]
        return float(phi.std() / (abs(phi.mean()) + 1e-15))


def reconstruct_fields(solution: Solution, mesh: SurfaceMesh, system: AssembledSystem) -> FieldReport:
    basis = system.basis
    phi = basis.potentials(solution.v_r, solution.phi_a)
    rho = -EPS0 * solution.ndgphi
    charge = np.array([np.sum(rho[o.triangle_ids] * mesh.areas[o.triangle_ids]) for o in mesh.objects])
    topo = system.rows.circuit.topology
    # outward current through each terminal and its area-weighted potential
    i_out = solution.j_t * topo.terminal_areas
    phi_t = np.array([np.dot(mesh.areas[p], phi[p]) / mesh.areas[p].sum() for p in topo.terminal_patches])
    n_ports = len(i_out) // 2
    # port current enters at T1: I = -J_T1 A_T1
    i_port = np.array([-i_out[2 * k] for k in range(n_ports)])
    with np.errstate(divide="ignore", invalid="ignore"):
        r_port = np.array([(phi_t[2 * k] - phi_t[2 * k + 1]) / i_port[k] for k in range(n_ports)])
    r_obj = {}
    for q in range(mesh.n_objects):
        on = np.nonzero(topo.terminal_objects == q)[0]
        if len(on) == 2:
            a, b = on
            # current enters at a (outward current negative) and leaves at b
            current = -i_out[a]
            r_obj[q] = float((phi_t[a] - phi_t[b]) / current) if current != 0 else float("inf")
    return FieldReport(
        phi_per_triangle=phi,
        charge_density_per_triangle=rho,
        charge_per_object=charge,
        phi_avg_per_object=solution.phi_a.copy(),
        port_currents=i_port,
        terminal_currents=i_out,
        terminal_potentials=phi_t,
        port_resistances=r_port,
        object_resistances=r_obj,
        residual_norm=solution.residual_norm,
    )


def resistance_from_ports(report: FieldReport, spec: ExcitationSpec | None = None) -> np.ndarray:
    """``(phi_T1 - phi_T2) / I`` per port."""
    if len(report.port_currents) == 0:
        raise ValueError("no ports in this solution")
    if np.any(report.port_currents == 0):
        raise ZeroDivisionError("port carries zero current (open circuit)")
    return report.port_resistances.copy()


def capacitance_solve(mesh: SurfaceMesh, objects, operators: OperatorSet,
                      anchors: dict[int, tuple] | None = None):
    """Maxwell capacitance matrix plus the system and per-column solutions.

    Column j holds the object charges with object j at 1 V and every other
    listed object at 0 V. All columns share one factorisation since only the
    applied-potential right-hand side changes.
    """
    objects = [int(q) for q in objects]
    if not objects:
        raise ValueError("capacitance matrix needs at least one object")
    if len(set(objects)) != len(objects):
        raise ValueError("objects listed twice")
    anchors = anchors or {}
    basis = build_reduced_basis(mesh)
    spec = ExcitationSpec(applied_potentials=tuple(
        AppliedPotential(q, 0.0, anchors.get(q)) for q in objects))
    system = assemble_system(operators, basis, build_rows(mesh, spec, basis))
    rp = system.row_index_map["potential"]
    rhs = np.zeros((system.dimension, len(objects)))
    rhs[:] = np.asarray(system.rhs)[:, None]
    for j in range(len(objects)):
        rhs[rp.start + j, j] = 1.0
    sols = solve_many(system, rhs, Factorization(system.matrix))
    C = np.empty((len(objects), len(objects)))
    for j, sol in enumerate(sols):
        for i, q in enumerate(objects):
            ids = mesh.objects[q].triangle_ids
            C[i, j] = -EPS0 * np.sum(mesh.areas[ids] * sol.ndgphi[ids])
    return C, system, sols


def capacitance_matrix(mesh: SurfaceMesh, objects, operators: OperatorSet,
                       anchors: dict[int, tuple] | None = None) -> np.ndarray:
    """Maxwell capacitance matrix of the listed objects (F); see :func:`capacitance_solve`."""
    return capacitance_solve(mesh, objects, operators, anchors)[0]


def export_fields(report: FieldReport, mesh: SurfaceMesh, path, format: str = "vtk-legacy") -> None:
    """Write per-triangle potential and charge density as legacy VTK or CSV."""
    if mesh.n_objects == 0 or mesh.n_triangles == 0:
        raise ValueError("nothing to export: mesh has no objects")
    path = Path(path)
    if format == "vtk-legacy":
        lines = ["# vtk DataFile Version 3.0", "dcbem surface fields", "ASCII", "DATASET POLYDATA"]
        lines.append(f"POINTS {len(mesh.vertices)} double")
        lines += [f"{x:.12g} {y:.12g} {z:.12g}" for x, y, z in mesh.vertices]
        n = mesh.n_triangles
        lines.append(f"POLYGONS {n} {4 * n}")
        lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
        lines.append(f"CELL_DATA {n}")
        for name, values in (("phi_V", report.phi_per_triangle),
                             ("rho_s_C_per_m2", report.charge_density_per_triangle)):
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [f"{v:.12g}" for v in values]
        path.write_text("\n".join(lines) + "\n")
    elif format == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["triangle_id", "object_id", "cx", "cy", "cz", "area", "phi", "rho_s"])
            for i in range(mesh.n_triangles):
                cx, cy, cz = mesh.centroids[i]
                w.writerow([i, int(mesh.object_ids[i])] + [
                    f"{v:.12g}" for v in (cx, cy, cz, mesh.areas[i], report.phi_per_triangle[i],
                                          report.charge_density_per_triangle[i])
                ])
    else:
        raise ValueError(f"unknown export format {format!r}; expected 'vtk-legacy' or 'csv'")
