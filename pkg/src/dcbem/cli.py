"""Command-line driver: ``dcbem --config run.yaml``.

Exit status is 0 on success, 1 for input errors (config, mesh, excitation)
and 2 for numerical failures (singular system or residual above threshold).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys
from contextlib import nullcontext

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .formulation import FormulationError, formulate
from .mesh import MeshError
from .operators import assemble, dump_matrix
from .postproc import capacitance_matrix, export_fields, reconstruct_fields
from .solver import Factorization, NumericalError, SingularSystemError, solve

logger = logging.getLogger("dcbem")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


def _fmt(x) -> str:
    return f"{float(x):.12g}"


class Summary:
    """Ordered ``key = value`` report."""

    def __init__(self):
        self.lines: list[str] = []

    def comment(self, text: str) -> None:
        self.lines.append(f"# {text}")

    def add(self, key: str, value) -> None:
        if isinstance(value, (float, np.floating)):
            value = _fmt(value)
        self.lines.append(f"{key} = {value}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _blas_limits(threads: int):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return nullcontext()
    return threadpool_limits(limits=threads)


def _header(cfg: RunConfig, summary: Summary, timestamp: bool, ops) -> None:
    summary.comment(f"dcbem {__version__}")
    if timestamp:
        summary.add("timestamp", _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    summary.add("command", cfg.command)
    summary.add("mesh", cfg.mesh_path.name)
    summary.add("triangles", cfg.mesh.n_triangles)
    summary.add("objects", cfg.mesh.n_objects)
    summary.add("assembly_backend", ops.backend)


def _report_solution(summary: Summary, cfg: RunConfig, mesh, system, sol, fac, prefix: str = "") -> object:
    rep = reconstruct_fields(sol, mesh, system)
    summary.add(f"{prefix}unknowns", system.dimension)
    summary.add(f"{prefix}residual", sol.residual_norm)
    summary.add(f"{prefix}condition_estimate", fac.condition())
    for obj in mesh.objects:
        q = obj.id
        summary.add(f"{prefix}object.{obj.name}.charge_C", rep.charge_per_object[q])
        summary.add(f"{prefix}object.{obj.name}.phi_avg_V", rep.phi_avg_per_object[q])
        summary.add(f"{prefix}object.{obj.name}.phi_rel_spread", rep.potential_spread(mesh, q))
    for k in range(len(rep.port_currents)):
        summary.add(f"{prefix}port.{k}.current_A", rep.port_currents[k])
        summary.add(f"{prefix}port.{k}.resistance_ohm", rep.port_resistances[k])
    for q, r in sorted(rep.object_resistances.items()):
        summary.add(f"{prefix}object.{mesh.objects[q].name}.resistance_ohm", r)
    return rep


def run(cfg: RunConfig, threads: int = 1, timestamp: bool = True, dump_matrix_path=None) -> str:
    """Execute one configured command and return the summary text."""
    summary = Summary()
    with _blas_limits(threads):
        ops = assemble(cfg.mesh, threads=threads)
        _header(cfg, summary, timestamp, ops)
        if cfg.command == "solve":
            system = formulate(cfg.mesh, cfg.excitation, ops)
            if dump_matrix_path:
                dump_matrix(system.matrix, dump_matrix_path)
            fac = Factorization(system.matrix)
            sol = solve(system, fac)
            rep = _report_solution(summary, cfg, cfg.mesh, system, sol, fac)
            if cfg.outputs.vtk:
                export_fields(rep, cfg.mesh, cfg.outputs.vtk, "vtk-legacy")
            if cfg.outputs.csv:
                export_fields(rep, cfg.mesh, cfg.outputs.csv, "csv")
        elif cfg.command == "capmatrix":
            objs = cfg.capmatrix_objects
            C = capacitance_matrix(cfg.mesh, objs, ops, cfg.capmatrix_anchors)
            summary.comment("Maxwell capacitance matrix in F: column j = charges with object j at 1 V, "
                            "others at 0 V; off-diagonal entries are <= 0")
            names = [cfg.mesh.objects[q].name for q in objs]
            for i, a in enumerate(names):
                for j, b in enumerate(names):
                    summary.add(f"C.{a}.{b}", C[i, j])
            summary.add("reciprocity_rel", float(np.abs(C - C.T).max() / np.abs(C).max()))
        else:
            sw = cfg.sweep
            for k, sigma in enumerate(sw.values):
                mesh = cfg.mesh.with_conductivities({n: sigma for n in sw.objects})
                system = formulate(mesh, cfg.excitation, ops)
                if dump_matrix_path and k == 0:
                    dump_matrix(system.matrix, dump_matrix_path)
                fac = Factorization(system.matrix)
                sol = solve(system, fac)
                rep = reconstruct_fields(sol, mesh, system)
                summary.add(f"sweep.{k}.conductivity_S_per_m", sigma)
                summary.add(f"sweep.{k}.residual", sol.residual_norm)
                swept = [mesh.object_index(n) for n in sw.objects]
                r_obj = [rep.object_resistances[q] for q in swept if q in rep.object_resistances]
                if len(r_obj) == 1:
                    summary.add(f"sweep.{k}.resistance_ohm", r_obj[0])
                elif len(rep.port_resistances):
                    summary.add(f"sweep.{k}.resistance_ohm", rep.port_resistances[0])
    text = summary.text()
    if cfg.outputs.summary:
        cfg.outputs.summary.write_text(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcbem", description="Boundary-element DC capacitance/resistance solver.")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--threads", type=int, default=1, help="worker threads for assembly and BLAS (default 1)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp so summaries are reproducible")
    p.add_argument("--dump-matrix", metavar="PATH", help="write the assembled system matrix (int32 header + float64)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = parse_config(args.config)
        text = run(cfg, threads=args.threads, timestamp=not args.no_timestamp, dump_matrix_path=args.dump_matrix)
    except (SingularSystemError, NumericalError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, MeshError, FormulationError, OSError, KeyError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
