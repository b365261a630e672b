"""Write ready-to-run demo meshes and configs.

    python tools/make_demo_cases.py demo/
    dcbem --config demo/sphere_capmatrix.yaml
    dcbem --config demo/prism_sweep.yaml
    dcbem --config demo/mixed_solve.yaml
"""

import sys
from pathlib import Path

from dcbem import formats, shapes

SPHERE = """\
command: capmatrix
mesh:
  path: sphere.obj
  unit_scale: 1.0e-6   # file is in micrometres
capmatrix:
  objects: [sphere]
"""

PRISM = """\
command: sweep
mesh:
  path: prism.msh
  unit_scale: 1.0e-6
objects:
  - {name: prism, conductivity: 5.8e7}
terminals:
  - {name: left, object: prism, anchor: [0, 10, 10]}
  - {name: right, object: prism, anchor: [400, 10, 10]}
excitations:
  charges:
    - {object: prism, charge: 0}
  ports:
    - {terminals: [left, right], resistance: 50, source_volts: 1}
sweep:
  parameter: conductivity
  object: prism
  values: [1, 10, 100, 1.0e3, 1.0e4, 1.0e5, 1.0e6, 1.0e7, 1.0e8, 1.0e9]
"""

MIXED = """\
command: solve
mesh:
  path: mixed.msh
  unit_scale: 1.0e-6
objects:
  - {name: pair_a, conductivity: 10}
  - {name: pair_b, conductivity: 10}
  - {name: cube, conductivity: 10}
  - {name: sphere, conductivity: 10}
terminals:
  - {name: a_in, object: pair_a, anchor: [0, -30, 10]}
  - {name: b_in, object: pair_b, anchor: [0, 30, 10]}
  - {name: a_out, object: pair_a, anchor: [400, -30, 10]}
  - {name: b_out, object: pair_b, anchor: [400, 30, 10]}
excitations:
  charges:
    - {objects: [pair_a, pair_b], charge: 0}
    - {object: sphere, charge: 1.0e-14}
  applied_potentials:
    - {object: cube, volts: -1}
  ports:
    - {terminals: [a_in, b_in], resistance: 50, source_volts: 1}
    - {terminals: [a_out, b_out], resistance: 50, source_volts: 0}
outputs:
  summary: mixed_summary.txt
  vtk: mixed_fields.vtk
  csv: mixed_fields.csv
"""


def mixed_scene(unit_scale=1.0):
    """Differential pair, cube and sphere; coordinates in micrometres times ``unit_scale``."""
    L, w = 400.0, 20.0
    parts = [
        shapes.box((0, -40, 0), (L, -20, w), (60, 1, 1)),
        shapes.box((0, 20, 0), (L, 40, w), (60, 1, 1)),
        shapes.box((150, -200, -40), (250, -100, 60), (8, 8, 8)),
        shapes.icosphere(50.0, 8, center=(200, 170, 10)),
    ]
    return shapes.combine(parts, ["pair_a", "pair_b", "cube", "sphere"], unit_scale=unit_scale)


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_obj(shapes.single(shapes.icosphere(50.0, 8), "sphere"), out / "sphere.obj")
    formats.write_msh(shapes.single(shapes.box((0, 0, 0), (400, 20, 20), (60, 1, 1)), "prism"), out / "prism.msh")
    formats.write_msh(mixed_scene(), out / "mixed.msh", version="4.1")
    (out / "sphere_capmatrix.yaml").write_text(SPHERE)
    (out / "prism_sweep.yaml").write_text(PRISM)
    (out / "mixed_solve.yaml").write_text(MIXED)
    print(f"wrote demo cases to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "demo")
