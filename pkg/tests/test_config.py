import textwrap

import pytest

from dcbem import formats, shapes
from dcbem.config import ConfigError, parse_config
from dcbem.constants import EPS0


@pytest.fixture
def workdir(tmp_path):
    m = shapes.combine([shapes.box((0, 0, 0), (400, 20, 20), (12, 1, 1)),
                        shapes.box((0, 100, 0), (40, 140, 40), (2, 2, 2))], ["bar", "cube"])
    formats.write_msh(m, tmp_path / "scene.msh")
    return tmp_path


def write(tmp, text, name="run.yaml"):
    p = tmp / name
    p.write_text(textwrap.dedent(text))
    return p


def test_minimal_config(workdir):
    cfg = parse_config(write(workdir, """\
        mesh: {path: scene.msh}
        excitations:
          applied_potentials:
            - {object: bar, volts: 1}
            - {object: cube, volts: 0}
        """))
    assert cfg.command == "solve" and cfg.unit_scale == 1.0
    assert [a.volts for a in cfg.excitation.applied_potentials] == [1.0, 0.0]
    assert cfg.outputs.summary is None


def test_full_config_resolution(workdir):
    cfg = parse_config(write(workdir, """\
        command: solve
        mesh: {path: scene.msh, format: gmsh-msh-ascii, unit_scale: 1.0e-6}
        objects:
          - {name: bar, conductivity: 10}
          - {name: cube}
        terminals:
          - {name: in, object: bar, anchor: [0, 10, 10]}
          - {name: out, object: bar, box: [[399, -1, -1], [401, 21, 21]]}
        excitations:
          charges:
            - {object: bar, charge: 0}
          applied_potentials:
            - {object: cube, volts: -1, anchor: [0, 100, 0]}
          ports:
            - {terminals: [in, out], resistance: 50, source_volts: 1}
          point_charges:
            - {position: [0, 0, 500], charge: 1.0e-15}
        outputs: {summary: out/summary.txt}
        """))
    m = cfg.mesh
    assert m.objects[0].conductivity == 10.0
    assert cfg.objects[1].permittivity == EPS0
    t_in, t_out = m.terminals
    assert t_in.orientation_sign == 1 and t_out.orientation_sign == -1
    assert len(t_out.triangle_ids) == 2
    assert m.centroids[t_in.triangle_id][0] == 0.0
    assert cfg.excitation.applied_potentials[0].anchor == pytest.approx((0, 100e-6, 0))
    assert cfg.excitation.point_charges[0].position == pytest.approx((0, 0, 500e-6))
    assert cfg.outputs.summary == workdir / "out/summary.txt"


def test_unknown_object_reference(workdir):
    p = write(workdir, """\
        mesh: {path: scene.msh}
        excitations:
          applied_potentials:
            - {object: plateC, volts: 1}
        """)
    with pytest.raises(ConfigError, match=r"run.yaml:4: field 'excitations.applied_potentials\[0\].object'.*plateC"):
        parse_config(p)


def test_charge_and_potential_conflict(workdir):
    p = write(workdir, """\
        mesh: {path: scene.msh}
        excitations:
          applied_potentials:
            - {object: bar, volts: 1}
          charges:
            - {object: bar, charge: 1.0e-15}
        """)
    with pytest.raises(ConfigError, match="both a total charge and an applied potential"):
        parse_config(p)


@pytest.mark.parametrize("body, match", [
    ("mesh: {path: scene.msh}\nbogus: 1\n", "unknown field"),
    ("mesh: {path: scene.msh}\ncommand: explode\n", "command"),
    ("mesh: {path: scene.msh, unit_scale: -1}\n", "unit_scale"),
    ("mesh: {path: scene.msh}\nobjects:\n  - {name: bar, conductivity: fifty}\n", ":3: field 'objects\\[0\\].conductivity'"),
    ("mesh: {path: scene.msh}\ncommand: sweep\n", "sweep"),
    ("mesh: {path: scene.msh}\ncommand: sweep\nsweep: {parameter: radius, object: bar, values: [1]}\n", "conductivity"),
    ("mesh: {path: scene.msh}\nterminals:\n  - {name: t, object: bar}\n", "exactly one of"),
    ("mesh: [1, 2\n", "invalid YAML"),
    ("- 1\n- 2\n", "mapping"),
])
def test_schema_errors(workdir, body, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(write(workdir, body))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "nope.yaml")


def test_port_errors(workdir):
    base = textwrap.dedent("""\
        mesh: {path: scene.msh}
        terminals:
          - {name: a, object: bar, anchor: [0, 10, 10]}
          - {name: b, object: bar, anchor: [400, 10, 10]}
        excitations:
          charges: [{object: bar, charge: 0}]
          applied_potentials: [{object: cube, volts: 0}]
          ports:
        """)
    with pytest.raises(ConfigError, match="unknown terminal"):
        parse_config(write(workdir, base + "    - {terminals: [a, c], resistance: 1}\n"))
    with pytest.raises(ConfigError, match="already used"):
        parse_config(write(workdir, base + "    - {terminals: [a, b], resistance: 1}\n"
                                           "    - {terminals: [b, a], resistance: 1}\n"))
    with pytest.raises(ConfigError, match=">= 0"):
        parse_config(write(workdir, base + "    - {terminals: [a, b], resistance: -5}\n"))


def test_sweep_and_capmatrix_sections(workdir):
    cfg = parse_config(write(workdir, """\
        command: sweep
        mesh: {path: scene.msh}
        excitations:
          applied_potentials: [{object: bar, volts: 1}, {object: cube, volts: 0}]
        sweep: {object: bar, values: [1, 10, 1.0e3]}
        """))
    assert cfg.sweep.objects == ("bar",) and cfg.sweep.values == (1.0, 10.0, 1000.0)
    cfg = parse_config(write(workdir, """\
        command: capmatrix
        mesh: {path: scene.msh, unit_scale: 2}
        capmatrix: {anchors: {cube: [0, 100, 0]}}
        """))
    assert cfg.capmatrix_objects == (0, 1)
    assert cfg.capmatrix_anchors == {1: (0.0, 200.0, 0.0)}
