import struct

import numpy as np
import pytest

from dcbem import _kernels_py, kernels, operators, shapes
from dcbem.operators import (
    DEFAULT_RULE,
    NEAR_RATIO,
    QuadratureRule,
    double_layer_integral,
    greens_function,
    single_layer_integral,
)

from oracle_integrals import (
    GOLDEN,
    UNIT_TRI,
    double_layer_offplane,
    single_layer_inplane,
    single_layer_offplane,
)


# --- Green's function -------------------------------------------------------

def test_greens_function_values():
    assert greens_function((0, 0, 0), (1, 0, 0)) == pytest.approx(0.0795775, rel=1e-6)
    assert greens_function((0, 0, 0), (0, 0.5, 0)) == pytest.approx(0.1591549, rel=1e-6)
    with pytest.raises(ValueError):
        greens_function((1, 2, 3), (1, 2, 3))


# --- single layer against frozen reference integrals ------------------------

@pytest.mark.parametrize("key", sorted(GOLDEN))
def test_single_layer_matches_frozen_reference(key):
    obs, ref = GOLDEN[key]
    assert single_layer_integral(obs, UNIT_TRI) == pytest.approx(ref, rel=1e-8)


def test_frozen_inplane_values_reproduce():
    tri2d = UNIT_TRI[:, :2]
    for key in ("centroid", "vertex0", "vertex1"):
        obs, ref = GOLDEN[key]
        assert single_layer_inplane(np.array(obs[:2]), tri2d) == pytest.approx(ref, rel=1e-10)


def test_frozen_offplane_values_reproduce():
    for key in ("above", "outside"):
        obs, ref = GOLDEN[key]
        assert single_layer_offplane(obs, UNIT_TRI) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_vertex_after_rigid_motion_stays_finite(backend):
    # rounding leaves the observation point a hair off the vertex and its edges
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))
    tri = UNIT_TRI @ q.T + [0.3, -1.7, 2.2]
    ref = GOLDEN["vertex0"][1]
    assert single_layer_integral(tri[0], tri) == pytest.approx(ref, rel=1e-8)
    corners = np.array([tri, tri[[1, 2, 0]] + 0.0])
    cent = np.array([tri[0], tri[0]])
    normals = np.tile(np.cross(tri[1] - tri[0], tri[2] - tri[0]) / 1.0, (2, 1))
    L, _ = kernels.assemble_dense(corners, cent, normals, np.array([1.0, 1.0]),
                                  operators.max_edges(corners), NEAR_RATIO, backend=backend)
    np.testing.assert_allclose(L, ref, rtol=1e-8)


def test_single_layer_far_field():
    side = np.sqrt(2e-2)
    tri = np.array([[0, 0, 0], [side, 0, 0], [0, side, 0]])
    c = tri.mean(axis=0)
    val = single_layer_integral(c + [0, 0, 10.0], tri)
    assert val == pytest.approx(7.9577e-5, rel=1e-3)


def test_branch_continuity_at_switch_distance():
    rng = np.random.default_rng(7)
    for _ in range(20):
        tri = rng.normal(size=(3, 3))
        area = 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0]))
        edge = np.linalg.norm(tri - np.roll(tri, -1, axis=0), axis=1).max()
        direction = rng.normal(size=3)
        obs = tri.mean(axis=0) + NEAR_RATIO * edge * direction / np.linalg.norm(direction)
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0]) / (2 * area)
        exact = _kernels_py.single_layer_analytic(tri - obs, n)
        quad = _kernels_py.single_layer_quadrature(obs, tri, area)
        assert quad == pytest.approx(exact, rel=1e-6)


def test_analytic_branch_against_dblquad_near_surface():
    rng = np.random.default_rng(3)
    tri = np.array([[0.0, 0.0, 0.0], [1.3, 0.2, 0.0], [0.4, 0.9, 0.3]])
    for _ in range(3):
        obs = tri.mean(axis=0) + 0.3 * rng.normal(size=3)
        assert single_layer_integral(obs, tri) == pytest.approx(single_layer_offplane(obs, tri), rel=1e-8)


# --- double layer ------------------------------------------------------------

def test_double_layer_in_plane_is_zero():
    assert double_layer_integral(UNIT_TRI.mean(axis=0), UNIT_TRI) == 0.0
    assert double_layer_integral((3.0, -2.0, 0.0), UNIT_TRI) == 0.0


def test_double_layer_far_axis_matches_one_point_value():
    tri = UNIT_TRI * 0.1
    c = tri.mean(axis=0)
    area = 0.005
    obs = c - [0, 0, 5.0]
    one_point = area * 5.0 / (4 * np.pi * 5.0**3)
    assert double_layer_integral(obs, tri) == pytest.approx(one_point, rel=1e-3)


def test_double_layer_against_dblquad():
    for obs in ([0.2, 0.3, -0.1], [1.5, -0.4, 0.3], [0.1, 0.1, 0.02]):
        assert double_layer_integral(obs, UNIT_TRI) == pytest.approx(double_layer_offplane(obs, UNIT_TRI), rel=1e-8)


def test_double_layer_sign_behind_triangle_is_positive():
    assert double_layer_integral((0.2, 0.2, -1.0), UNIT_TRI) > 0
    assert double_layer_integral((0.2, 0.2, 1.0), UNIT_TRI) < 0


# --- quadrature rule -----------------------------------------------------------

def test_default_rule_is_valid_and_exact_to_degree_six():
    assert np.all(DEFAULT_RULE.weights > 0)
    assert abs(DEFAULT_RULE.weights.sum() - 1.0) <= 1e-14
    # integral of x^a y^b over the reference triangle, divided by its area 1/2
    from math import factorial
    pts = DEFAULT_RULE.points[:, 1:]
    for a in range(7):
        for b in range(7 - a):
            exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)
            approx = DEFAULT_RULE.weights @ (pts[:, 0] ** a * pts[:, 1] ** b)
            assert approx == pytest.approx(exact, rel=1e-11, abs=1e-14)


def test_quadrature_rule_validation():
    with pytest.raises(ValueError):
        QuadratureRule(np.full((2, 3), 1 / 3), np.array([0.6, 0.5]))
    with pytest.raises(ValueError):
        QuadratureRule(np.full((2, 3), 1 / 3), np.array([1.5, -0.5]))


# --- assembled operators ---------------------------------------------------

def test_open_sheet_two_triangles():
    corners = np.array([UNIT_TRI, [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]])
    cent = corners.mean(axis=1)
    normals = np.array([[0, 0, 1.0], [0, 0, 1.0]])
    areas = np.array([0.5, 0.5])
    L, M = kernels.assemble_dense(corners, cent, normals, areas, operators.max_edges(corners), NEAR_RATIO,
                                  backend="python")
    assert L.shape == (2, 2) and np.all(np.diag(L) > 0)
    assert L[0, 1] == pytest.approx(L[1, 0], rel=1e-12)
    np.testing.assert_array_equal(M, 0.0)


def test_row_sum_identity_cube(unit_cube):
    mesh, ops = unit_cube
    np.testing.assert_allclose(ops.Mpv.sum(axis=1), 0.5 * mesh.areas, rtol=1e-12)


def test_row_sum_identity_sphere(sphere320):
    mesh, ops = sphere320
    dev = np.abs(ops.Mpv.sum(axis=1) - 0.5 * mesh.areas) / (0.5 * mesh.areas)
    assert dev.max() < 0.02


def test_null_space_witness(sphere320):
    mesh, ops = sphere320
    one = np.ones(mesh.n_triangles)
    Min = ops.Mpv_in(0)
    ratio = np.linalg.norm((Min - np.diag(0.5 * mesh.areas)) @ one) / np.linalg.norm(Min @ one)
    assert ratio < 0.02


def test_L_symmetry_and_positive_diagonal(sphere320):
    _, ops = sphere320
    L = ops.L
    assert np.all(np.diag(L) > 0)
    asym = np.linalg.norm(L - L.T, 2) / np.linalg.norm(L, 2)
    assert asym < 1e-3


def test_far_block_nearly_symmetric():
    # centroid testing against 12-point integration is symmetric only to the rule's accuracy
    mesh = shapes.combine([shapes.box((0, 0, 0), (1, 1, 1)), shapes.box((10, 0, 0), (11, 1, 1))])
    ops = operators.assemble(mesh)
    a, b = mesh.objects[0].triangle_ids, mesh.objects[1].triangle_ids
    np.testing.assert_allclose(ops.L[np.ix_(a, b)], ops.L[np.ix_(b, a)].T, rtol=1e-3)


def test_internal_blocks_are_submatrices():
    mesh = shapes.combine([shapes.box((0, 0, 0), (1, 1, 1)), shapes.icosphere(0.5, 2, (3, 0, 0))])
    ops = operators.assemble(mesh)
    for q, obj in enumerate(mesh.objects):
        ix = np.ix_(obj.triangle_ids, obj.triangle_ids)
        np.testing.assert_array_equal(ops.L_in(q), ops.L[ix])
        np.testing.assert_array_equal(ops.Mpv_in(q), ops.Mpv[ix])
    np.testing.assert_array_equal(ops.IA, np.diag(mesh.areas))
    assert not ops.L.flags.writeable


@pytest.mark.skipif(len(kernels.available_backends()) < 2, reason="compiled kernel not built")
def test_backends_agree():
    mesh = shapes.combine([shapes.box((0, 0, 0), (1, 2, 1), (2, 3, 2)), shapes.icosphere(0.7, 3, (3, 1, 0))])
    py = operators.assemble(mesh, backend="python")
    cy = operators.assemble(mesh, backend="cython")
    cy2 = operators.assemble(mesh, backend="cython", threads=2)
    np.testing.assert_allclose(cy.L, py.L, rtol=1e-12, atol=0)
    np.testing.assert_allclose(cy.Mpv, py.Mpv, rtol=1e-11, atol=1e-16)
    np.testing.assert_array_equal(cy.L, cy2.L)


def test_unknown_backend():
    mesh = shapes.single(shapes.box((0, 0, 0), (1, 1, 1)))
    with pytest.raises(ValueError):
        operators.assemble(mesh, backend="fortran")


def test_matrix_dump_roundtrip(tmp_path, sphere320):
    _, ops = sphere320
    p = tmp_path / "L.bin"
    operators.dump_matrix(ops.L[:5, :7], p)
    raw = p.read_bytes()
    assert struct.unpack("<ii", raw[:8]) == (5, 7)
    assert len(raw) == 8 + 35 * 8
    np.testing.assert_array_equal(operators.load_matrix(p), ops.L[:5, :7])
    p.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        operators.load_matrix(p)
