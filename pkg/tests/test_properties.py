import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dcbem import _kernels_py, oracles
from dcbem.formulation import PointCharge, ReducedBasis, impressed_potential
from dcbem.mesh import triangle_geometry
from dcbem.operators import double_layer_integral, single_layer_integral

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
points = arrays(np.float64, (3,), elements=coord)
triangles = arrays(np.float64, (3, 3), elements=coord)
positive = st.floats(1e-6, 1e6, allow_nan=False)

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])


def well_shaped(tri):
    cross = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    edges = np.linalg.norm(tri - np.roll(tri, -1, axis=0), axis=1)
    return np.linalg.norm(cross) > 0.05 * edges.max() ** 2 and edges.min() > 1e-2


def rotation(seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
    return q * np.sign(np.linalg.det(q))


@SETTINGS
@given(triangles)
def test_triangle_geometry_properties(tri):
    assume(well_shaped(tri))
    area, c, n = triangle_geometry(tri)
    assert area > 0 and abs(np.linalg.norm(n) - 1) < 1e-12
    np.testing.assert_allclose(c, tri.mean(axis=0))
    _, _, n2 = triangle_geometry(tri[[0, 2, 1]])
    np.testing.assert_allclose(n2, -n, atol=1e-12)


@SETTINGS
@given(triangles, points, st.integers(0, 2**31), st.floats(1e-3, 1e3))
def test_single_layer_rigid_motion_and_scaling(tri, obs, seed, s):
    assume(well_shaped(tri))
    ref = single_layer_integral(obs, tri)
    assert ref > 0
    R = rotation(seed)
    shift = np.array([1.0, -2.0, 0.5])
    moved = single_layer_integral(R @ obs + shift, tri @ R.T + shift)
    assert moved == pytest.approx(ref, rel=1e-9)
    assert single_layer_integral(s * obs, s * tri) == pytest.approx(s * ref, rel=1e-9)


@SETTINGS
@given(triangles, points)
def test_double_layer_mirror_antisymmetry(tri, obs):
    assume(well_shaped(tri))
    area, c, n = triangle_geometry(tri)
    h = np.dot(obs - c, n)
    assume(abs(h) > 1e-3)
    mirror = obs - 2 * h * n
    assert double_layer_integral(mirror, tri) == pytest.approx(-double_layer_integral(obs, tri), rel=1e-9, abs=1e-14)
    assert abs(double_layer_integral(obs, tri)) <= 0.5 + 1e-12


@SETTINGS
@given(arrays(np.float64, (4, 3), elements=coord), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_solid_angles_of_closed_tetrahedron(v, a, b):
    vol = np.dot(v[1] - v[0], np.cross(v[2] - v[0], v[3] - v[0])) / 6
    assume(abs(vol) > 0.5)
    faces = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])
    if vol < 0:
        faces = faces[:, ::-1]
    inside = v[0] * (1 - a) * 0.5 + v[1] * a * 0.5 + v[2] * (1 - b) * 0.5 + v[3] * b * 0.5
    assume(all(well_shaped(v[f]) for f in faces))
    total_in = _kernels_py.solid_angle(v[faces] - inside).sum()
    total_out = _kernels_py.solid_angle(v[faces] - (v.max(axis=0) + 5.0)).sum()
    assert total_in == pytest.approx(4 * np.pi, rel=1e-9)
    assert abs(total_out) < 1e-9


@SETTINGS
@given(st.lists(st.integers(2, 9), min_size=1, max_size=4), st.integers(0, 2**31))
def test_reduced_basis_zero_mean(sizes, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(sum(sizes))
    sets, start = [], 0
    for n in sizes:
        sets.append(np.sort(perm[start:start + n]))
        start += n
    offs = np.concatenate([[0], np.cumsum([n - 1 for n in sizes])])
    b = ReducedBasis(tuple(sets), start, offs)
    v = rng.normal(size=b.n_reduced)
    a = rng.normal(size=b.n_objects)
    phi = b.potentials(v, a)
    for q, idx in enumerate(sets):
        assert phi[idx].mean() == pytest.approx(a[q], abs=1e-12)
    np.testing.assert_array_equal(b.global_Dr.sum(axis=0)[:0], [])
    for q, idx in enumerate(sets):
        assert np.all(b.per_object_Dr(q).sum(axis=0) == 0)


@SETTINGS
@given(points, st.floats(-1e-9, 1e-9), st.floats(-1e-9, 1e-9))
def test_impressed_potential_superposition(p, q1, q2):
    pc1, pc2 = PointCharge((20.0, 0, 0), q1), PointCharge((0, 20.0, 0), q2)
    both = impressed_potential([p], [pc1, pc2])[0]
    split = impressed_potential([p], [pc1])[0] + impressed_potential([p], [pc2])[0]
    assert both == pytest.approx(split, rel=1e-12, abs=1e-20)


@SETTINGS
@given(positive, positive, positive, st.floats(1.01, 100))
def test_oracle_scaling_laws(length, sigma, area, s):
    r = oracles.pouillet_resistance(length, sigma, area).value
    assert oracles.pouillet_resistance(s * length, sigma, s * s * area).value == pytest.approx(r / s, rel=1e-12)
    c = oracles.sphere_capacitance(length).value
    assert oracles.sphere_capacitance(s * length).value == pytest.approx(s * c, rel=1e-12)
    cc = oracles.concentric_capacitance(length, s * length).value
    assert oracles.concentric_capacitance(2 * length, 2 * s * length).value == pytest.approx(2 * cc, rel=1e-12)
    assert oracles.parallel_plate_capacitance(s * s * area, s * length).value == pytest.approx(
        s * oracles.parallel_plate_capacitance(area, length).value, rel=1e-12)
