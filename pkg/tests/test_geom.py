import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bskin import geom

finite = st.floats(min_value=-50, max_value=50, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(lambda t: np.array(t))


def test_rotate_quarter_turn():
    r = geom.AxisRotation(np.zeros(3), np.array([0.0, 0, 1]), math.pi / 2)
    out = geom.rotate_about_axis(np.array([1.0, 0, 0]), r)
    assert np.allclose(out, [0, 1, 0], atol=1e-12)


def test_rotate_identity():
    r = geom.AxisRotation(np.array([1.0, 2, 3]), geom.vunit(np.array([1.0, 1, 0])), 0.0)
    p = np.array([2.0, -3, 5])
    assert np.allclose(geom.rotate_about_axis(p, r), p, atol=0)


def test_rotate_inverse_composition():
    rng = np.random.default_rng(0)
    axis = geom.vunit(rng.normal(size=3))
    pt = rng.normal(size=3)
    theta = 1.234
    p = np.array([2.0, 3.0, 5.0])
    fwd = geom.rotate_about_axis(p, geom.AxisRotation(pt, axis, theta))
    back = geom.rotate_about_axis(fwd, geom.AxisRotation(pt, axis, -theta))
    assert np.linalg.norm(back - p) < 1e-9


def test_rotate_preserves_axis_distance():
    rng = np.random.default_rng(1)
    for _ in range(50):
        axis = geom.vunit(rng.normal(size=3))
        pt = rng.normal(size=3)
        p = rng.normal(size=3) * 3
        out = geom.rotate_about_axis(p, geom.AxisRotation(pt, axis, rng.normal()))

        def axdist(x):
            v = x - pt
            return np.linalg.norm(v - np.dot(v, axis) * axis)

        assert abs(axdist(out) - axdist(p)) < 1e-9 * max(1.0, axdist(p))


@settings(max_examples=60, deadline=None)
@given(vec3, vec3, st.floats(min_value=-6, max_value=6, allow_nan=False))
def test_rotation_is_rigid(p, q, theta):
    axis = np.array([0.12, -0.56, 0.82])
    axis = geom.vunit(axis)
    r = geom.AxisRotation(np.array([0.3, 0.7, -0.2]), axis, theta)
    rp = geom.rotate_about_axis(p, r)
    rq = geom.rotate_about_axis(q, r)
    assert abs(np.linalg.norm(rp - rq) - np.linalg.norm(p - q)) < 1e-9


def test_plane_sphere_great_circle():
    pl = geom.Plane(np.zeros(3), np.array([0.0, 0, 1]))
    c = geom.plane_sphere_intersection(pl, np.zeros(3), 1.0)
    assert c is not None
    assert np.allclose(c.center, 0) and abs(c.radius - 1.0) < 1e-15


def test_plane_sphere_disjoint():
    pl = geom.Plane(np.array([0.0, 0, 2]), np.array([0.0, 0, 1]))
    assert geom.plane_sphere_intersection(pl, np.zeros(3), 1.0) is None


def test_plane_sphere_pythagoras_sampled():
    # plane z=0.6 against the unit sphere: r' = 0.8; every sampled circle
    # point must sit on the sphere
    pl = geom.Plane(np.array([0.0, 0, 0.6]), np.array([0.0, 0, 1]))
    c = geom.plane_sphere_intersection(pl, np.zeros(3), 1.0)
    assert abs(c.radius - 0.8) < 1e-12
    for ang in np.linspace(0, 2 * math.pi, 100):
        p = c.point_at(ang)
        assert abs(np.linalg.norm(p) - 1.0) < 1e-9


def test_plane_sphere_tangency_flag():
    pl = geom.Plane(np.array([0.0, 0, 1.0 - 1e-9]), np.array([0.0, 0, 1]))
    c = geom.plane_sphere_intersection(pl, np.zeros(3), 1.0, eps_tangency=1e-7)
    assert c is not None and c.tangent


def test_line_line_axes():
    pl = geom.Plane(np.zeros(3), np.array([0.0, 0, 1]))
    p = geom.line_line_intersection_in_plane(
        (np.zeros(3), np.array([1.0, 0, 0])),
        (np.zeros(3), np.array([0.0, 1, 0])), pl)
    assert np.allclose(p, 0, atol=1e-12)


def test_line_line_parallel_none():
    pl = geom.Plane(np.zeros(3), np.array([0.0, 0, 1]))
    p = geom.line_line_intersection_in_plane(
        (np.zeros(3), np.array([1.0, 0, 0])),
        (np.array([0.0, 1, 0]), np.array([1.0, 0, 0])), pl)
    assert p is None


def test_line_line_parametric():
    # l1 through (0,1,0) with direction (1,-1,0) meets the x axis at (1,0,0)
    pl = geom.Plane(np.zeros(3), np.array([0.0, 0, 1]))
    p = geom.line_line_intersection_in_plane(
        (np.array([0.0, 1, 0]), np.array([1.0, -1, 0])),
        (np.zeros(3), np.array([1.0, 0, 0])), pl)
    assert np.allclose(p, [1, 0, 0], atol=1e-12)


def test_arc_rejects_full_turn():
    with pytest.raises(ValueError):
        geom.Arc3(np.zeros(3), 1.0, np.array([0.0, 0, 1]), 0.0, 2 * math.pi)


def test_arc_sampling_and_length():
    arc = geom.Arc3(np.zeros(3), 2.0, np.array([0.0, 0, 1]), 0.2, 1.4)
    assert abs(arc.length - 2.0 * 1.2) < 1e-12
    pts = arc.sample(33)
    assert np.allclose(np.linalg.norm(pts, axis=1), 2.0)
    # tangent orthogonal to radius vector
    t = arc.tangent_at(0.5)
    mid = arc.point_at(0.5)
    assert abs(np.dot(t, mid)) < 1e-12


def test_intersect_line_pairs_batch():
    P1 = np.array([[0.0, 0, 0], [0.0, 0, 0]])
    D1 = np.array([[1.0, 0, 0], [1.0, 0, 0]])
    P2 = np.array([[0.0, 1, 0], [5.0, 1, 0]])
    D2 = np.array([[1.0, -1, 0], [1.0, 0, 0]])
    q, parallel, t1, _ = geom.intersect_line_pairs(P1, D1, P2, D2)
    assert not parallel[0] and parallel[1]
    assert np.allclose(q[0], [1, 0, 0], atol=1e-12)
