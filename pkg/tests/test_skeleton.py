import math

import numpy as np
import pytest

from bskin import errors, geom
from bskin import skeleton as sko
from bskin import synthetic as syn
from conftest import bend_pose


def test_derive_cone_cylinder():
    c = sko.derive_cone(sko.SphereNode(0, geom.vec(0, 0, 0), 2.0),
                        sko.SphereNode(1, geom.vec(10, 0, 0), 2.0))
    assert c.apex is None and c.half_angle == 0.0


def sample_generatrix_check(s1, s2, n=1000):
    """Oracle: generatrix points touch each sphere at its tangency circle."""
    g = sko.derive_bone_geom(-1, s1.center, s1.radius, s2.center, s2.radius, 1e-12)
    phis = np.linspace(0, 2 * math.pi, n, endpoint=False)
    p0, p1 = g.generatrix(phis)
    d0 = np.abs(np.linalg.norm(p0 - s1.center, axis=1) - s1.radius)
    d1 = np.abs(np.linalg.norm(p1 - s2.center, axis=1) - s2.radius)
    return max(d0.max(), d1.max())


def test_derive_cone_apex_and_tangency():
    s1 = sko.SphereNode(0, geom.vec(0, 0, 0), 3.0)
    s2 = sko.SphereNode(1, geom.vec(4, 0, 0), 1.0)
    c = sko.derive_cone(s1, s2)
    assert abs(math.sin(c.half_angle) - 0.5) < 1e-12
    assert np.allclose(c.apex, [6, 0, 0], atol=1e-12)
    assert sample_generatrix_check(s1, s2) < 1e-9


def test_derive_cone_small():
    s1 = sko.SphereNode(0, geom.vec(0, 0, 0), 1.0)
    s2 = sko.SphereNode(1, geom.vec(1, 0, 0), 0.5)
    c = sko.derive_cone(s1, s2)
    assert abs(math.sin(c.half_angle) - 0.5) < 1e-12
    assert np.allclose(c.apex, [2, 0, 0], atol=1e-12)
    assert sample_generatrix_check(s1, s2) < 1e-9


def test_derive_cone_nested_raises():
    with pytest.raises(errors.NestedSpheres):
        sko.derive_cone(sko.SphereNode(0, geom.vec(0, 0, 0), 3.0),
                        sko.SphereNode(1, geom.vec(1, 0, 0), 1.0))


def test_radius_at(straight2):
    assert sko.radius_at(straight2, 0, 0.0) == 1.0
    assert sko.radius_at(straight2, 0, 1.0) == 1.0
    sk2 = syn.chain_skeleton(1, length=4.0, radii=[2.0, 4.0])
    assert sko.radius_at(sk2, 0, 0.5) == 3.0
    with pytest.raises(errors.OutOfRange):
        sko.radius_at(sk2, 0, 1.5)


def test_apply_pose_identity_exact(chain3):
    posed = sko.apply_pose(chain3, sko.identity_pose())
    for a, b in zip(posed.spheres, chain3.spheres):
        assert np.abs(a.center - b.center).max() <= 1e-12
        assert a.radius == b.radius


def test_apply_pose_single_bend(straight2):
    pose = bend_pose(1, math.pi / 6)
    posed = sko.apply_pose(straight2, pose)
    # downstream sphere rotated about z through (4,0,0)
    expect = np.array([4 + 4 * math.cos(math.pi / 6), 4 * math.sin(math.pi / 6), 0.0])
    assert np.allclose(posed.sphere_by_id[2].center, expect, atol=1e-12)
    assert np.allclose(posed.sphere_by_id[0].center, [0, 0, 0])


def test_apply_pose_radius_scale_recomputes_cone(straight2):
    pose = sko.Pose(sphere_scales={1: 1.1})
    posed = sko.apply_pose(straight2, pose)
    g = posed.geom(0)
    assert abs(g.sin_a - (1.0 - 1.1) / 4.0) < 1e-9
    g2 = posed.geom(1)
    assert abs(g2.sin_a - (1.1 - 1.0) / 4.0) < 1e-9


def test_apply_pose_length_scale_moves_subtree(chain3):
    pose = sko.Pose(bone_length_scales={0: 1.5})
    posed = sko.apply_pose(chain3, pose)
    assert np.allclose(posed.sphere_by_id[1].center, [6, 0, 0])
    assert np.allclose(posed.sphere_by_id[3].center, [14, 0, 0])


def test_apply_pose_sin_alpha_invariant(chain3):
    pose = sko.Pose(bends=(sko.Bend(1, np.array([0.0, 0, 1]), 0.7),
                           sko.Bend(2, np.array([0.0, 1, 0]), -0.4)),
                    twists={0: 0.3}, sphere_scales={2: 1.2})
    posed = sko.apply_pose(chain3, pose)
    for bid in posed.bone_by_id:
        g = posed.geom(bid)
        r1, r2 = g.r_prox, g.r_dist
        assert abs(g.sin_a - (r1 - r2) / g.length) < 1e-9


def test_apply_pose_shared_joints_stay_shared(chain3):
    pose = sko.Pose(bends=(sko.Bend(1, np.array([0.0, 0, 1]), 1.1),),
                    twists={1: 2.0})
    posed = sko.apply_pose(chain3, pose)
    # joint spheres single-centered: distal of bone i == proximal of bone i+1
    for i in range(2):
        d = posed.geom(i).dist_center
        p = posed.geom(i + 1).prox_center
        assert np.abs(d - p).max() < 1e-12


def test_apply_pose_invalid_refs(chain3):
    with pytest.raises(errors.InvalidJointRef):
        sko.apply_pose(chain3, bend_pose(99, 0.1))
    with pytest.raises(errors.InvalidJointRef):
        sko.apply_pose(chain3, sko.Pose(twists={99: 0.1}))


def test_tree_validation():
    spheres = [sko.SphereNode(i, geom.vec(i, 0, 0), 0.3) for i in range(3)]
    with pytest.raises(ValueError):
        sko.Skeleton(spheres, [sko.Bone(0, 0, 1), sko.Bone(1, 1, 2),
                               sko.Bone(2, 2, 0)], [[0, 1, 2]])


def test_skeleton_json_roundtrip(tmp_path, chain3):
    reg = sko.Registration(np.array([0, 1, 2, 2], dtype=np.int64))
    path = tmp_path / "sk.json"
    sko.save_skeleton(chain3, path, reg)
    sk2, reg2 = sko.load_skeleton(path)
    assert [s.id for s in sk2.spheres] == [s.id for s in chain3.spheres]
    assert np.array_equal(reg2.bone_ids, reg.bone_ids)
    for a, b in zip(sk2.spheres, chain3.spheres):
        assert np.allclose(a.center, b.center) and a.radius == b.radius


def test_pose_json_roundtrip(tmp_path):
    pose = sko.Pose(bends=(sko.Bend(1, np.array([0.0, 0, 1]), 0.5, 2),),
                    twists={0: 0.25}, sphere_scales={1: 1.1},
                    bone_length_scales={0: 0.9})
    path = tmp_path / "pose.json"
    sko.save_pose(pose, path)
    p2 = sko.load_pose(path)
    assert p2.bends[0].joint_sphere_id == 1
    assert p2.bends[0].child_bone_id == 2
    assert p2.twists == {0: 0.25}
    assert p2.sphere_scales == {1: 1.1}
    assert p2.bone_length_scales == {0: 0.9}


def test_signed_surface_distance(straight2):
    g = straight2.geom(0)
    pts = np.array([[2.0, 0, 1.5], [2.0, 0, 1.0], [2.0, 0, 0.2],
                    [-1.5, 0, 0.0], [4.0, 1.0, 0.0]])
    d = g.signed_surface_distance(pts)
    assert abs(d[0] - 0.5) < 1e-12
    assert abs(d[1]) < 1e-12
    assert abs(d[2] + 0.8) < 1e-12
    assert abs(d[3] - 0.5) < 1e-12  # beyond the prox cap
    assert abs(d[4]) < 1e-12
