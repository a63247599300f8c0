import math

import numpy as np
import pytest

from bskin import refskin as rs
from bskin import skeleton as sko
from bskin import synthetic as syn
from bskin import errors
from conftest import bend_pose


def test_weights_sum_to_one(straight2):
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 10, size=(10_000, 3))
    W = rs.gaussian_weights(straight2, pts)
    assert np.abs(W.weights.sum(axis=1) - 1.0).max() < 1e-9
    assert W.weights.min() >= 0.0
    assert W.indices.shape[1] <= 4


def test_weight_far_from_joints_is_one(straight2):
    p = np.array([[1.0, 0, 1.0]])
    W = rs.gaussian_weights(straight2, p, sigma_factor=0.4)
    top = W.weights[0].max()
    assert top > 0.99


def test_weight_symmetry_at_joint(straight2):
    p = np.array([[4.0, 0, 1.0]])  # equidistant from two identical bones
    W = rs.gaussian_weights(straight2, p)
    w = np.sort(W.weights[0])[::-1]
    assert w[0] == pytest.approx(0.5, abs=1e-9)
    assert w[1] == pytest.approx(0.5, abs=1e-9)


def test_lbs_identity(straight2):
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 9, size=(500, 3))
    W = rs.gaussian_weights(straight2, pts)
    mats = rs.bone_matrices(straight2, sko.identity_pose())
    assert np.abs(rs.lbs(pts, W, mats) - pts).max() < 1e-12


def test_lbs_single_bone_rigid(straight2):
    pts = np.array([[1.0, 0, 1.1], [2.0, 0.2, 0.9]])
    pose = bend_pose(1, 0.8)
    mats = rs.bone_matrices(straight2, pose)
    # full weight on bone 1: pure rigid transform
    W = rs.WeightSet(np.array([0, 1]), np.tile([1, 0, 0, 0], (2, 1)),
                     np.tile([1.0, 0, 0, 0], (2, 1)))
    out = rs.lbs(pts, W, mats)
    M = mats[1]
    expect = pts @ M[:3, :3].T + M[:3, 3]
    assert np.abs(out - expect).max() < 1e-12


def test_lbs_candy_wrapper():
    sk = syn.chain_skeleton(2, length=4.0, radii=1.0)
    R = np.eye(4)
    R[1, 1] = R[2, 2] = -1.0  # 180-degree twist about x
    mats = {0: np.eye(4), 1: R}
    pts = np.array([[4.0, 0, 1.0], [4.0, 0.7, 0.7]])
    W = rs.gaussian_weights(sk, pts)
    out = rs.lbs(pts, W, mats)
    r_in = np.linalg.norm(pts[:, 1:], axis=1)
    r_out = np.linalg.norm(out[:, 1:], axis=1)
    assert np.all(r_out < 0.5 * r_in)  # collapse toward the axis


def test_dqs_identity(straight2):
    rng = np.random.default_rng(2)
    pts = rng.uniform(-1, 9, size=(500, 3))
    W = rs.gaussian_weights(straight2, pts)
    mats = rs.bone_matrices(straight2, sko.identity_pose())
    assert np.abs(rs.dqs(pts, W, mats) - pts).max() < 1e-12


def test_dqs_blend_is_rigid(straight2):
    # blended transform stays orthonormal: distances between co-located
    # probes are preserved per point-pair with identical weights
    pose = bend_pose(1, math.pi / 2)
    mats = rs.bone_matrices(straight2, pose)
    base = np.array([4.0, 0.3, 0.9])
    eps_probe = 1e-4
    probes = np.array([base, base + [eps_probe, 0, 0],
                       base + [0, eps_probe, 0], base + [0, 0, eps_probe]])
    W0 = rs.gaussian_weights(straight2, base[None])
    W = rs.WeightSet(W0.bone_ids, np.repeat(W0.indices, 4, axis=0),
                     np.repeat(W0.weights, 4, axis=0))
    out = rs.dqs(probes, W, mats)
    for k in (1, 2, 3):
        d = np.linalg.norm(out[k] - out[0])
        assert d == pytest.approx(eps_probe, rel=1e-9)


def test_dqs_rejects_scaled_transform(straight2):
    pose = sko.Pose(bone_length_scales={0: 1.5})
    mats = rs.bone_matrices(straight2, pose)
    pts = np.array([[2.0, 0, 1.0]])
    W = rs.gaussian_weights(straight2, pts)
    with pytest.raises(errors.NonRigidTransform):
        rs.dqs(pts, W, mats)


def test_sigma_factor_validation(straight2):
    with pytest.raises(errors.OutOfRange):
        rs.gaussian_weights(straight2, np.zeros((1, 3)), sigma_factor=0.0)
