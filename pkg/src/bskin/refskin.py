"""Reference skinners: linear blend skinning and dual quaternion skinning over
the same sphere-mesh skeleton, with Gaussian surface-distance weights.

These exist for side-by-side artefact comparison (candy wrapper, elbow
collapse); they are not part of the baseline pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .geom import vdot, vnorm
from .skeleton import Pose, Skeleton, anatomy_scaled, apply_pose

MAX_INFLUENCES = 4


@dataclass
class WeightSet:
    """Per point: up to four (bone index into `bone_ids`, weight) influences."""

    bone_ids: np.ndarray   # (k,) bone id per column index
    indices: np.ndarray    # (n, 4) column indices
    weights: np.ndarray    # (n, 4) nonnegative, rows sum to 1


def gaussian_weights(sk: Skeleton, points: np.ndarray,
                     sigma_factor: float = 1.0) -> WeightSet:
    """Gaussian-of-surface-distance weights, truncated to the top 4 bones.

    sigma per bone is sigma_factor times the bone's mean sphere radius; the
    distance is the Euclidean distance to the bone's swept-sphere surface
    (clamped at zero inside).
    """
    if sigma_factor <= 0.0:
        raise errors.OutOfRange("sigma_factor must be positive")
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    bone_ids = np.array(sorted(sk.bone_by_id), dtype=np.int64)
    raw = np.empty((len(points), len(bone_ids)))
    for j, bid in enumerate(bone_ids):
        g = sk.geom(int(bid))
        d = np.maximum(0.0, g.signed_surface_distance(points))
        sigma = sigma_factor * 0.5 * (g.r_prox + g.r_dist)
        raw[:, j] = np.exp(-d * d / (2.0 * sigma * sigma))
    k = min(MAX_INFLUENCES, raw.shape[1])
    idx = np.argpartition(-raw, k - 1, axis=1)[:, :k]
    w = np.take_along_axis(raw, idx, axis=1)
    if k < MAX_INFLUENCES:
        idx = np.pad(idx, ((0, 0), (0, MAX_INFLUENCES - k)))
        w = np.pad(w, ((0, 0), (0, MAX_INFLUENCES - k)))
    tot = np.sum(w, axis=1, keepdims=True)
    tot = np.where(tot <= 0.0, 1.0, tot)
    return WeightSet(bone_ids=bone_ids, indices=idx, weights=w / tot)


def bone_matrices(sk: Skeleton, pose: Pose) -> dict[int, np.ndarray]:
    """Per-bone 4x4 transforms rest -> posed (anatomy folded in as an affine
    axial stretch, which makes them non-rigid when length scales are used)."""
    scaled = anatomy_scaled(sk, pose) if pose.has_anatomy else sk
    posed = apply_pose(sk, pose)
    out = {}
    for bid in sk.bone_by_id:
        g0 = sk.geom(bid)
        gs = scaled.geom(bid)
        T = posed.bone_transforms[bid]
        A = np.eye(4)
        s_ax = gs.length / g0.length
        u = g0.u
        M3 = np.eye(3) + (s_ax - 1.0) * np.outer(u, u)
        A[:3, :3] = M3
        A[:3, 3] = gs.prox_center - M3 @ g0.prox_center
        R = np.eye(4)
        R[:3, :3] = T.R
        R[:3, 3] = T.t
        out[bid] = R @ A
    return out


def lbs(points: np.ndarray, weights: WeightSet,
        mats: dict[int, np.ndarray]) -> np.ndarray:
    """Linear blend skinning: p' = sum_i w_i M_i p."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    out = np.zeros_like(points)
    # accumulate slot by slot, grouping rows by the slot's bone: k*4 passes of
    # plain matrix application instead of gathering per-point 4x4 stacks
    for slot in range(weights.indices.shape[1]):
        cols = weights.indices[:, slot]
        w = weights.weights[:, slot]
        for col in np.unique(cols):
            rows = np.where((cols == col) & (w > 0.0))[0]
            if not len(rows):
                continue
            M = mats[int(weights.bone_ids[col])]
            out[rows] += w[rows, None] * (points[rows] @ M[:3, :3].T + M[:3, 3])
    return out


def _mat_to_quat(R: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z)."""
    t = np.trace(R)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        return np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                         (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    i = int(np.argmax(np.diag(R)))
    if i == 0:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
        return np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s,
                         (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    if i == 1:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2
        return np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s,
                         0.25 * s, (R[1, 2] + R[2, 1]) / s])
    s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2
    return np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                     (R[1, 2] + R[2, 1]) / s, 0.25 * s])


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def _mat_to_dualquat(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    R = M[:3, :3]
    if np.abs(R @ R.T - np.eye(3)).max() > tol or np.linalg.det(R) < 0:
        raise errors.NonRigidTransform("dual quaternion skinning needs rigid transforms")
    q = _mat_to_quat(R)
    t = M[:3, 3]
    qt = _quat_mul(np.array([0.0, *t]), q) * 0.5
    return np.concatenate([q, qt])


def dqs(points: np.ndarray, weights: WeightSet,
        mats: dict[int, np.ndarray]) -> np.ndarray:
    """Dual quaternion skinning with hemisphere alignment to the pivot bone."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    dq = np.stack([_mat_to_dualquat(mats[int(b)]) for b in weights.bone_ids])
    per = dq[weights.indices]                      # (n, 4, 8)
    pivot_col = np.argmax(weights.weights, axis=1)
    pivot = per[np.arange(len(points)), pivot_col, :4]
    sign = np.sign(np.einsum("nik,nk->ni", per[:, :, :4], pivot))
    sign = np.where(sign == 0.0, 1.0, sign)
    blended = np.einsum("ni,nik->nk", weights.weights * sign, per)
    q = blended[:, :4]
    qe = blended[:, 4:]
    norm = np.linalg.norm(q, axis=1)
    norm = np.where(norm <= 0.0, 1.0, norm)
    q = q / norm[:, None]
    qe = qe / norm[:, None]
    w = q[:, 0]
    # rotate points by q
    uv = 2.0 * np.cross(q[:, 1:], points)
    rot = points + w[:, None] * uv + np.cross(q[:, 1:], uv)
    # translation: vector part of 2 * qe * conj(q)
    conj = q * np.array([1.0, -1.0, -1.0, -1.0])
    tq = np.empty((len(points), 4))
    a, b = qe, conj
    tq[:, 0] = a[:, 0] * b[:, 0] - a[:, 1] * b[:, 1] - a[:, 2] * b[:, 2] - a[:, 3] * b[:, 3]
    tq[:, 1] = a[:, 0] * b[:, 1] + a[:, 1] * b[:, 0] + a[:, 2] * b[:, 3] - a[:, 3] * b[:, 2]
    tq[:, 2] = a[:, 0] * b[:, 2] - a[:, 1] * b[:, 3] + a[:, 2] * b[:, 0] + a[:, 3] * b[:, 1]
    tq[:, 3] = a[:, 0] * b[:, 3] + a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1] + a[:, 3] * b[:, 0]
    trans = 2.0 * tq[:, 1:]
    return rot + trans
