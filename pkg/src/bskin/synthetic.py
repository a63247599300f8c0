"""Synthetic scenes: chain skeletons and clouds sampled on or above the
sphere-mesh surface. Used by the demo CLI paths and the test suite."""

from __future__ import annotations

import math

import numpy as np

from .geom import vunit
from .skeleton import Bone, Registration, Skeleton, SphereNode


def chain_skeleton(n_bones: int = 2, length: float = 4.0,
                   radii=None, directions=None) -> Skeleton:
    """Chain of bones; radii per sphere (scalar ok), optional per-bone unit
    directions (default +x)."""
    if radii is None:
        radii = 1.0
    if np.isscalar(radii):
        radii = [float(radii)] * (n_bones + 1)
    if directions is None:
        directions = [np.array([1.0, 0.0, 0.0])] * n_bones
    centers = [np.zeros(3)]
    for i in range(n_bones):
        centers.append(centers[-1] + length * vunit(np.asarray(directions[i], float)))
    spheres = [SphereNode(i, centers[i], radii[i]) for i in range(n_bones + 1)]
    bones = [Bone(i, i, i + 1) for i in range(n_bones)]
    return Skeleton(spheres, bones, [list(range(n_bones))])


def bent_chain(angles_deg, length: float = 4.0, radii=None) -> Skeleton:
    """Chain whose rest pose bends by the given angle (degrees, about +z) at
    each interior joint."""
    dirs = []
    heading = 0.0
    for a in [0.0] + list(angles_deg):
        heading += math.radians(a)
        dirs.append(np.array([math.cos(heading), math.sin(heading), 0.0]))
    return chain_skeleton(len(dirs), length, radii, dirs)


def y_skeleton(length: float = 4.0, radius: float = 1.0) -> Skeleton:
    """Three chains joined at one junction sphere."""
    c = np.zeros(3)
    dirs = [np.array([1.0, 0, 0]), np.array([-0.5, 0.866025403784, 0]),
            np.array([-0.5, -0.866025403784, 0])]
    spheres = [SphereNode(0, c, radius)]
    bones = []
    for k, d in enumerate(dirs):
        spheres.append(SphereNode(k + 1, c + length * d, radius * 0.8))
        bones.append(Bone(k, 0, k + 1))
    # chains listed root -> leaf; all three attach at sphere 0
    return Skeleton(spheres, bones, [[0], [1], [2]])


def surface_samples(sk: Skeleton, stations: int = 24, azimuths: int = 48,
                    caps: bool = True):
    """Points exactly on the sphere-mesh surface with their outward normals.

    Covers each bone's cone band (cap fans added at free extremities).
    Returns (points, normals, bone_ids).
    """
    pts, nrms, bids = [], [], []
    for bid in sorted(sk.bone_by_id):
        g = sk.geom(bid)
        phis = np.linspace(0.0, 2.0 * math.pi, azimuths, endpoint=False)
        ss = np.linspace(0.02, 0.98, stations)
        rad = np.cos(phis)[:, None] * g.e1 + np.sin(phis)[:, None] * g.e2
        normal = rad * g.cos_a + g.u * g.sin_a          # cone outward normal
        g0 = g.tan_center_prox + g.tan_radius_prox * rad
        g1 = g.tan_center_dist + g.tan_radius_dist * rad
        for s in ss:
            p = g0 * (1 - s) + g1 * s
            pts.append(p)
            nrms.append(normal)
            bids.append(np.full(azimuths, bid))
        for distal in (False, True):
            if not caps or sk.chain_end_kind(bid, distal) != "free":
                continue
            C = g.dist_center if distal else g.prox_center
            r = g.r_dist if distal else g.r_prox
            pole = g.u if distal else -g.u
            lat_full = math.acos(max(-1.0, min(1.0, g.sin_a if distal else -g.sin_a)))
            for frac in np.linspace(0.1, 0.9, max(3, stations // 4)):
                ang = lat_full * frac
                ring = (math.cos(ang) * pole + math.sin(ang)
                        * (np.cos(phis)[:, None] * g.e1 + np.sin(phis)[:, None] * g.e2))
                pts.append(C + r * ring)
                nrms.append(ring)
                bids.append(np.full(azimuths, bid))
    return np.vstack(pts), np.vstack(nrms), np.concatenate(bids)


def offset_cloud(sk: Skeleton, h: float, stations: int = 24, azimuths: int = 48,
                 caps: bool = True):
    """Constant-offset cloud at height h above the surface, plus registration."""
    p, n, b = surface_samples(sk, stations, azimuths, caps)
    return p + h * n, Registration(b.astype(np.int64))


def stripe_cloud(sk: Skeleton, n_points: int, h_base: float = 0.05,
                 h_amp: float = 0.1, bands: int = 12, seed: int = 0):
    """Stripy detail cloud: banded heights over the surface (the classic
    synthetic skinning test surface), deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    stations = max(8, int(math.sqrt(n_points / max(1, len(sk.bones)) / 2)))
    azim = max(8, stations * 2)
    p, n, b = surface_samples(sk, stations, azim)
    while len(p) < n_points:
        p2, n2, b2 = surface_samples(sk, stations + 1, azim + 1)
        p = np.vstack([p, p2])
        n = np.vstack([n, n2])
        b = np.concatenate([b, b2])
        stations += 1
        azim += 1
    idx = rng.permutation(len(p))[:n_points]
    p, n, b = p[idx], n[idx], b[idx]
    phase = np.arctan2(p[:, 2], p[:, 1])
    h = h_base + h_amp * (np.sin(bands * phase) > 0)
    return p + h[:, None] * n, Registration(b.astype(np.int64))


def nearest_bone_registration(sk: Skeleton, points: np.ndarray) -> Registration:
    """Closest-bone registration by surface distance (synthetic stand-in for
    an upstream registration tool)."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    ids = sorted(sk.bone_by_id)
    d = np.stack([np.abs(sk.geom(b).signed_surface_distance(points)) for b in ids])
    return Registration(np.asarray(ids, dtype=np.int64)[np.argmin(d, axis=0)])
