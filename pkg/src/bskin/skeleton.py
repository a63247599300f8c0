"""Sphere-mesh skeleton model: spheres, tangent-cone bones, chains, poses.

The skeleton is immutable after construction. apply_pose returns a new
skeleton; the posed copy carries per-bone rigid transforms so downstream
modules (deformer, reference skinners) can reuse the FK result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import errors
from .geom import (
    Circle3,
    Tolerances,
    most_orthogonal_axis,
    rotation_matrix,
    vcross,
    vdot,
    vnorm,
    vunit,
)


@dataclass(frozen=True)
class SphereNode:
    id: int
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"sphere {self.id}: radius must be positive")


@dataclass(frozen=True)
class Bone:
    id: int
    start: int
    end: int

    def __post_init__(self):
        if self.start == self.end:
            raise ValueError(f"bone {self.id}: start and end spheres coincide")


@dataclass(frozen=True)
class ConeGeometry:
    """Tangent cone of a bone, oriented start -> end."""

    axis_dir: np.ndarray
    half_angle: float          # signed: sin = (r_start - r_end) / length
    apex: np.ndarray | None    # None for a cylinder
    tangency_circle_start: Circle3
    tangency_circle_end: Circle3


@dataclass(frozen=True)
class RigidTransform:
    R: np.ndarray
    t: np.ndarray

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def about_axis(point: np.ndarray, direction: np.ndarray, angle: float) -> "RigidTransform":
        R = rotation_matrix(direction, angle)
        return RigidTransform(R, point - R @ point)

    def apply(self, p: np.ndarray) -> np.ndarray:
        return p @ self.R.T + self.t

    def apply_dir(self, d: np.ndarray) -> np.ndarray:
        return d @ self.R.T

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: (self*other)(p) = self(other(p))."""
        return RigidTransform(self.R @ other.R, self.R @ other.t + self.t)

    def inverse(self) -> "RigidTransform":
        Ri = self.R.T
        return RigidTransform(Ri, -Ri @ self.t)

    def is_identity(self, tol: float = 0.0) -> bool:
        return (np.abs(self.R - np.eye(3)).max() <= tol
                and np.abs(self.t).max() <= tol)


@dataclass(frozen=True)
class Bend:
    joint_sphere_id: int
    axis: np.ndarray
    angle: float
    child_bone_id: int | None = None  # None applies to every child at the joint


@dataclass(frozen=True)
class Pose:
    bends: tuple[Bend, ...] = ()
    twists: dict[int, float] = field(default_factory=dict)
    sphere_scales: dict[int, float] = field(default_factory=dict)
    bone_length_scales: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for s in list(self.sphere_scales.values()) + list(self.bone_length_scales.values()):
            if s <= 0.0:
                raise ValueError("anatomy scales must be strictly positive")
        for b in self.bends:
            n = float(vnorm(b.axis))
            if abs(n - 1.0) > 1e-9:
                raise ValueError(f"bend axis at joint {b.joint_sphere_id} not unit length")

    @property
    def has_anatomy(self) -> bool:
        return bool(self.sphere_scales) or bool(self.bone_length_scales)

    @property
    def is_identity(self) -> bool:
        return (not self.has_anatomy
                and all(b.angle == 0.0 for b in self.bends)
                and all(t == 0.0 for t in self.twists.values()))


def identity_pose() -> Pose:
    return Pose()


@dataclass(frozen=True)
class Registration:
    """Per-point closest bone id, as provided by the upstream registration."""

    bone_ids: np.ndarray

    def validate(self, sk: "Skeleton"):
        known = np.array(sorted(sk.bone_by_id), dtype=np.int64)
        ok = np.isin(self.bone_ids, known)
        if not np.all(ok):
            bad = int(np.argmin(ok))
            raise errors.ParseError(
                f"registration entry {bad} references unknown bone {int(self.bone_ids[bad])}")


class Skeleton:
    """Immutable sphere-mesh tree with per-bone derived cone geometry."""

    def __init__(self, spheres, bones, chains,
                 bone_transforms: dict[int, RigidTransform] | None = None):
        self.spheres = list(spheres)
        self.bones = list(bones)
        self.chains = [list(c) for c in chains]
        self.sphere_by_id = {s.id: s for s in self.spheres}
        self.bone_by_id = {b.id: b for b in self.bones}
        if len(self.sphere_by_id) != len(self.spheres):
            raise ValueError("duplicate sphere ids")
        if len(self.bone_by_id) != len(self.bones):
            raise ValueError("duplicate bone ids")
        self.bone_transforms = bone_transforms or {b.id: RigidTransform.identity()
                                                   for b in self.bones}
        self._orient_chains()
        self._validate_tree()
        self._geom: dict[int, BoneGeom] = {}
        lo = np.min([s.center - s.radius for s in self.spheres], axis=0)
        hi = np.max([s.center + s.radius for s in self.spheres], axis=0)
        self.scene_diagonal = float(vnorm(hi - lo))
        self.tol = Tolerances(self.scene_diagonal)

    # -- structure ---------------------------------------------------------

    def _orient_chains(self):
        """Record per-bone proximal/distal sphere and chain membership.

        Chains are listed root -> leaf; later chains attach (at their first
        bone) to a sphere already placed by an earlier chain.
        """
        self.chain_of_bone: dict[int, int] = {}
        self.prox_sphere: dict[int, int] = {}
        self.dist_sphere: dict[int, int] = {}
        self.prev_bone: dict[int, int | None] = {}
        self.next_bone: dict[int, int | None] = {}
        seen: set[int] = set()
        placed_spheres: set[int] = set()
        for ci, chain in enumerate(self.chains):
            if not chain:
                raise ValueError(f"chain {ci} is empty")
            for bid in chain:
                if bid not in self.bone_by_id:
                    raise ValueError(f"chain {ci} references unknown bone {bid}")
                if bid in seen:
                    raise ValueError(f"bone {bid} appears in more than one chain")
                seen.add(bid)
                self.chain_of_bone[bid] = ci
            first = self.bone_by_id[chain[0]]
            first_ends = {first.start, first.end}
            if len(chain) > 1:
                nxt = self.bone_by_id[chain[1]]
                shared = first_ends & {nxt.start, nxt.end}
                if len(shared) != 1:
                    raise ValueError(f"chain {ci}: bones {first.id},{nxt.id} do not share one sphere")
                prox0 = (first_ends - shared).pop()
            else:
                prox0 = first.start
            # anchor the chain root at an already-placed sphere when possible
            if ci > 0 and prox0 not in placed_spheres:
                other = (first_ends - {prox0}).pop()
                if other in placed_spheres and len(chain) == 1:
                    prox0 = other
            self.prox_sphere[chain[0]] = prox0
            self.dist_sphere[chain[0]] = (first_ends - {prox0}).pop()
            for i, bid in enumerate(chain):
                b = self.bone_by_id[bid]
                ends = {b.start, b.end}
                if i > 0:
                    prev_dist = self.dist_sphere[chain[i - 1]]
                    if prev_dist not in ends:
                        raise ValueError(
                            f"chain {ci}: bone {bid} does not continue from bone {chain[i - 1]}")
                    self.prox_sphere[bid] = prev_dist
                    self.dist_sphere[bid] = (ends - {prev_dist}).pop()
                self.prev_bone[bid] = chain[i - 1] if i > 0 else None
                self.next_bone[bid] = chain[i + 1] if i + 1 < len(chain) else None
                placed_spheres.add(self.prox_sphere[bid])
                placed_spheres.add(self.dist_sphere[bid])
        if seen != set(self.bone_by_id):
            raise ValueError("chains do not cover every bone")

    def _validate_tree(self):
        self.sphere_bones: dict[int, list[int]] = {s.id: [] for s in self.spheres}
        for b in self.bones:
            for sid in (b.start, b.end):
                if sid not in self.sphere_by_id:
                    raise ValueError(f"bone {b.id} references unknown sphere {sid}")
                self.sphere_bones[sid].append(b.id)
        # a tree over spheres: connected, |bones| = |spheres| - 1
        if len(self.bones) != len(self.spheres) - 1:
            raise ValueError("skeleton is not a tree (sphere/bone count mismatch)")
        parent = {s.id: s.id for s in self.spheres}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for b in self.bones:
            ra, rb = find(b.start), find(b.end)
            if ra == rb:
                raise ValueError("skeleton contains a cycle")
            parent[ra] = rb
        self.junctions = sorted(sid for sid, bs in self.sphere_bones.items() if len(bs) >= 3)

    # -- geometry ----------------------------------------------------------

    def geom(self, bone_id: int) -> "BoneGeom":
        g = self._geom.get(bone_id)
        if g is None:
            g = BoneGeom.build(self, bone_id)
            self._geom[bone_id] = g
        return g

    def cone(self, bone_id: int) -> ConeGeometry:
        g = self.geom(bone_id)
        return ConeGeometry(
            axis_dir=g.u,
            half_angle=math.asin(max(-1.0, min(1.0, g.sin_a))),
            apex=g.apex,
            tangency_circle_start=Circle3(g.tan_center_prox, g.tan_radius_prox, g.u),
            tangency_circle_end=Circle3(g.tan_center_dist, g.tan_radius_dist, g.u),
        )

    def chain_end_kind(self, bone_id: int, distal: bool) -> str:
        """'joint', 'junction', or 'free' for the given end of the bone."""
        nb = self.next_bone[bone_id] if distal else self.prev_bone[bone_id]
        sid = self.dist_sphere[bone_id] if distal else self.prox_sphere[bone_id]
        if len(self.sphere_bones[sid]) >= 3:
            return "junction"
        if nb is not None or len(self.sphere_bones[sid]) >= 2:
            return "joint"
        return "free"

    def neighbor_across(self, bone_id: int, distal: bool) -> int | None:
        """Chain neighbor across the given end (junctions resolved elsewhere)."""
        nb = self.next_bone[bone_id] if distal else self.prev_bone[bone_id]
        if nb is not None:
            return nb
        sid = self.dist_sphere[bone_id] if distal else self.prox_sphere[bone_id]
        others = [b for b in self.sphere_bones[sid] if b != bone_id]
        return others[0] if len(others) == 1 else None


@dataclass(frozen=True)
class BoneGeom:
    """Derived per-bone geometry, oriented proximal -> distal."""

    bone_id: int
    prox_center: np.ndarray
    dist_center: np.ndarray
    r_prox: float
    r_dist: float
    u: np.ndarray
    length: float
    sin_a: float
    cos_a: float
    apex: np.ndarray | None
    e1: np.ndarray
    e2: np.ndarray
    tan_center_prox: np.ndarray
    tan_radius_prox: float
    tan_center_dist: np.ndarray
    tan_radius_dist: float

    @staticmethod
    def build(sk: Skeleton, bone_id: int) -> "BoneGeom":
        b = sk.bone_by_id[bone_id]
        sp = sk.sphere_by_id[sk.prox_sphere[bone_id]]
        sd = sk.sphere_by_id[sk.dist_sphere[bone_id]]
        T = sk.bone_transforms[bone_id]
        return derive_bone_geom(bone_id, sp.center, sp.radius, sd.center, sd.radius,
                                sk.tol.cylinder, frame_transform=T)

    @property
    def generatrix_length(self) -> float:
        return float(vnorm(self.tan_center_dist + self.tan_radius_dist * self.e1
                           - (self.tan_center_prox + self.tan_radius_prox * self.e1)))

    def azimuth_of(self, p: np.ndarray) -> np.ndarray:
        v = p - self.prox_center
        return np.arctan2(vdot(v, self.e2), vdot(v, self.e1))

    def radial_distance(self, p: np.ndarray) -> np.ndarray:
        v = p - self.prox_center
        z = vdot(v, self.u)
        return vnorm(v - z[..., None] * self.u) if np.ndim(z) else vnorm(v - z * self.u)

    def generatrix(self, phi) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints (prox, dist) of the cone generatrix at azimuth phi."""
        phi = np.asarray(phi, dtype=float)
        rad = np.cos(phi)[..., None] * self.e1 + np.sin(phi)[..., None] * self.e2
        g0 = self.tan_center_prox + self.tan_radius_prox * rad
        g1 = self.tan_center_dist + self.tan_radius_dist * rad
        if phi.ndim == 0:
            return g0[0] if g0.ndim > 1 else g0, g1[0] if g1.ndim > 1 else g1
        return g0, g1

    def signed_surface_distance(self, p: np.ndarray) -> np.ndarray:
        """Signed distance to the bone solid surface (union of spheres).

        Exact for the swept-sphere volume: min over stations s of
        |p - C(s)| - r(s); negative inside.
        """
        p = np.atleast_2d(np.asarray(p, dtype=float))
        w = p - self.prox_center
        z = vdot(w, self.u)
        rho = vnorm(w - z[:, None] * self.u)
        kappa = -self.sin_a  # d(radius)/d(arclength) along the axis
        denom = math.sqrt(max(1e-300, 1.0 - kappa * kappa))
        q = kappa * rho / denom
        s = np.clip((z + q) / self.length, 0.0, 1.0)
        dz = z - s * self.length
        rad = self.r_prox + s * (self.r_dist - self.r_prox)
        return np.sqrt(dz * dz + rho * rho) - rad


def derive_bone_geom(bone_id, c_prox, r_prox, c_dist, r_dist, eps_cylinder,
                     frame_transform: RigidTransform | None = None) -> BoneGeom:
    axis = c_dist - c_prox
    length = float(vnorm(axis))
    if length <= abs(r_prox - r_dist) + eps_cylinder:
        raise errors.NestedSpheres(
            f"bone {bone_id}: |C1C2|={length:.6g} <= |r1-r2|={abs(r_prox - r_dist):.6g}")
    u = axis / length
    dr = r_prox - r_dist
    if abs(dr) <= eps_cylinder:
        sin_a, apex = 0.0, None
    else:
        sin_a = dr / length
        apex = c_prox + u * (length * r_prox / dr)
    cos_a = math.sqrt(max(0.0, 1.0 - sin_a * sin_a))
    if frame_transform is None or frame_transform.is_identity():
        seed = most_orthogonal_axis(u)
        e1 = vunit(seed - vdot(seed, u) * u)
    else:
        # carried frame: rotate the rest-direction frame rigidly with the bone
        u_rest = frame_transform.R.T @ u
        seed = most_orthogonal_axis(u_rest)
        e1 = frame_transform.apply_dir(vunit(seed - vdot(seed, u_rest) * u_rest))
    e2 = vcross(u, e1)
    return BoneGeom(
        bone_id=bone_id,
        prox_center=np.asarray(c_prox, dtype=float),
        dist_center=np.asarray(c_dist, dtype=float),
        r_prox=float(r_prox), r_dist=float(r_dist),
        u=u, length=length, sin_a=float(sin_a), cos_a=float(cos_a), apex=apex,
        e1=e1, e2=e2,
        tan_center_prox=np.asarray(c_prox, dtype=float) + r_prox * sin_a * u,
        tan_radius_prox=r_prox * cos_a,
        tan_center_dist=np.asarray(c_dist, dtype=float) + r_dist * sin_a * u,
        tan_radius_dist=r_dist * cos_a,
    )


# -- derived-geometry operations ---------------------------------------------

def derive_cone(s1: SphereNode, s2: SphereNode, eps_cylinder: float = 0.0) -> ConeGeometry:
    """Tangent cone of the bone spanning s1 -> s2."""
    g = derive_bone_geom(-1, s1.center, s1.radius, s2.center, s2.radius,
                         max(eps_cylinder, 1e-12 * float(vnorm(s2.center - s1.center))))
    return ConeGeometry(
        axis_dir=g.u,
        half_angle=math.asin(max(-1.0, min(1.0, g.sin_a))),
        apex=g.apex,
        tangency_circle_start=Circle3(g.tan_center_prox, g.tan_radius_prox, g.u),
        tangency_circle_end=Circle3(g.tan_center_dist, g.tan_radius_dist, g.u),
    )


def radius_at(sk: Skeleton, bone_id: int, rho: float) -> float:
    """Interpolated sphere radius at normalized station rho along the bone."""
    if not 0.0 <= rho <= 1.0:
        raise errors.OutOfRange(f"rho={rho} outside [0, 1]")
    g = sk.geom(bone_id)
    return (1.0 - rho) * g.r_prox + rho * g.r_dist


def anatomy_scaled(sk: Skeleton, pose: Pose) -> Skeleton:
    """Rest skeleton with anatomy scales applied (radii, axial lengths)."""
    for sid in pose.sphere_scales:
        if sid not in sk.sphere_by_id:
            raise errors.InvalidJointRef(f"anatomy references unknown sphere {sid}")
    for bid in pose.bone_length_scales:
        if bid not in sk.bone_by_id:
            raise errors.InvalidJointRef(f"anatomy references unknown bone {bid}")
    radii = {s.id: s.radius * pose.sphere_scales.get(s.id, 1.0) for s in sk.spheres}
    if not pose.bone_length_scales:
        spheres = [replace(s, radius=radii[s.id]) for s in sk.spheres]
        return Skeleton(spheres, sk.bones, sk.chains)
    # length scaling moves each distal sphere along the (rest) bone axis; the
    # shift propagates to the whole subtree through the traversal order
    order = _bone_traversal_order(sk)
    centers: dict[int, np.ndarray] = {sk.prox_sphere[order[0]]:
                                      sk.sphere_by_id[sk.prox_sphere[order[0]]].center.copy()}
    for bid in order:
        g = sk.geom(bid)
        ps, ds = sk.prox_sphere[bid], sk.dist_sphere[bid]
        scale = pose.bone_length_scales.get(bid, 1.0)
        centers[ds] = centers[ps] + g.u * (g.length * scale)
    spheres = [SphereNode(s.id, centers[s.id], radii[s.id]) for s in sk.spheres]
    return Skeleton(spheres, sk.bones, sk.chains)


def _bone_traversal_order(sk: Skeleton) -> list[int]:
    """Bones in dependency order (each bone after the bone owning its proximal sphere)."""
    order: list[int] = []
    placed_spheres: set[int] = set()
    pending = [list(c) for c in sk.chains]
    if pending:
        placed_spheres.add(sk.prox_sphere[pending[0][0]])
    progress = True
    while any(pending) and progress:
        progress = False
        for chain in pending:
            if chain and sk.prox_sphere[chain[0]] in placed_spheres:
                while chain:
                    bid = chain.pop(0)
                    order.append(bid)
                    placed_spheres.add(sk.prox_sphere[bid])
                    placed_spheres.add(sk.dist_sphere[bid])
                progress = True
    if any(pending):
        raise ValueError("chains are not connected to the root in listed order")
    return order


def apply_pose(sk: Skeleton, pose: Pose, include_twists: bool = True) -> Skeleton:
    """FK: anatomy scales, then sequential bend/twist rotations root -> leaf.

    The returned skeleton's bone_transforms map the anatomy-scaled rest pose
    to the posed pose (bone's own twist excluded: it deforms the bone's
    baseline rather than moving its cone).
    """
    for b in pose.bends:
        if b.joint_sphere_id not in sk.sphere_by_id:
            raise errors.InvalidJointRef(f"bend references unknown sphere {b.joint_sphere_id}")
        if b.child_bone_id is not None and b.child_bone_id not in sk.bone_by_id:
            raise errors.InvalidJointRef(f"bend references unknown bone {b.child_bone_id}")
    for bid in pose.twists:
        if bid not in sk.bone_by_id:
            raise errors.InvalidJointRef(f"twist references unknown bone {bid}")

    rest = anatomy_scaled(sk, pose) if pose.has_anatomy else sk
    order = _bone_traversal_order(rest)
    owner_after: dict[int, RigidTransform] = {}  # sphere id -> transform downstream of it
    transforms: dict[int, RigidTransform] = {}
    bends_at: dict[int, list[Bend]] = {}
    for b in pose.bends:
        bends_at.setdefault(b.joint_sphere_id, []).append(b)

    root_sphere = rest.prox_sphere[order[0]]
    owner_after[root_sphere] = RigidTransform.identity()
    for bid in order:
        ps, ds = rest.prox_sphere[bid], rest.dist_sphere[bid]
        T_pre = owner_after[ps]
        g = rest.geom(bid)
        T = T_pre
        for bend in bends_at.get(ps, ()):  # bend entering this bone at its proximal joint
            if bend.child_bone_id is not None and bend.child_bone_id != bid:
                continue
            if bend.angle == 0.0:
                continue
            center = T_pre.apply(rest.sphere_by_id[ps].center)
            axis = vunit(T_pre.apply_dir(bend.axis))
            T = RigidTransform.about_axis(center, axis, bend.angle).compose(T)
        transforms[bid] = T
        tau = pose.twists.get(bid, 0.0) if include_twists else 0.0
        T_after = T
        if tau != 0.0:
            axis_pt = T.apply(g.prox_center)
            axis_dir = vunit(T.apply_dir(g.u))
            T_after = RigidTransform.about_axis(axis_pt, axis_dir, tau).compose(T)
        owner_after[ds] = T_after

    # pose sphere centers using the transform of the first bone touching them
    center_T: dict[int, RigidTransform] = {root_sphere: RigidTransform.identity()}
    for bid in order:
        ds = rest.dist_sphere[bid]
        if ds not in center_T:
            center_T[ds] = transforms[bid]
        ps = rest.prox_sphere[bid]
        if ps not in center_T:
            center_T[ps] = transforms[bid]
    spheres = [SphereNode(s.id, center_T[s.id].apply(s.center), s.radius) for s in rest.spheres]
    return Skeleton(spheres, rest.bones, rest.chains, bone_transforms=transforms)


# -- file I/O ----------------------------------------------------------------

def skeleton_to_dict(sk: Skeleton, registration: Registration | None = None) -> dict:
    d = {
        "version": 1,
        "spheres": [{"id": s.id, "center": [float(x) for x in s.center],
                     "radius": float(s.radius)} for s in sk.spheres],
        "bones": [{"id": b.id, "start": b.start, "end": b.end} for b in sk.bones],
        "chains": [list(c) for c in sk.chains],
    }
    if registration is not None:
        d["registration"] = [int(x) for x in registration.bone_ids]
    return d


def skeleton_from_dict(d: dict) -> tuple[Skeleton, Registration | None]:
    try:
        spheres = [SphereNode(int(s["id"]), np.asarray(s["center"], dtype=float),
                              float(s["radius"])) for s in d["spheres"]]
        bones = [Bone(int(b["id"]), int(b["start"]), int(b["end"])) for b in d["bones"]]
        chains = [[int(x) for x in c] for c in d["chains"]]
    except (KeyError, TypeError, ValueError) as e:
        raise errors.ParseError(f"malformed skeleton JSON: {e}") from e
    sk = Skeleton(spheres, bones, chains)
    reg = None
    if "registration" in d and d["registration"] is not None:
        reg = Registration(np.asarray(d["registration"], dtype=np.int64))
        reg.validate(sk)
    return sk, reg


def load_skeleton(path) -> tuple[Skeleton, Registration | None]:
    with open(path, "r", encoding="utf-8") as f:
        return skeleton_from_dict(json.load(f))


def save_skeleton(sk: Skeleton, path, registration: Registration | None = None):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(skeleton_to_dict(sk, registration), f, indent=1)


def pose_to_dict(pose: Pose) -> dict:
    return {
        "version": 1,
        "bends": [
            {"joint_sphere_id": b.joint_sphere_id, "axis": [float(x) for x in b.axis],
             "angle_rad": float(b.angle),
             **({"child_bone_id": b.child_bone_id} if b.child_bone_id is not None else {})}
            for b in pose.bends
        ],
        "twists": [{"bone_id": k, "angle_rad": float(v)} for k, v in sorted(pose.twists.items())],
        "anatomy": {
            "sphere_scales": {str(k): float(v) for k, v in sorted(pose.sphere_scales.items())},
            "bone_length_scales": {str(k): float(v)
                                   for k, v in sorted(pose.bone_length_scales.items())},
        },
    }


def pose_from_dict(d: dict) -> Pose:
    try:
        bends = tuple(
            Bend(joint_sphere_id=int(b["joint_sphere_id"]),
                 axis=vunit(np.asarray(b["axis"], dtype=float)),
                 angle=float(b["angle_rad"]),
                 child_bone_id=(int(b["child_bone_id"]) if "child_bone_id" in b else None))
            for b in d.get("bends", []))
        twists = {int(t["bone_id"]): float(t["angle_rad"]) for t in d.get("twists", [])}
        anatomy = d.get("anatomy", {}) or {}
        ss = {int(k): float(v) for k, v in (anatomy.get("sphere_scales") or {}).items()}
        ls = {int(k): float(v) for k, v in (anatomy.get("bone_length_scales") or {}).items()}
    except (KeyError, TypeError, ValueError) as e:
        raise errors.ParseError(f"malformed pose JSON: {e}") from e
    return Pose(bends=bends, twists=twists, sphere_scales=ss, bone_length_scales=ls)


def load_pose(path) -> Pose:
    with open(path, "r", encoding="utf-8") as f:
        return pose_from_dict(json.load(f))


def save_pose(pose: Pose, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(pose_to_dict(pose), f, indent=1)
