"""Baseline deformation under pose change: twist/bend angle ramps, pivot-circle
target resolution, curve truncation and re-arcing, and the deformed sections
that the pipeline redistributes base points over.

All real work is vectorized over the rows of one bone group; rows are
(azimuth, section, t) tuples coming from the encoded set. The scalar
operations (twist_profile, resolve_bend_targets, deform_segment, reconnect,
deform_portion) wrap the same kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .baseline import (
    SEC_ARC_DIST,
    SEC_ARC_PROX,
    SEC_CAP_DIST,
    SEC_CAP_PROX,
    SEC_SEG,
    JointContext,
    JointSide,
    Sheaf,
    _joint_side,
    _separator_plane,
    angular_distance_to_cone,
    build_sheaf,
    joint_cut,
    joint_for,
    junction_cell_of,
    junction_cell_range,
    junction_context,
)
from .geom import (
    Circle3,
    Plane,
    plane_frame,
    rotate_points,
    vcross,
    vdot,
    vnorm,
    vunit,
    wrap_angle,
)
from .skeleton import (
    BoneGeom,
    Pose,
    RigidTransform,
    Skeleton,
    anatomy_scaled,
    apply_pose,
    derive_bone_geom,
)

SEG_SAMPLES = 64  # per-segment minimum; scaled by length / (0.01 * diagonal)


def profile_value(d, kind: str):
    """Angle interpolation profile: cubic Hermite (zero end slopes) or linear."""
    if kind == "linear":
        return d
    if kind == "cubic":
        return d * d * (3.0 - 2.0 * d)
    raise errors.OutOfRange(f"unknown profile {kind!r}")


def twist_profile(d: float, tau_max: float) -> float:
    """Cubic twist ramp: -2*tau*d^3 + 3*tau*d^2."""
    if not 0.0 <= d <= 1.0:
        raise errors.OutOfRange(f"d={d} outside [0, 1]")
    return tau_max * profile_value(d, "cubic")


# ---------------------------------------------------------------------------
# posed geometry plumbing

def posed_geom(g: BoneGeom, T: RigidTransform) -> BoneGeom:
    # transform all derived fields rigidly; avoids re-deriving and keeps the
    # cylinder/cone classification identical to the rest skeleton
    return BoneGeom(
        bone_id=g.bone_id,
        prox_center=T.apply(g.prox_center), dist_center=T.apply(g.dist_center),
        r_prox=g.r_prox, r_dist=g.r_dist,
        u=T.apply_dir(g.u), length=g.length, sin_a=g.sin_a, cos_a=g.cos_a,
        apex=T.apply(g.apex) if g.apex is not None else None,
        e1=T.apply_dir(g.e1), e2=T.apply_dir(g.e2),
        tan_center_prox=T.apply(g.tan_center_prox), tan_radius_prox=g.tan_radius_prox,
        tan_center_dist=T.apply(g.tan_center_dist), tan_radius_dist=g.tan_radius_dist,
    )


def make_joint_context(sphere_id: int, center: np.ndarray, radius: float,
                       geom_a: BoneGeom, a_distal: bool,
                       geom_b: BoneGeom, b_distal: bool, eps: float) -> JointContext:
    """JointContext from explicit (posed) bone geometries."""
    prox = _joint_side(geom_a, joint_is_distal=a_distal)
    dist = _joint_side(geom_b, joint_is_distal=b_distal)
    if prox.apex is not None and dist.apex is not None:
        d = dist.apex - prox.apex
        ln = float(vnorm(d))
        sheaf = (Sheaf("line", prox.apex.copy(), d / ln) if ln > eps
                 else Sheaf("line", prox.apex.copy(), prox.axis_u.copy()))
    elif prox.apex is not None:
        sheaf = Sheaf("line", prox.apex.copy(), dist.axis_u.copy())
    elif dist.apex is not None:
        sheaf = Sheaf("line", dist.apex.copy(), prox.axis_u.copy())
    else:
        nrm = vcross(prox.axis_u, dist.axis_u)
        ln = float(vnorm(nrm))
        sheaf = (Sheaf("parallel", center.copy(), nrm / ln) if ln > eps
                 else Sheaf("axial", center.copy(), prox.axis_u.copy()))
    separator = _separator_plane(center, radius, prox, dist, eps)
    dsep = float(separator.signed_distance(center))
    if abs(dsep) < radius:
        pc = center - dsep * separator.unit_normal
        pr = math.sqrt(radius * radius - dsep * dsep)
        pivot = Circle3(pc, pr, separator.unit_normal)
    else:
        pivot = Circle3(center.copy(), radius, separator.unit_normal)
    e1, e2 = plane_frame(pivot.normal)
    return JointContext(sphere_id=sphere_id, center=center, radius=radius,
                        prox=prox, dist=dist, sheaf=sheaf, separator=separator,
                        pivot=pivot, pivot_e1=e1, pivot_e2=e2)


@dataclass
class PoseContext:
    """Everything a skinning job needs about one target pose."""

    sk_rest: Skeleton
    sk_scaled: Skeleton
    sk_posed: Skeleton
    pose: Pose

    @staticmethod
    def build(sk: Skeleton, pose: Pose) -> "PoseContext":
        scaled = anatomy_scaled(sk, pose) if pose.has_anatomy else sk
        posed = apply_pose(sk, pose)
        return PoseContext(sk_rest=sk, sk_scaled=scaled, sk_posed=posed, pose=pose)

    def transform(self, bone_id: int) -> RigidTransform:
        return self.sk_posed.bone_transforms[bone_id]

    def twist(self, bone_id: int) -> float:
        return self.pose.twists.get(bone_id, 0.0)


@dataclass
class JointSetup:
    """One joint of a bone group: scaled-rest context plus detwisted posed
    context and the twist map to true space."""

    exists: bool
    is_junction: bool = False
    ctx0: JointContext | None = None        # scaled rest
    ctx_detw: JointContext | None = None    # posed, distal side detwisted
    ctx_true: JointContext | None = None    # posed, true (for fresh fields)
    mate: int = -1
    base_is_prox: bool = True
    tau_prox: float = 0.0                   # twist of the joint's prox-side bone
    twist_rot: RigidTransform | None = None  # detwisted -> true space
    rigid: bool = False                     # relative pose unchanged at this joint


def _relative_identity(Ta: RigidTransform, Tb: RigidTransform, scale: float) -> bool:
    rel = Ta.inverse().compose(Tb)
    return rel.is_identity(1e-13 * max(1.0, scale))


def joint_setup(pc: PoseContext, bone_id: int, distal: bool, mate: int | None) -> JointSetup:
    sk0 = pc.sk_scaled
    sid = sk0.dist_sphere[bone_id] if distal else sk0.prox_sphere[bone_id]
    kind = sk0.chain_end_kind(bone_id, distal)
    if kind == "free":
        return JointSetup(exists=False)
    if mate is None:
        mate = sk0.neighbor_across(bone_id, distal)
        if mate is None:
            return JointSetup(exists=False)
    # orientation: which side is 'prox' of the pair (the bone whose twist
    # transports across this joint)
    if distal:
        a_bone, b_bone = bone_id, mate
    else:
        a_bone, b_bone = mate, bone_id
    a_distal = sk0.dist_sphere[a_bone] == sid
    b_distal = sk0.dist_sphere[b_bone] == sid
    ga0, gb0 = sk0.geom(a_bone), sk0.geom(b_bone)
    center0 = sk0.sphere_by_id[sid].center
    radius = sk0.sphere_by_id[sid].radius
    ctx0 = make_joint_context(sid, center0, radius, ga0, a_distal, gb0, b_distal,
                              sk0.tol.parallel)
    Ta, Tb = pc.transform(a_bone), pc.transform(b_bone)
    tau = pc.twist(a_bone)
    ga_p = posed_geom(ga0, Ta)
    gb_p = posed_geom(gb0, Tb)
    center_p = Ta.apply(center0)
    axis_pt = ga_p.prox_center
    axis_dir = ga_p.u
    detw = RigidTransform.about_axis(axis_pt, axis_dir, -tau) if tau != 0.0 \
        else RigidTransform.identity()
    gb_detw = posed_geom(gb0, detw.compose(Tb))
    ctx_detw = make_joint_context(sid, center_p, radius, ga_p, a_distal,
                                  gb_detw, b_distal, sk0.tol.parallel)
    ctx_true = make_joint_context(sid, center_p, radius, ga_p, a_distal,
                                  gb_p, b_distal, sk0.tol.parallel)
    rigid = tau == 0.0 and _relative_identity(Ta, Tb, sk0.scene_diagonal)
    return JointSetup(exists=True, is_junction=sid in sk0.junctions,
                      ctx0=ctx0, ctx_detw=ctx_detw, ctx_true=ctx_true, mate=mate,
                      base_is_prox=(a_bone == bone_id), tau_prox=tau,
                      twist_rot=RigidTransform.about_axis(axis_pt, axis_dir, tau)
                      if tau != 0.0 else RigidTransform.identity(),
                      rigid=rigid)


def _signed_angle_about(axis: np.ndarray, center: np.ndarray,
                        a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Signed rotation angle about `axis` taking direction (a-center) to (b-center)."""
    va = a - center
    vb = b - center
    va = va - vdot(va, axis)[..., None] * axis
    vb = vb - vdot(vb, axis)[..., None] * axis
    cosv = vdot(va, vb)
    sinv = vdot(vcross(va, vb), axis)
    return np.arctan2(sinv, cosv)


@dataclass
class JointResolution:
    """Per-row resolved bend data for one joint of a bone group."""

    theta_base: np.ndarray          # rotation target for the base bone's segment end
    crop: np.ndarray
    anchor: np.ndarray              # true-space anchor positions
    v_base: np.ndarray              # true-space resolved endpoint on the base bone
    v_mate: np.ndarray
    c0: np.ndarray                  # intermediate-plane circle (true space)
    e1: np.ndarray
    e2: np.ndarray
    rho: np.ndarray
    normal: np.ndarray
    ang_anchor: np.ndarray          # in the cut frame (angle 0 at pair-prox side)
    ang_dist: np.ndarray
    base_is_prox: bool
    separator_true: Plane | None
    cut0: object = None             # initial-state cut (scaled rest)
    theta_mate: np.ndarray | None = None
    mate: int = -1
    crop_end_base: np.ndarray | None = None  # true-space separator crossing


def resolve_joint(setup: JointSetup, phi_rows: np.ndarray, pc: PoseContext,
                  bone_id: int, cut0) -> JointResolution:
    """Resolve V', X', target angles, and reconnection for all rows at a joint.

    cut0 is the initial (scaled-rest) joint cut at the rows' support planes;
    it pins the mate-side segment that gets rigidly posed before resolution.
    """
    ctx = setup.ctx_detw
    n = len(phi_rows)
    base_prox = setup.base_is_prox
    # initial endpoints (scaled rest)
    V0 = cut0.v_prox if base_prox else cut0.v_dist           # base bone side
    X0 = cut0.v_dist if base_prox else cut0.v_prox           # mate side
    a_bone = bone_id if base_prox else setup.mate
    b_bone = setup.mate if base_prox else bone_id
    Ta = pc.transform(a_bone)
    Tb_detw = (RigidTransform.about_axis(ctx.prox.geom.prox_center, ctx.prox.geom.u,
                                         -setup.tau_prox).compose(pc.transform(b_bone))
               if setup.tau_prox != 0.0 else pc.transform(b_bone))
    Va_rig = Ta.apply(V0 if base_prox else X0)   # prox-pair side posed endpoint
    Xb_rig = Tb_detw.apply(X0 if base_prox else V0)

    if setup.rigid:
        # joint unchanged relative to the prox bone: rigidly map the initial
        # cut (bitwise-stable identity path)
        res_cut = _rigid_cut(cut0, Ta)
        cutm = res_cut
    elif setup.is_junction:
        res_cut = None
        cutm = _junction_resolution_cut(setup, pc, bone_id, cut0, ctx)
    else:
        cut1 = joint_cut(ctx, Xb_rig, pc.sk_scaled.tol.surface)
        cut2 = joint_cut(ctx, Va_rig, pc.sk_scaled.tol.surface)
        e1 = ctx.pivot_angle(cut1.anchor)
        e2 = ctx.pivot_angle(cut2.anchor)
        em = e1 + 0.5 * wrap_angle(e2 - e1)
        Wm = (ctx.pivot.center
              + ctx.pivot.radius * (np.cos(em)[:, None] * ctx.pivot_e1
                                    + np.sin(em)[:, None] * ctx.pivot_e2))
        cutm = joint_cut(ctx, Wm, pc.sk_scaled.tol.surface)
        res_cut = None

    if res_cut is not None:
        cutm = res_cut

    vp, vd = cutm.v_prox, cutm.v_dist
    # target angles measured about each bone's posed axis at its tangency circle
    ga_p = ctx.prox.geom
    gb_p = ctx.dist.geom
    th_prox = _signed_angle_about(ga_p.u, ctx.prox.tan_center, Va_rig, vp)
    th_dist = _signed_angle_about(gb_p.u, ctx.dist.tan_center, Xb_rig, vd)
    theta_base = th_prox if base_prox else th_dist
    theta_mate = th_dist if base_prox else th_prox

    # map to true space (un-detwist)
    R = setup.twist_rot
    anchor_t = R.apply(cutm.anchor)
    crop_end_t = R.apply(cutm.crop_end_prox if base_prox else cutm.crop_end_dist)
    vp_t = R.apply(vp)
    vd_t = R.apply(vd)
    c0_t = R.apply(cutm.c0)
    e1_t = R.apply_dir(cutm.e1)
    e2_t = R.apply_dir(cutm.e2)
    n_t = R.apply_dir(cutm.normal)
    sep_t = Plane(R.apply(ctx.separator.point), vunit(R.apply_dir(ctx.separator.unit_normal)))
    return JointResolution(
        theta_base=theta_base, crop=cutm.crop.copy(), anchor=anchor_t,
        v_base=(vp_t if base_prox else vd_t), v_mate=(vd_t if base_prox else vp_t),
        c0=c0_t, e1=e1_t, e2=e2_t, rho=cutm.rho.copy(), normal=n_t,
        ang_anchor=cutm.ang_anchor.copy(), ang_dist=cutm.ang_dist.copy(),
        base_is_prox=base_prox, separator_true=sep_t, cut0=cut0,
        theta_mate=theta_mate, mate=setup.mate, crop_end_base=crop_end_t)


def _rigid_cut(cut0, T: RigidTransform):
    """Initial cut rigidly mapped (bitwise-stable identity path)."""
    class _C:
        pass
    c = _C()
    c.v_prox = T.apply(cut0.v_prox)
    c.v_dist = T.apply(cut0.v_dist)
    c.anchor = T.apply(cut0.anchor)
    c.c0 = T.apply(cut0.c0)
    c.e1 = T.apply_dir(cut0.e1)
    c.e2 = T.apply_dir(cut0.e2)
    c.normal = T.apply_dir(cut0.normal)
    c.rho = cut0.rho
    c.crop = cut0.crop
    c.ang_anchor = cut0.ang_anchor
    c.ang_dist = cut0.ang_dist
    c.crossing = T.apply(cut0.crossing)
    c.crop_end_prox = T.apply(cut0.crop_end_prox)
    c.crop_end_dist = T.apply(cut0.crop_end_dist)
    c.lam_prox = cut0.lam_prox
    c.lam_dist = cut0.lam_dist
    c.parallel = cut0.parallel
    c.degenerate = cut0.degenerate
    return c


def _junction_resolution_cut(setup: JointSetup, pc: PoseContext, bone_id: int,
                             cut0, ctx_detw: JointContext):
    """Junction joints: remap each row's anchor by its normalized pivot-arc
    coordinate and cut through the remapped anchor."""
    sk0 = pc.sk_scaled
    sid = setup.ctx0.sphere_id
    pair = tuple(sorted((bone_id, setup.mate)))
    a0_init, a1_init = _cell_range(setup.ctx0, _sides_at(sk0, sid), pair)
    a0_post, a1_post = _cell_range(ctx_detw, _sides_at_posed(pc, sid), pair)
    ang0 = setup.ctx0.pivot_angle(cut0.anchor)
    # unwrap against the initial range
    ang0 = np.where(ang0 < a0_init - 1e-9, ang0 + 2 * math.pi, ang0)
    c = np.clip((ang0 - a0_init) / max(a1_init - a0_init, 1e-12), 0.0, 1.0)
    em = a0_post + c * (a1_post - a0_post)
    Wm = (ctx_detw.pivot.center
          + ctx_detw.pivot.radius * (np.cos(em)[:, None] * ctx_detw.pivot_e1
                                     + np.sin(em)[:, None] * ctx_detw.pivot_e2))
    return joint_cut(ctx_detw, Wm, sk0.tol.surface)


def _sides_at(sk: Skeleton, sid: int) -> dict[int, JointSide]:
    return {b: _joint_side(sk.geom(b), joint_is_distal=(sk.dist_sphere[b] == sid))
            for b in sk.sphere_bones[sid]}


def _sides_at_posed(pc: PoseContext, sid: int) -> dict[int, JointSide]:
    sk0 = pc.sk_scaled
    out = {}
    for b in sk0.sphere_bones[sid]:
        g = posed_geom(sk0.geom(b), pc.transform(b))
        out[b] = _joint_side(g, joint_is_distal=(sk0.dist_sphere[b] == sid))
    return out


def _cell_range(ctx: JointContext, sides: dict[int, JointSide],
                pair: tuple[int, int], samples: int = 720) -> tuple[float, float]:
    bones = sorted(sides)
    ang = np.linspace(-math.pi, math.pi, samples, endpoint=False)
    pts = (ctx.pivot.center[None]
           + ctx.pivot.radius * (np.cos(ang)[:, None] * ctx.pivot_e1
                                 + np.sin(ang)[:, None] * ctx.pivot_e2))
    xhat = vunit(pts - ctx.center)
    d = np.stack([angular_distance_to_cone(sides[b], xhat) for b in bones])
    nearest2 = np.argsort(d, axis=0)[:2]
    ia, ib = bones.index(pair[0]), bones.index(pair[1])
    inpair = ((nearest2[0] == ia) & (nearest2[1] == ib)) | \
             ((nearest2[0] == ib) & (nearest2[1] == ia))
    if not np.any(inpair):
        raise errors.WrongCell(f"pair {pair} owns no pivot cell")
    from .baseline import _circular_runs
    runs = _circular_runs(inpair)
    step = 2 * math.pi / samples
    bis = vunit(sides[pair[0]].g_out + sides[pair[1]].g_out,
                fallback=sides[pair[0]].g_out)
    best, best_score = None, -np.inf
    for start, length in runs:
        a0 = ang[start]
        a1 = a0 + (length - 1) * step
        mid = 0.5 * (a0 + a1)
        mdir = vunit(ctx.pivot.center
                     + ctx.pivot.radius * (math.cos(mid) * ctx.pivot_e1
                                           + math.sin(mid) * ctx.pivot_e2) - ctx.center)
        score = float(vdot(mdir, bis))
        if score > best_score:
            best, best_score = (float(a0), float(a1)), score
    return best


# ---------------------------------------------------------------------------
# deformed sections for one bone group

@dataclass
class BoneGroupDeform:
    """Deformed portion data for all rows sharing one base bone."""

    bone_id: int
    T: RigidTransform
    axis_point: np.ndarray
    axis_dir: np.ndarray
    theta_P: np.ndarray      # per-row ramp targets (true space, twist included)
    theta_D: np.ndarray
    G0: np.ndarray           # scaled-rest generatrix endpoints per row
    G1: np.ndarray
    end0: np.ndarray         # true-space curve endpoints (before cropping)
    end1: np.ndarray
    d_lo: np.ndarray         # valid parameter range after cropping
    d_hi: np.ndarray
    crop_lo: np.ndarray      # bool
    crop_hi: np.ndarray
    res_p: JointResolution | None
    res_d: JointResolution | None
    straight: np.ndarray     # rows whose ramp is exactly zero
    profile: str
    free_prox: bool
    free_dist: bool
    g_scaled: BoneGeom
    g_posed: BoneGeom
    G0p: np.ndarray | None = None   # cached posed endpoints T(G0), T(G1)
    G1p: np.ndarray | None = None

    def curve_points(self, d) -> np.ndarray:
        """Evaluate the deformed curve at per-row parameters d (n,) or (n,k)."""
        d = np.asarray(d, dtype=float)
        tp = self.theta_P
        td = self.theta_D
        if d.ndim == 2:
            tp = tp[:, None]
            td = td[:, None]
        g0 = self.T.apply(self.G0) if self.G0p is None else self.G0p
        g1 = self.T.apply(self.G1) if self.G1p is None else self.G1p
        if d.ndim == 2:
            q = g0[:, None, :] + d[..., None] * (g1 - g0)[:, None, :]
        else:
            q = g0 + d[..., None] * (g1 - g0)
        if np.all(tp == 0.0) and np.all(td == 0.0):
            return q  # untouched bones stay rigid (and bitwise stable)
        ang = tp + (td - tp) * profile_value(d, self.profile)
        return rotate_points(q, self.axis_point, self.axis_dir, ang)

    def curve_speed(self, d: np.ndarray) -> np.ndarray:
        """|dq/dd| on a per-row parameter grid (n, k), rotation-free.

        The rotation about the bone axis preserves every term of the speed,
        so arclengths integrate from the unrotated segment geometry:
        speed^2 = |seg|^2 + 2 theta' (seg . (k x v)) + theta'^2 rho(d)^2.
        """
        g0 = self.T.apply(self.G0) if self.G0p is None else self.G0p
        g1 = self.T.apply(self.G1) if self.G1p is None else self.G1p
        delta = g1 - g0
        v0 = g0 - self.axis_point
        k = self.axis_dir
        c_len2 = vdot(delta, delta)[:, None]
        c1 = vdot(delta, vcross(np.broadcast_to(k, v0.shape), v0))[:, None]
        kv0 = vdot(v0, np.broadcast_to(k, v0.shape))[:, None]
        kd = vdot(delta, np.broadcast_to(k, delta.shape))[:, None]
        v00 = vdot(v0, v0)[:, None]
        v0d = vdot(v0, delta)[:, None]
        # rho^2(d) as a fused quadratic, clamped at zero
        rho2 = d * (c_len2 - kd * kd)
        rho2 += 2.0 * (v0d - kv0 * kd)
        rho2 *= d
        rho2 += v00 - kv0 * kv0
        np.maximum(rho2, 0.0, out=rho2)
        dth = (self.theta_D - self.theta_P)[:, None]
        if self.profile == "cubic":
            thp = d * (1.0 - d)
            thp *= 6.0 * dth
        else:
            thp = np.broadcast_to(dth, np.shape(d)).copy()
        rho2 *= thp
        rho2 += 2.0 * c1
        rho2 *= thp
        rho2 += c_len2
        np.maximum(rho2, 0.0, out=rho2)
        return np.sqrt(rho2, out=rho2)

    def curve_tangent(self, d) -> np.ndarray:
        """Analytic tangent of the deformed curve at per-row parameters."""
        d = np.asarray(d)
        tp, td = self.theta_P, self.theta_D
        if d.ndim == 2:
            tp, td = tp[:, None], td[:, None]
        ang = tp + (td - tp) * profile_value(d, self.profile)
        if self.profile == "cubic":
            dang = (td - tp) * 6.0 * d * (1.0 - d)
        else:
            dang = (td - tp) * np.ones_like(d)
        g0 = self.T.apply(self.G0)
        g1 = self.T.apply(self.G1)
        seg = (g1 - g0)
        if d.ndim == 2:
            q = g0[:, None, :] + d[..., None] * seg[:, None, :]
            seg = np.broadcast_to(seg[:, None, :], q.shape)
        else:
            q = g0 + d[..., None] * seg
        k = self.axis_dir
        qr = rotate_points(q, self.axis_point, k, ang)
        dq = rotate_points(q + seg, self.axis_point, k, ang) - qr  # d(pos)/dd, rigid part
        # rotation-rate part: dang * (k x (q' - axis))
        rel = qr - self.axis_point
        rel = rel - vdot(rel, k)[..., None] * k
        dq = dq + dang[..., None] * vcross(np.broadcast_to(k, qr.shape), rel)
        return vunit(dq)


def bone_group_deform(pc: PoseContext, bone_id: int, phi: np.ndarray,
                      profile: str, setup_p: JointSetup, setup_d: JointSetup,
                      n_override: dict | None = None) -> BoneGroupDeform:
    """Resolve both joints and assemble the deformed-segment data for rows."""
    sk0 = pc.sk_scaled
    g0 = sk0.geom(bone_id)
    T = pc.transform(bone_id)
    gp = posed_geom(g0, T)
    G0, G1 = g0.generatrix(phi)
    n = len(phi)
    tau = pc.twist(bone_id)

    res_p = res_d = None
    if setup_p.exists:
        cut0p = joint_cut(setup_p.ctx0, G0, sk0.tol.surface)
        res_p = resolve_joint(setup_p, phi, pc, bone_id, cut0p)
    if setup_d.exists:
        cut0d = joint_cut(setup_d.ctx0, G1, sk0.tol.surface)
        res_d = resolve_joint(setup_d, phi, pc, bone_id, cut0d)

    theta_P = res_p.theta_base if res_p is not None else np.zeros(n)
    theta_D = (res_d.theta_base if res_d is not None else np.zeros(n)) + tau

    bgd = BoneGroupDeform(
        bone_id=bone_id, T=T, axis_point=gp.prox_center, axis_dir=gp.u,
        theta_P=theta_P, theta_D=theta_D, G0=G0, G1=G1,
        end0=np.zeros((n, 3)), end1=np.zeros((n, 3)),
        d_lo=np.zeros(n), d_hi=np.ones(n),
        crop_lo=np.zeros(n, bool), crop_hi=np.zeros(n, bool),
        res_p=res_p, res_d=res_d,
        straight=(theta_P == 0.0) & (theta_D == 0.0),
        profile=profile, free_prox=not setup_p.exists, free_dist=not setup_d.exists,
        g_scaled=g0, g_posed=gp)
    bgd.G0p = T.apply(G0)
    bgd.G1p = T.apply(G1)
    bgd.end0 = bgd.curve_points(np.zeros(n))
    bgd.end1 = bgd.curve_points(np.ones(n))
    _apply_crops(bgd)
    return bgd


def _apply_crops(bgd: BoneGroupDeform):
    """Find the separator crossings that truncate the deformed curve."""
    for res, at_dist in ((bgd.res_p, False), (bgd.res_d, True)):
        if res is None:
            continue
        crop = res.crop
        if not np.any(crop):
            continue
        rows = np.where(crop)[0]
        d_cross = np.empty(len(rows))
        straight = bgd.straight[rows]
        if np.any(straight):
            # unramped rows: exact crossing of the posed generatrix with the
            # separator plane
            srows = rows[straight]
            seg = bgd.G1p[srows] - bgd.G0p[srows]
            ce = res.crop_end_base[srows]
            denom = np.maximum(vdot(seg, seg), 1e-300)
            d_cross[straight] = np.clip(vdot(ce - bgd.G0p[srows], seg) / denom,
                                        0.0, 1.0)
        if np.any(~straight):
            d_cross[~straight] = _curve_plane_crossing(
                bgd, rows[~straight], res.separator_true, from_dist=at_dist)
        if at_dist:
            bgd.d_hi[rows] = d_cross
            bgd.crop_hi[rows] = True
        else:
            bgd.d_lo[rows] = d_cross
            bgd.crop_lo[rows] = True


def _curve_plane_crossing(bgd: BoneGroupDeform, rows, plane: Plane,
                          from_dist: bool, samples: int = 17) -> np.ndarray:
    """Parameter where each row's curve crosses the plane nearest the joint end."""
    d = np.linspace(0.0, 1.0, samples)
    sub = _row_view(bgd, rows)
    q = sub.curve_points(np.tile(d, (len(rows), 1)))
    s = plane.signed_distance(q.reshape(-1, 3)).reshape(len(rows), samples)
    # side of the bone interior: the far end of the curve
    far_idx = 0 if from_dist else samples - 1
    side = np.sign(s[:, far_idx])
    side = np.where(side == 0.0, 1.0, side)
    outside = s * side[:, None] < 0.0
    if from_dist:
        # last parameter still inside, scanning toward d=1
        inside_idx = samples - 1 - np.argmax((~outside)[:, ::-1], axis=1)
        lo = d[inside_idx]
        hi = np.minimum(1.0, lo + (d[1] - d[0]))
    else:
        inside_idx = np.argmax(~outside, axis=1)
        hi = d[inside_idx]
        lo = np.maximum(0.0, hi - (d[1] - d[0]))
    # bisection refinement
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        qm = sub.curve_points(mid)
        sm = plane.signed_distance(qm) * side
        if from_dist:
            inside = sm >= 0.0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        else:
            inside = sm >= 0.0
            hi = np.where(inside, mid, hi)
            lo = np.where(inside, lo, mid)
    return 0.5 * (lo + hi)


def _row_view(bgd: BoneGroupDeform, rows) -> BoneGroupDeform:
    """Lightweight view of a subset of rows (shares joint resolutions loosely)."""
    import copy
    v = copy.copy(bgd)
    v.theta_P = bgd.theta_P[rows]
    v.theta_D = bgd.theta_D[rows]
    v.G0 = bgd.G0[rows]
    v.G1 = bgd.G1[rows]
    if bgd.G0p is not None:
        v.G0p = bgd.G0p[rows]
        v.G1p = bgd.G1p[rows]
    return v


# ---------------------------------------------------------------------------
# per-row displacement over deformed sections

def _arc_positions(res: JointResolution, rows, ang):
    c0 = res.c0[rows]
    e1 = res.e1[rows]
    e2 = res.e2[rows]
    rho = res.rho[rows]
    return c0 + rho[:, None] * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)


def _seg_arclength_positions(bgd: BoneGroupDeform, rows, t, samples: int):
    """Equal-arclength evaluation of curved rows.

    Integrates the analytic curve speed on the parameter grid (trapezoid),
    inverts the cumulative length at t, and rotates only the final points.
    """
    sub = _row_view(bgd, rows)
    d_lo = bgd.d_lo[rows]
    d_hi = bgd.d_hi[rows]
    span_d = (d_hi - d_lo)[:, None]
    grid = d_lo[:, None] + span_d * np.linspace(0.0, 1.0, samples)
    speed = sub.curve_speed(grid)
    h = span_d / (samples - 1)
    inc = 0.5 * (speed[:, 1:] + speed[:, :-1]) * h
    cum = np.concatenate([np.zeros((len(rows), 1)), np.cumsum(inc, axis=1)], axis=1)
    total = cum[:, -1]
    target = t * total
    idx = np.clip((cum <= target[:, None]).sum(axis=1) - 1, 0, samples - 2)
    c_lo = np.take_along_axis(cum, idx[:, None], axis=1)[:, 0]
    c_hi = np.take_along_axis(cum, idx[:, None] + 1, axis=1)[:, 0]
    span = np.maximum(c_hi - c_lo, 1e-300)
    frac = np.clip((target - c_lo) / span, 0.0, 1.0)
    d_of_t = grid[np.arange(len(rows)), idx] * (1 - frac) \
        + grid[np.arange(len(rows)), idx + 1] * frac
    return sub.curve_points(d_of_t), total, d_of_t


def displace_group(bgd: BoneGroupDeform, sec: np.ndarray, t: np.ndarray,
                   scene_diag: float):
    """Deformed base point per row, by section code and curvilinear ratio t.

    Returns (positions, collapsed mask). Collapsed sections (arc pieces at a
    joint that folded shut) return the anchor position.
    """
    n = len(sec)
    b = np.zeros((n, 3))
    collapsed = np.zeros(n, bool)

    seg_rows = np.where(sec == SEC_SEG)[0]
    if len(seg_rows):
        straight = bgd.straight[seg_rows]
        s_rows = seg_rows[straight]
        c_rows = seg_rows[~straight]
        if len(s_rows):
            d_eval = bgd.d_lo[s_rows] + t[s_rows] * (bgd.d_hi[s_rows] - bgd.d_lo[s_rows])
            sub = _row_view(bgd, s_rows)
            b[s_rows] = sub.curve_points(d_eval)
        if len(c_rows):
            samples = max(SEG_SAMPLES,
                          int(math.ceil(bgd.g_scaled.generatrix_length
                                        / max(0.01 * scene_diag, 1e-12))) + 1)
            b[c_rows], total, _ = _seg_arclength_positions(bgd, c_rows, t[c_rows], samples)
            tiny = total < 1e-12
            if np.any(tiny):
                collapsed[c_rows[tiny]] = True

    for code, res, at_dist in ((SEC_ARC_PROX, bgd.res_p, False),
                               (SEC_ARC_DIST, bgd.res_d, True)):
        rows = np.where(sec == code)[0]
        if not len(rows):
            continue
        if res is None:
            # encoded on an arc that no longer exists (topology change):
            # collapse onto the segment end
            b[rows] = bgd.end0[rows] if not at_dist else bgd.end1[rows]
            collapsed[rows] = True
            continue
        cropped = res.crop[rows]
        if np.any(cropped):
            rws = rows[cropped]
            b[rws] = res.anchor[rws]
            collapsed[rws] = True
        live = rows[~cropped]
        if len(live):
            if at_dist:
                # base side of a distal joint: tangency (t=0) -> anchor (t=1)
                ang = t[live] * res.ang_anchor[live]
            else:
                # proximal joint: anchor (t=0) -> tangency (t=1)
                ang = res.ang_anchor[live] + t[live] * (res.ang_dist[live]
                                                        - res.ang_anchor[live])
            b[live] = _arc_positions(res, live, ang)

    for code, at_dist in ((SEC_CAP_PROX, False), (SEC_CAP_DIST, True)):
        rows = np.where(sec == code)[0]
        if not len(rows):
            continue
        g = bgd.g_posed
        C = g.dist_center if at_dist else g.prox_center
        r = g.r_dist if at_dist else g.r_prox
        pole_dir = g.u if at_dist else -g.u
        endpoint = bgd.end1[rows] if at_dist else bgd.end0[rows]
        e_dir = vunit(endpoint - C)
        full = np.arccos(np.clip(vdot(e_dir, pole_dir), -1.0, 1.0))
        # cap_prox runs pole (t=0) -> tangency (t=1); cap_dist the reverse
        frac = t[rows] if at_dist else 1.0 - t[rows]
        ang = full * frac  # rotation of the endpoint direction toward the pole
        cr = vcross(e_dir, np.broadcast_to(pole_dir, e_dir.shape))
        axis = vunit(cr)
        deg = vnorm(cr) < 1e-14
        if np.any(deg):
            axis = axis.copy()
            axis[deg] = plane_frame(pole_dir)[0]
        c = np.cos(ang)[:, None]
        s = np.sin(ang)[:, None]
        kxv = vcross(axis, e_dir)
        kdv = vdot(axis, e_dir)[:, None]
        dirs = e_dir * c + kxv * s + axis * kdv * (1.0 - c)
        b[rows] = C + r * dirs

    return b, collapsed


def section_lengths(bgd: BoneGroupDeform, codes: list[int],
                    scene_diag: float) -> dict[int, np.ndarray]:
    """Deformed arclength of each requested section code, per row."""
    n = len(bgd.theta_P)
    out = {}
    for code in codes:
        L = np.zeros(n)
        if code == SEC_SEG:
            straight = bgd.straight
            rows = np.where(straight)[0]
            if len(rows):
                sub = _row_view(bgd, rows)
                L[rows] = vnorm(sub.curve_points(bgd.d_hi[rows])
                                - sub.curve_points(bgd.d_lo[rows]))
            rows = np.where(~straight)[0]
            if len(rows):
                samples = max(SEG_SAMPLES,
                              int(math.ceil(bgd.g_scaled.generatrix_length
                                            / max(0.01 * scene_diag, 1e-12))) + 1)
                _, total, _ = _seg_arclength_positions(
                    bgd, rows, np.zeros(len(rows)), samples)
                L[rows] = total
        elif code in (SEC_ARC_PROX, SEC_ARC_DIST):
            res = bgd.res_p if code == SEC_ARC_PROX else bgd.res_d
            if res is not None:
                sweep = np.abs(res.ang_anchor) if code == SEC_ARC_DIST \
                    else np.abs(res.ang_dist - res.ang_anchor)
                L = np.where(res.crop, 0.0, res.rho * sweep)
        out[code] = L
    return out


# ---------------------------------------------------------------------------
# scalar operations and the DeformedPortion view

@dataclass
class DeformedPiece:
    key: tuple[int, int]          # (bone id, section code)
    kind: str                     # "curve" | "arc" | "cap" | "connector"
    polyline: np.ndarray
    tangent_start: np.ndarray | None = None
    tangent_end: np.ndarray | None = None

    @property
    def length(self) -> float:
        return float(np.sum(vnorm(self.polyline[1:] - self.polyline[:-1])))


@dataclass
class DeformedPortion:
    base_bone: int
    azimuth: float
    pieces: list[DeformedPiece]
    anchors: list[np.ndarray]
    separators: list[Plane]

    def polyline(self) -> np.ndarray:
        pts = [self.pieces[0].polyline]
        for piece in self.pieces[1:]:
            pts.append(piece.polyline[1:] if len(piece.polyline) > 1 else piece.polyline)
        return np.vstack(pts)

    @property
    def total_length(self) -> float:
        return sum(p.length for p in self.pieces)


def _curve_piece(bgd: BoneGroupDeform, row: int, samples: int) -> DeformedPiece:
    sub = _row_view(bgd, [row])
    d = bgd.d_lo[row] + (bgd.d_hi[row] - bgd.d_lo[row]) * np.linspace(0, 1, samples)
    poly = sub.curve_points(d[None, :])[0]
    tans = sub.curve_tangent(np.array([[bgd.d_lo[row], bgd.d_hi[row]]]))[0]
    return DeformedPiece((bgd.bone_id, SEC_SEG), "curve", poly,
                         tangent_start=tans[0], tangent_end=tans[1])


def _arc_piece(res: JointResolution, row: int, bone_id: int, code: int,
               samples: int) -> DeformedPiece | None:
    if res.crop[row]:
        return None
    if code == SEC_ARC_DIST:
        a0, a1 = 0.0, float(res.ang_anchor[row])
    else:
        a0, a1 = float(res.ang_anchor[row]), float(res.ang_dist[row])
    if abs(a1 - a0) < 1e-15:
        return None
    ang = np.linspace(a0, a1, samples)
    poly = (res.c0[row] + res.rho[row]
            * (np.cos(ang)[:, None] * res.e1[row] + np.sin(ang)[:, None] * res.e2[row]))
    tan0 = -math.sin(a0) * res.e1[row] + math.cos(a0) * res.e2[row]
    tan1 = -math.sin(a1) * res.e1[row] + math.cos(a1) * res.e2[row]
    sgn = 1.0 if a1 >= a0 else -1.0
    return DeformedPiece((bone_id, code), "arc", poly,
                         tangent_start=sgn * tan0, tangent_end=sgn * tan1)


def _cap_piece(bgd: BoneGroupDeform, row: int, at_dist: bool,
               samples: int) -> DeformedPiece | None:
    g = bgd.g_posed
    C = g.dist_center if at_dist else g.prox_center
    r = g.r_dist if at_dist else g.r_prox
    pole_dir = g.u if at_dist else -g.u
    endpoint = bgd.end1[row] if at_dist else bgd.end0[row]
    e_dir = vunit(endpoint - C)
    full = math.acos(max(-1.0, min(1.0, float(vdot(e_dir, pole_dir)))))
    if full < 1e-15:
        return None
    axis = vcross(e_dir, pole_dir)
    if float(vnorm(axis)) < 1e-14:
        axis = plane_frame(pole_dir)[0]
    axis = vunit(axis)
    tt = np.linspace(0.0, 1.0, samples)
    ang = full * tt
    c = np.cos(ang)[:, None]
    s = np.sin(ang)[:, None]
    kxv = vcross(axis, e_dir)
    kdv = float(vdot(axis, e_dir))
    dirs = e_dir * c + kxv * s + axis * kdv * (1.0 - c)
    poly = C + r * dirs  # runs tangency -> pole
    code = SEC_CAP_DIST if at_dist else SEC_CAP_PROX
    if not at_dist:
        poly = poly[::-1]  # cap_prox runs pole -> tangency along the portion
    return DeformedPiece((bgd.bone_id, code), "cap", poly)


def deform_portion(pc: PoseContext, bone_id: int, phi: float,
                   profile: str = "cubic", samples: int = SEG_SAMPLES) -> DeformedPortion:
    """Deformed baseline portion over the bone and its chain neighbors."""
    sk0 = pc.sk_scaled
    phi_arr = np.array([float(phi)])
    setup_p = joint_setup(pc, bone_id, False, None)
    setup_d = joint_setup(pc, bone_id, True, None)
    bgd = bone_group_deform(pc, bone_id, phi_arr, profile, setup_p, setup_d)

    pieces: list[DeformedPiece] = []
    anchors: list[np.ndarray] = []
    separators: list[Plane] = []

    def neighbor_group(setup: JointSetup, res: JointResolution, at_dist: bool):
        mate = setup.mate
        v_mate0 = res.cut0.v_dist[0] if res.base_is_prox else res.cut0.v_prox[0]
        phi_m = float(sk0.geom(mate).azimuth_of(v_mate0))
        m_setup_p = joint_setup(pc, mate, False, None)
        m_setup_d = joint_setup(pc, mate, True, None)
        return bone_group_deform(pc, mate, np.array([phi_m]), profile,
                                 m_setup_p, m_setup_d)

    # proximal side
    if bgd.res_p is not None:
        mate_bgd = neighbor_group(setup_p, bgd.res_p, False)
        pieces.append(_curve_piece(mate_bgd, 0, samples))
        anchors.append(bgd.res_p.anchor[0])
        separators.append(bgd.res_p.separator_true)
        if bool(bgd.res_p.crop[0]):
            conn = np.vstack([mate_bgd.curve_points(np.array([mate_bgd.d_hi[0]]))[0]
                              if mate_bgd.res_d is not None else mate_bgd.end1[0],
                              bgd.res_p.anchor[0],
                              bgd.curve_points(np.array([bgd.d_lo[0]]))[0]])
            pieces.append(DeformedPiece((bone_id, SEC_ARC_PROX), "connector", conn))
        else:
            arc_m = _arc_piece(bgd.res_p, 0, setup_p.mate, SEC_ARC_DIST, samples)
            if arc_m is not None:
                pieces.append(arc_m)
            arc_b = _arc_piece(bgd.res_p, 0, bone_id, SEC_ARC_PROX, samples)
            if arc_b is not None:
                pieces.append(arc_b)
    else:
        cap = _cap_piece(bgd, 0, at_dist=False, samples=samples)
        if cap is not None:
            pieces.append(cap)

    pieces.append(_curve_piece(bgd, 0, samples))

    # distal side
    if bgd.res_d is not None:
        anchors.append(bgd.res_d.anchor[0])
        separators.append(bgd.res_d.separator_true)
        mate_bgd = neighbor_group(setup_d, bgd.res_d, True)
        if bool(bgd.res_d.crop[0]):
            conn = np.vstack([bgd.curve_points(np.array([bgd.d_hi[0]]))[0],
                              bgd.res_d.anchor[0],
                              mate_bgd.curve_points(np.array([mate_bgd.d_lo[0]]))[0]])
            pieces.append(DeformedPiece((bone_id, SEC_ARC_DIST), "connector", conn))
        else:
            arc_b = _arc_piece(bgd.res_d, 0, bone_id, SEC_ARC_DIST, samples)
            if arc_b is not None:
                pieces.append(arc_b)
            arc_m = _arc_piece(bgd.res_d, 0, setup_d.mate, SEC_ARC_PROX, samples)
            if arc_m is not None:
                pieces.append(arc_m)
        pieces.append(_curve_piece(mate_bgd, 0, samples))
    else:
        cap = _cap_piece(bgd, 0, at_dist=True, samples=samples)
        if cap is not None:
            pieces.append(cap)

    return DeformedPortion(base_bone=bone_id, azimuth=float(phi), pieces=pieces,
                           anchors=anchors, separators=separators)


def resolve_bend_targets(pc: PoseContext, bone_id: int, phi: float):
    """Scalar wrapper: resolved endpoints and target angles at the distal joint.

    Returns (v_prime, x_prime, theta_v, theta_x, intermediate_plane).
    """
    setup = joint_setup(pc, bone_id, True, None)
    if not setup.exists:
        raise errors.InvalidJointRef(f"bone {bone_id} has no distal joint")
    g0 = pc.sk_scaled.geom(bone_id)
    phi_arr = np.array([float(phi)])
    G0, G1 = g0.generatrix(phi_arr)
    cut0 = joint_cut(setup.ctx0, G1, pc.sk_scaled.tol.surface)
    res = resolve_joint(setup, phi_arr, pc, bone_id, cut0)
    normal = vunit(res.normal[0])
    plane = Plane(res.anchor[0], normal)
    return (res.v_base[0], res.v_mate[0], float(res.theta_base[0]),
            float(res.theta_mate[0]), plane)


def deform_segment(p0: np.ndarray, p1: np.ndarray, axis_point: np.ndarray,
                   axis_dir: np.ndarray, angle_at_0: float, angle_at_1: float,
                   profile: str = "cubic", samples: int = SEG_SAMPLES) -> np.ndarray:
    """Rotate segment samples about the axis by the profile-interpolated angle."""
    d = np.linspace(0.0, 1.0, samples)
    q = p0 + d[:, None] * (p1 - p0)
    ang = angle_at_0 + (angle_at_1 - angle_at_0) * profile_value(d, profile)
    return rotate_points(q, axis_point, vunit(axis_dir), ang)


def reconnect(curve_a: np.ndarray, curve_b: np.ndarray, ctx: JointContext,
              eps_len: float):
    """Connect two deformed curves at a joint: C1 arc when disjoint, crop at
    the separator crossing when they run into each other's cone.

    Returns (elements, anchor) where elements is a list of polylines ordered
    along the baseline (cropped tails removed).
    """
    va = curve_a[-1]
    xb = curve_b[0]
    # in-plane test in the plane through the sheaf and the shared endpoints
    w = 0.5 * (va + xb)
    cut = joint_cut(ctx, w[None], eps_len)
    if bool(cut.crop[0]):
        sep = ctx.separator
        pa = _polyline_plane_crop(curve_a, sep, keep_start=True)
        pb = _polyline_plane_crop(curve_b, sep, keep_start=False)
        anchor = cut.anchor[0]
        return [pa, np.vstack([pa[-1], anchor, pb[0]]), pb], anchor
    arc = _connecting_arc(ctx, va, xb)
    return [curve_a, arc, curve_b], cut.anchor[0]


def _connecting_arc(ctx: JointContext, a: np.ndarray, b: np.ndarray,
                    samples: int = 33) -> np.ndarray:
    nrm = vunit(vcross(a - ctx.center, b - ctx.center))
    if float(vnorm(vcross(a - ctx.center, b - ctx.center))) < 1e-14:
        return np.vstack([a, b])
    # arc on the joint sphere in the plane through a, b
    mid_plane_pt = 0.5 * (a + b)
    d = float(vdot(ctx.center - mid_plane_pt, nrm))
    c0 = ctx.center - d * nrm
    e1 = vunit(a - c0)
    e2 = vcross(nrm, e1)
    rho = float(vnorm(a - c0))
    a1 = math.atan2(float(vdot(b - c0, e2)), float(vdot(b - c0, e1)))
    ang = np.linspace(0.0, wrap_angle(a1), samples)
    return c0 + rho * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)


def _polyline_plane_crop(poly: np.ndarray, plane: Plane, keep_start: bool) -> np.ndarray:
    s = plane.signed_distance(poly)
    ref = s[0] if keep_start else s[-1]
    side = 1.0 if ref >= 0 else -1.0
    inside = s * side >= 0.0
    if np.all(inside):
        return poly
    if keep_start:
        k = int(np.argmin(inside))  # first outside
        k = max(1, k)
        # refine the crossing point
        f = s[k - 1] / (s[k - 1] - s[k])
        x = poly[k - 1] + f * (poly[k] - poly[k - 1])
        return np.vstack([poly[:k], x])
    kr = int(np.argmin(inside[::-1]))
    k = len(poly) - 1 - kr  # last outside scanning backward
    f = s[k] / (s[k] - s[k + 1]) if k + 1 < len(poly) else 0.0
    x = poly[k] + f * (poly[k + 1] - poly[k])
    return np.vstack([x, poly[k + 1:]])


def deformed_direction_field(pc: PoseContext, dp: DeformedPortion):
    """Direction sampler over a deformed portion.

    Directions come from a fresh local baseline construction on the posed
    skeleton, evaluated at the sampled surface position: sphere normals over
    arcs and caps, the pencil field over cone segments. The original
    (undeformed) baseline plays no part.
    Returns sample(x, key) -> (direction, sin_beta) with key the owning
    (bone id, section code).
    """
    from .encoder import fresh_segment_field
    sk_posed = pc.sk_posed

    def sample(x: np.ndarray, key: tuple[int, int]):
        bone, code = key
        if code in (SEC_ARC_PROX, SEC_CAP_PROX):
            sid = sk_posed.prox_sphere[bone]
        elif code in (SEC_ARC_DIST, SEC_CAP_DIST):
            sid = sk_posed.dist_sphere[bone]
        else:
            nrm, sinb = fresh_segment_field(sk_posed, bone, np.asarray(x)[None])
            return nrm[0], float(sinb[0])
        C = sk_posed.sphere_by_id[sid].center
        return vunit(np.asarray(x) - C), 1.0

    return sample
