"""End-to-end skinning jobs: deform baselines for a pose, redistribute base
points by their curvilinear ratios, modulate detail amplitudes, smooth unfold
zones, and lift the cloud.

skin() is a parallel-safe map over encoded records after one sequential
skeleton-posing step; all shared state is immutable during a job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .baseline import SEC_ARC_DIST, SEC_ARC_PROX, SEC_CAP_DIST, SEC_CAP_PROX, SEC_SEG
from .deformer import (
    SEG_SAMPLES,
    BoneGroupDeform,
    PoseContext,
    _row_view,
    bone_group_deform,
    displace_group,
    joint_setup,
    posed_geom,
    section_lengths,
)
from .encoder import (
    ENC_DTYPE,
    FLAG_APEX,
    FLAG_NEAR_TANGENT,
    EncodedPoint,
    EncodedSet,
    FLAG_ON_CAP,
    fresh_segment_field,
    junction_mates_for_azimuth,
    skeleton_hash,
)
from .geom import vdot, vnorm, vunit
from .skeleton import Pose, Skeleton, identity_pose

EPS_SIN = 1e-6
CHUNK = 200_000


@dataclass(frozen=True)
class JobOptions:
    profile_position: str = "cubic"
    profile_direction: str = "linear"
    modulation: bool = True
    unfold_smoothing: bool = True
    fold_angle_threshold: float = 2.0 * math.pi / 3.0  # interior angle at/below: severe

    def validated(self) -> "JobOptions":
        for name in (self.profile_position, self.profile_direction):
            if name not in ("cubic", "linear"):
                raise errors.OutOfRange(f"unknown profile {name!r}")
        return self

    @staticmethod
    def from_dict(d: dict) -> "JobOptions":
        base = JobOptions()
        return JobOptions(
            profile_position=d.get("profile_position", base.profile_position),
            profile_direction=d.get("profile_direction", base.profile_direction),
            modulation=bool(d.get("modulation", base.modulation)),
            unfold_smoothing=bool(d.get("unfold_smoothing", base.unfold_smoothing)),
            fold_angle_threshold=float(d.get("fold_angle_threshold",
                                             base.fold_angle_threshold)),
        ).validated()

    def to_dict(self) -> dict:
        return {
            "profile_position": self.profile_position,
            "profile_direction": self.profile_direction,
            "modulation": self.modulation,
            "unfold_smoothing": self.unfold_smoothing,
            "fold_angle_threshold": self.fold_angle_threshold,
        }


@dataclass
class SkinningJob:
    skeleton: Skeleton
    encoded: EncodedSet
    pose: Pose
    options: JobOptions = field(default_factory=JobOptions)

    def verify(self):
        self.options.validated()
        if self.encoded.skeleton_hash and \
                self.encoded.skeleton_hash != skeleton_hash(self.skeleton):
            raise errors.ParseError(
                "encoded set was produced against a different skeleton (hash mismatch)")


@dataclass
class SkinResult:
    positions: np.ndarray
    flags: np.ndarray          # encoder flag bits plus skin-time diagnostics
    collapsed: np.ndarray      # rows whose section collapsed to an anchor
    smoothed: np.ndarray       # rows whose h went through unfold smoothing


@dataclass(frozen=True)
class SmoothingZone:
    """Unfold zone of one joint: the baseline stretch between the two images
    of the initial fold point, around the new anchor."""

    joint_sphere_id: int
    rows: np.ndarray           # encoded-record indices in the zone
    s_coords: np.ndarray       # along-baseline coordinate, 0 at the new anchor
    boundary_dist: np.ndarray  # Euclidean distance from each row's own-side
    # fold-point image to its base point (drives delta)


def modulate_height(h, sin_beta, sin_beta_prime):
    """Detail amplitude rescaled to keep perpendicular offsets: h*sinb/sinb'."""
    s = np.asarray(sin_beta_prime, dtype=float)
    clamped = s <= EPS_SIN
    s = np.where(clamped, EPS_SIN, s)
    return np.asarray(h) * np.asarray(sin_beta) / s, clamped


def smooth_heights(s_coords: np.ndarray, base_points: np.ndarray,
                   heights: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Gaussian-weighted height average over an unfold zone.

    Neighbors are taken within 3*delta along the baseline on both sides of
    the anchor; weights decay with the 3D base-point distance. delta -> 0
    degenerates to the identity.
    """
    n = len(heights)
    out = heights.copy()
    order = np.argsort(s_coords)
    s_sorted = s_coords[order]
    for i in range(n):
        d = deltas[i] / 3.0
        if d <= 0.0:
            continue
        lo = np.searchsorted(s_sorted, s_coords[i] - 3.0 * d, side="left")
        hi = np.searchsorted(s_sorted, s_coords[i] + 3.0 * d, side="right")
        nbr = order[lo:hi]
        if len(nbr) == 0:
            continue
        w = np.exp(-vnorm(base_points[nbr] - base_points[i]) ** 2 / (2.0 * d * d))
        cst = float(np.sum(w))
        if cst <= 0.0:
            continue
        # centered form: exact identity on constant height zones
        out[i] = heights[i] + float(np.sum(w * (heights[nbr] - heights[i]))) / cst
    return out


def _fold_angle(ga, gb, C) -> float:
    """Interior angle between two bones at a shared joint (pi = straight)."""
    def out_dir(g):
        far = g.prox_center if vnorm(g.dist_center - C) < vnorm(g.prox_center - C) \
            else g.dist_center
        return vunit(far - C)
    return math.acos(max(-1.0, min(1.0, float(vdot(out_dir(ga), out_dir(gb))))))


def _group_rows(sk_rest: Skeleton, enc: EncodedSet):
    """Group records by (bone, junction mates); mates recover from azimuths."""
    rec = enc.records
    bones = rec["bone"].astype(np.int64)
    phi = rec["phi"]
    n = len(rec)
    mate_p = np.full(n, -1, dtype=np.int64)
    mate_d = np.full(n, -1, dtype=np.int64)
    for bid in np.unique(bones):
        rows = np.where(bones == bid)[0]
        sid_p = sk_rest.prox_sphere[int(bid)]
        sid_d = sk_rest.dist_sphere[int(bid)]
        g = sk_rest.geom(int(bid))
        if sid_p in sk_rest.junctions:
            mate_p[rows] = junction_mates_for_azimuth(
                sk_rest, int(bid), sid_p, g.generatrix(phi[rows])[0])
        if sid_d in sk_rest.junctions:
            mate_d[rows] = junction_mates_for_azimuth(
                sk_rest, int(bid), sid_d, g.generatrix(phi[rows])[1])
    id_map = {bid: i for i, bid in enumerate(sorted(sk_rest.bone_by_id))}
    lut = np.zeros(max(sk_rest.bone_by_id) + 2, dtype=np.int64)
    for bid, i in id_map.items():
        lut[bid + 1] = i + 1
    base = np.int64(len(sk_rest.bones) + 2)
    packed = (lut[bones + 1] * base + lut[mate_p + 1]) * base + lut[mate_d + 1]
    order = np.argsort(packed, kind="stable")
    sorted_keys = packed[order]
    cuts = np.concatenate([[0], np.where(np.diff(sorted_keys) != 0)[0] + 1,
                           [len(packed)]])
    groups = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        rows = order[a:b]
        i = rows[0]
        groups.append((int(bones[i]), int(mate_p[i]), int(mate_d[i]), rows))
    return groups


def skin(job: SkinningJob) -> SkinResult:
    """Run one skinning job: deform, redistribute, modulate, smooth, lift."""
    job.verify()
    sk = job.skeleton
    rec = job.encoded.records
    n = len(rec)
    flags = rec["flags"].copy()
    if n == 0:
        return SkinResult(np.zeros((0, 3)), flags, np.zeros(0, bool), np.zeros(0, bool))

    B = np.zeros((n, 3))
    NRM = np.zeros((n, 3))
    H = np.zeros(n)
    collapsed_all = np.zeros(n, bool)
    smoothed_all = np.zeros(n, bool)
    apex_all = (flags & FLAG_APEX) != 0

    pc = PoseContext.build(sk, job.pose)
    prof = job.options.profile_position
    zone_halves: list[_ZoneHalf] = []

    for bone, m_p, m_d, rows in _group_rows(sk, job.encoded):
        setup_p = joint_setup(pc, bone, False, m_p if m_p >= 0 else None)
        setup_d = joint_setup(pc, bone, True, m_d if m_d >= 0 else None)
        for lo in range(0, len(rows), CHUNK):
            rws = rows[lo:lo + CHUNK]
            r = rec[rws]
            bgd = bone_group_deform(pc, bone, r["phi"].copy(), prof, setup_p, setup_d)
            sec = r["section"].astype(np.int64)
            b, collapsed = displace_group(bgd, sec, r["t"],
                                          pc.sk_scaled.scene_diagonal)
            apex = apex_all[rws]
            collapsed_all[rws] = collapsed & ~apex
            rigid_bone = ((not setup_p.exists or setup_p.rigid)
                          and (not setup_d.exists or setup_d.rigid)
                          and pc.twist(bone) == 0.0)
            nrm, sinb_p = _fresh_field(pc, bone, b, sec,
                                       bgd=bgd if rigid_bone else None)
            h = r["h"].copy()
            if job.options.modulation:
                h, near = modulate_height(h, r["sinb"], sinb_p)
                flags[rws[near & ~apex]] |= FLAG_NEAR_TANGENT
            B[rws] = b
            NRM[rws] = nrm
            H[rws] = h
            if np.any(apex):
                rigid = _apex_rigid(bgd, r[apex])
                B[rws[apex]] = rigid
                NRM[rws[apex]] = 0.0
                H[rws[apex]] = 0.0
            if job.options.unfold_smoothing:
                zone_halves += _collect_zone_halves(
                    pc, job.options, bone, bgd, rws, r, sec, exclude=apex)

    if zone_halves:
        _apply_zones(zone_halves, B, H, smoothed_all)
    out = B + H[:, None] * NRM
    return SkinResult(out, flags, collapsed_all, smoothed_all)


def _apex_rigid(bgd: BoneGroupDeform, r) -> np.ndarray:
    """Replay apex rows rigidly from their bone-cylindrical coordinates."""
    g = bgd.g_posed
    rad = np.cos(r["phi"])[:, None] * g.e1 + np.sin(r["phi"])[:, None] * g.e2
    return g.prox_center + np.outer(r["t"] * g.length, g.u) + r["h"][:, None] * rad


def _fresh_field(pc: PoseContext, bone: int, b: np.ndarray, sec: np.ndarray,
                 bgd: BoneGroupDeform | None = None):
    """Deformed direction field: fresh construction on the posed skeleton.

    When the bone's joints are rigid under the pose (bgd given), the fresh
    cuts equal the rigidly carried initial cuts, so they are reused instead
    of recut.
    """
    n = len(sec)
    nrm = np.zeros((n, 3))
    sinb = np.ones(n)
    sk_posed = pc.sk_posed
    seg = sec == SEC_SEG
    if np.any(seg):
        if bgd is not None:
            T = bgd.T
            P0 = bgd.G0p[seg]
            if bgd.res_p is not None:
                crop = bgd.res_p.cut0.crop[seg]
                if np.any(crop):
                    ce = (bgd.res_p.cut0.crop_end_prox if bgd.res_p.base_is_prox
                          else bgd.res_p.cut0.crop_end_dist)
                    P0 = P0.copy()
                    P0[crop] = T.apply(ce[seg][crop])
            P1 = bgd.G1p[seg]
            if bgd.res_d is not None:
                crop = bgd.res_d.cut0.crop[seg]
                if np.any(crop):
                    ce = (bgd.res_d.cut0.crop_end_prox if bgd.res_d.base_is_prox
                          else bgd.res_d.cut0.crop_end_dist)
                    P1 = P1.copy()
                    P1[crop] = T.apply(ce[seg][crop])
            g = bgd.g_posed
            from .encoder import pencil_field_at
            nrm[seg], sinb[seg] = pencil_field_at(
                P0, P1, np.broadcast_to(g.prox_center, P0.shape),
                np.broadcast_to(g.dist_center, P1.shape), b[seg],
                pc.sk_scaled.tol.parallel)
        else:
            nrm[seg], sinb[seg] = fresh_segment_field(sk_posed, bone, b[seg])
    for code, sid in ((SEC_ARC_PROX, sk_posed.prox_sphere[bone]),
                      (SEC_ARC_DIST, sk_posed.dist_sphere[bone]),
                      (SEC_CAP_PROX, sk_posed.prox_sphere[bone]),
                      (SEC_CAP_DIST, sk_posed.dist_sphere[bone])):
        m = sec == code
        if not np.any(m):
            continue
        C = sk_posed.sphere_by_id[sid].center
        nrm[m] = vunit(b[m] - C)
        sinb[m] = 1.0
    return nrm, sinb


# ---------------------------------------------------------------------------
# unfold smoothing

@dataclass
class _ZoneHalf:
    sid: int
    rows: np.ndarray          # global record indices
    s: np.ndarray             # along-baseline coordinate, 0 at the new anchor
    boundary_s: np.ndarray    # coordinate of each row's own fold-point image
    boundary_pts: np.ndarray  # 3D image of the fold point on this bone's curve


def _collect_zone_halves(pc: PoseContext, opts: JobOptions, bone: int,
                         bgd: BoneGroupDeform, rws: np.ndarray, r,
                         sec: np.ndarray,
                         exclude: np.ndarray | None = None) -> list["_ZoneHalf"]:
    halves = []
    sk0 = pc.sk_scaled
    for at_dist, res in ((False, bgd.res_p), (True, bgd.res_d)):
        if res is None or res.cut0 is None:
            continue
        crop0 = res.cut0.crop
        if not np.any(crop0):
            continue
        sid = sk0.dist_sphere[bone] if at_dist else sk0.prox_sphere[bone]
        mate = res.mate
        C0 = sk0.sphere_by_id[sid].center
        a_init = _fold_angle(sk0.geom(bone), sk0.geom(mate), C0)
        Cp = pc.transform(bone).apply(C0)
        a_post = _fold_angle(bgd.g_posed, posed_geom(sk0.geom(mate),
                                                     pc.transform(mate)), Cp)
        if not (a_init <= opts.fold_angle_threshold and a_post > a_init + 1e-9):
            continue
        local_arc = SEC_ARC_DIST if at_dist else SEC_ARC_PROX
        member = crop0 & ((sec == SEC_SEG) | (sec == local_arc))
        if exclude is not None:
            member &= ~exclude
        if not np.any(member):
            continue
        rows_local = np.where(member)[0]
        L = section_lengths(bgd, [SEC_SEG, local_arc], sk0.scene_diagonal)
        tt = r["t"][rows_local]
        seg_rows = sec[rows_local] == SEC_SEG
        dist_to_anchor = np.where(
            seg_rows,
            (1.0 - tt) * L[SEC_SEG][rows_local] + L[local_arc][rows_local]
            if at_dist else tt * L[SEC_SEG][rows_local] + L[local_arc][rows_local],
            (1.0 - tt) * L[local_arc][rows_local] if at_dist
            else tt * L[local_arc][rows_local])
        sign = -1.0 if at_dist else 1.0
        s = sign * dist_to_anchor
        dS = _crop_param(res, bgd)
        img_pts = _row_view(bgd, rows_local).curve_points(dS[rows_local])
        img_dist = _arc_to_joint_end(bgd, rows_local, dS[rows_local], at_dist) \
            + L[local_arc][rows_local]
        halves.append(_ZoneHalf(sid=sid, rows=rws[rows_local], s=s,
                                boundary_s=sign * img_dist, boundary_pts=img_pts))
    return halves


def _crop_param(res, bgd: BoneGroupDeform) -> np.ndarray:
    """Initial crop point's parameter along the full generatrix."""
    S = res.cut0.crossing
    seg = bgd.G1 - bgd.G0
    return np.clip(vdot(S - bgd.G0, seg) / np.maximum(vdot(seg, seg), 1e-300),
                   0.0, 1.0)


def _arc_to_joint_end(bgd: BoneGroupDeform, rows, d_from: np.ndarray,
                      at_dist: bool, samples: int = SEG_SAMPLES) -> np.ndarray:
    """Arclength along the deformed curve from parameter d to the joint end."""
    sub = _row_view(bgd, rows)
    d_end = bgd.d_hi[rows] if at_dist else bgd.d_lo[rows]
    lo = np.minimum(d_from, d_end)
    hi = np.maximum(d_from, d_end)
    grid = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, samples)
    pts = sub.curve_points(grid)
    return np.sum(vnorm(pts[:, 1:] - pts[:, :-1]), axis=1)


def compute_smoothing_zone(pc: PoseContext, opts: JobOptions, enc: EncodedSet,
                           joint_sphere_id: int,
                           B: np.ndarray, H: np.ndarray) -> SmoothingZone | None:
    """Assemble the smoothing zone of one joint for the current pose, or None
    when the joint does not unfold a severe fold."""
    halves = _zone_halves_for(pc, opts, enc)
    halves = [h for h in halves if h.sid == joint_sphere_id]
    if not halves:
        return None
    rows = np.concatenate([h.rows for h in halves])
    s = np.concatenate([h.s for h in halves])
    bdist = np.concatenate([vnorm(h.boundary_pts - B[h.rows]) for h in halves])
    keep = np.abs(s) <= np.concatenate([np.abs(h.boundary_s) for h in halves])
    if not np.any(keep):
        return None
    return SmoothingZone(joint_sphere_id=joint_sphere_id, rows=rows[keep],
                         s_coords=s[keep], boundary_dist=bdist[keep])


def _zone_halves_for(pc: PoseContext, opts: JobOptions, enc: EncodedSet):
    halves = []
    rec = enc.records
    for bone, m_p, m_d, rows in _group_rows(pc.sk_rest, enc):
        setup_p = joint_setup(pc, bone, False, m_p if m_p >= 0 else None)
        setup_d = joint_setup(pc, bone, True, m_d if m_d >= 0 else None)
        r = rec[rows]
        bgd = bone_group_deform(pc, bone, r["phi"].copy(), "cubic", setup_p, setup_d)
        halves += _collect_zone_halves(pc, opts, bone, bgd, rows, r,
                                       r["section"].astype(np.int64),
                                       exclude=(r["flags"] & FLAG_APEX) != 0)
    return halves


def _apply_zones(halves: list[_ZoneHalf], B: np.ndarray, H: np.ndarray,
                 smoothed_all: np.ndarray):
    by_sid: dict[int, list[_ZoneHalf]] = {}
    for h in halves:
        by_sid.setdefault(h.sid, []).append(h)
    for sid, hs in by_sid.items():
        rows = np.concatenate([h.rows for h in hs])
        s = np.concatenate([h.s for h in hs])
        boundary_s = np.concatenate([h.boundary_s for h in hs])
        bpts = np.vstack([h.boundary_pts for h in hs])
        inside = np.abs(s) <= np.abs(boundary_s)
        if not np.any(inside):
            continue
        rows_in = rows[inside]
        deltas = vnorm(bpts[inside] - B[rows_in])
        H[rows_in] = smooth_heights(s[inside], B[rows_in], H[rows_in], deltas)
        smoothed_all[rows_in] = True


def evaluate_encoded(sk: Skeleton, enc: EncodedSet) -> np.ndarray:
    """Decode the encoded set at the identity pose (exact round trip)."""
    return skin(SkinningJob(skeleton=sk, encoded=enc, pose=identity_pose())).positions


def chain_baseline_polyline(pc: PoseContext, chain_id: int, phi: float,
                            spacing: float, profile: str = "cubic"):
    """One deformed baseline along a whole chain, stitched bone by bone.

    The azimuth key propagates through each joint the way the support-plane
    construction dictates. Returns (points, bone_ids) arrays.
    """
    from .deformer import deform_portion
    sk0 = pc.sk_scaled
    chain = sk0.chains[chain_id]
    pts: list[np.ndarray] = []
    bones_out: list[np.ndarray] = []
    az = float(phi)
    for i, bid in enumerate(chain):
        dp = deform_portion(pc, bid, az, profile=profile)
        for piece in dp.pieces:
            if piece.key[0] != bid:
                continue
            poly = piece.polyline
            if piece.length > 0 and spacing > 0:
                k = max(2, int(math.ceil(piece.length / spacing)) + 1)
                if k > len(poly):
                    poly = _densify(poly, k)
            if pts and len(poly) > 1:
                poly = poly[1:] if vnorm(poly[0] - pts[-1][-1]) < 1e-12 else poly
            pts.append(poly)
            bones_out.append(np.full(len(poly), bid))
        if i + 1 < len(chain):
            # azimuth of the next bone from the initial joint construction
            from .baseline import build_portion
            portion = build_portion(sk0, bid, az)
            az = portion.support_plane_keys.get(chain[i + 1], az)
    return np.vstack(pts), np.concatenate(bones_out)


def _densify(poly: np.ndarray, k: int) -> np.ndarray:
    seg = vnorm(poly[1:] - poly[:-1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.linspace(0.0, cum[-1], k)
    idx = np.clip(np.searchsorted(cum, s) - 1, 0, len(poly) - 2)
    span = np.maximum(cum[idx + 1] - cum[idx], 1e-300)
    f = ((s - cum[idx]) / span)[:, None]
    return poly[idx] * (1 - f) + poly[idx + 1] * f


def sample_baselines(sk: Skeleton, count: int, pose: Pose | None = None,
                     spacing: float | None = None) -> list[dict]:
    """`count` baselines per chain as JSON-ready polylines (debug/UI overlay)."""
    pc = PoseContext.build(sk, pose if pose is not None else identity_pose())
    spacing = spacing if spacing is not None else 0.01 * sk.scene_diagonal
    out = []
    for ci in range(len(sk.chains)):
        for k in range(count):
            az = 2.0 * math.pi * k / count
            pts, bones = chain_baseline_polyline(pc, ci, az, spacing)
            out.append({"azimuth": az, "chain": ci,
                        "points": [[float(x) for x in p] for p in pts],
                        "bone_ids": [int(b) for b in bones]})
    return out


def displace_base_point(pc: PoseContext, ep: EncodedPoint,
                        profile: str = "cubic"):
    """Scalar path: (b', n', sin beta') of one encoded point under a pose."""
    rec = np.zeros(1, dtype=ENC_DTYPE)
    rec["bone"] = ep.bone_id
    rec["phi"] = ep.azimuth
    rec["section"] = ep.section_id
    rec["t"] = ep.t
    rec["h"] = ep.h
    rec["sinb"] = ep.sin_beta
    rec["flags"] = FLAG_ON_CAP if ep.on_cap else 0
    bone = ep.bone_id
    sk0 = pc.sk_rest
    m_p = m_d = None
    g = sk0.geom(bone)
    if sk0.prox_sphere[bone] in sk0.junctions:
        m_p = int(junction_mates_for_azimuth(sk0, bone, sk0.prox_sphere[bone],
                                             g.generatrix(rec["phi"])[0])[0])
    if sk0.dist_sphere[bone] in sk0.junctions:
        m_d = int(junction_mates_for_azimuth(sk0, bone, sk0.dist_sphere[bone],
                                             g.generatrix(rec["phi"])[1])[0])
    setup_p = joint_setup(pc, bone, False, m_p)
    setup_d = joint_setup(pc, bone, True, m_d)
    bgd = bone_group_deform(pc, bone, rec["phi"].copy(), profile, setup_p, setup_d)
    sec = rec["section"].astype(np.int64)
    b, collapsed = displace_group(bgd, sec, rec["t"], pc.sk_scaled.scene_diagonal)
    if collapsed[0] and not (SEC_ARC_PROX <= sec[0] <= SEC_ARC_DIST):
        raise errors.SectionCollapsed("deformed section has zero arclength")
    nrm, sinb = _fresh_field(pc, bone, b, sec)
    return b[0], nrm[0], float(sinb[0])
