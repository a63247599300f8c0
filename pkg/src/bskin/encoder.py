"""Point-set encoding: detail direction field over baseline portions and the
inverse projection producing one EncodedPoint per input point.

The batch path (encode_cloud) groups points by base bone and runs the joint
kernel on whole groups; project_point wraps it for a single point, so a cloud
encode and a per-point probe agree bitwise.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import errors
from .baseline import (
    SEC_ARC_DIST,
    SEC_ARC_PROX,
    SEC_CAP_DIST,
    SEC_CAP_PROX,
    SEC_SEG,
    BaselinePortion,
    JointContext,
    joint_cut,
    joint_for,
    junction_cell_of,
)
from .geom import intersect_line_pairs, vdot, vnorm, vunit
from .skeleton import Registration, Skeleton, skeleton_to_dict

ENC_DTYPE = np.dtype({
    "names": ["point_index", "chain", "bone", "phi", "section", "t", "h", "sinb", "flags"],
    "formats": ["<u8", "<u4", "<u4", "<f8", "<u4", "<f8", "<f8", "<f8", "<u4"],
    "offsets": [0, 8, 12, 16, 24, 28, 36, 44, 52],
    "itemsize": 56,
})

FLAG_ON_CAP = 1
FLAG_APEX = 2
FLAG_AXIS_DEGENERATE = 4
FLAG_CLAMPED = 8
FLAG_NEAR_TANGENT = 16  # set during skinning when sin(beta') was clamped


@dataclass(frozen=True)
class EncodedPoint:
    """Scalar view of one encoded record."""

    point_index: int
    chain_id: int
    bone_id: int
    azimuth: float
    section_id: int
    t: float
    h: float
    sin_beta: float
    on_cap: bool

    @staticmethod
    def from_record(rec) -> "EncodedPoint":
        return EncodedPoint(
            point_index=int(rec["point_index"]), chain_id=int(rec["chain"]),
            bone_id=int(rec["bone"]), azimuth=float(rec["phi"]),
            section_id=int(rec["section"]), t=float(rec["t"]), h=float(rec["h"]),
            sin_beta=float(rec["sinb"]), on_cap=bool(rec["flags"] & FLAG_ON_CAP))


@dataclass(frozen=True)
class DirectionSample:
    base: np.ndarray
    dir: np.ndarray


@dataclass
class EncodedSet:
    records: np.ndarray  # ENC_DTYPE
    skeleton_hash: bytes

    def __len__(self):
        return len(self.records)

    def point(self, i: int) -> EncodedPoint:
        return EncodedPoint.from_record(self.records[i])


def skeleton_hash(sk: Skeleton) -> bytes:
    blob = json.dumps(skeleton_to_dict(sk), sort_keys=True).encode()
    return hashlib.sha256(blob).digest()[:8]


# ---------------------------------------------------------------------------
# joint kernel plumbing for one bone group

@dataclass
class _JointData:
    ctx: JointContext
    cut: object
    base_is_prox: bool  # the base bone plays the prox side of the pair
    mate: int


def _joint_parts(sk: Skeleton, bone_id: int, distal: bool, W: np.ndarray,
                 mates: np.ndarray | None):
    """Joint kernel across rows; junction mates may differ per row."""
    if mates is None:
        ctx = joint_for(sk, bone_id, distal)
        if ctx is None:
            return []
        cut = joint_cut(ctx, W, sk.tol.surface)
        mate = ctx.prox.bone_id if ctx.dist.bone_id == bone_id else ctx.dist.bone_id
        return [(np.arange(len(W)), _JointData(ctx, cut, ctx.prox.bone_id == bone_id, mate))]
    sid = sk.dist_sphere[bone_id] if distal else sk.prox_sphere[bone_id]
    out = []
    for mate in np.unique(mates):
        rows = np.where(mates == mate)[0]
        hint = _mate_hint(sk, sid, int(mate))
        ctx = joint_for(sk, bone_id, distal, hint)
        cut = joint_cut(ctx, W[rows], sk.tol.surface)
        out.append((rows, _JointData(ctx, cut, ctx.prox.bone_id == bone_id, int(mate))))
    return out


def _mate_hint(sk: Skeleton, sphere_id: int, mate: int) -> np.ndarray:
    """Surface point that makes the junction cell resolve to `mate`."""
    g = sk.geom(mate)
    s = sk.sphere_by_id[sphere_id]
    far = g.dist_center if sk.prox_sphere[mate] == sphere_id else g.prox_center
    return s.center + vunit(far - s.center) * s.radius


def junction_mates_for_azimuth(sk: Skeleton, bone_id: int, sid: int,
                               gen_end: np.ndarray) -> np.ndarray:
    """Junction mate per row from the generatrix endpoint at the row azimuth.

    Keyed purely on (bone, azimuth) so the skinning pass recovers the same
    pairing from a stored record.
    """
    C = sk.sphere_by_id[sid].center
    xhat = vunit(np.atleast_2d(gen_end) - C)
    mates = np.empty(len(xhat), dtype=np.int64)
    for i in range(len(xhat)):
        pair = junction_cell_of(sk, sid, xhat[i])
        if bone_id in pair:
            mates[i] = pair[0] if pair[1] == bone_id else pair[1]
        else:
            mates[i] = pair[0]
    return mates


def segment_pencil(P0, dir0, P1, dir1, centers0, centers1, eps):
    """Pencil focus I of a segment's detail field, with parallel fallback.

    The endpoint detail rays run through the adjacent sphere centers; the
    field along the segment is the pencil of lines through their
    intersection I.
    """
    I, parallel, _, _ = intersect_line_pairs(centers0, dir0, centers1, dir1, eps)
    sign = np.where(vdot(P0 - I, dir0) >= 0.0, 1.0, -1.0)
    return I, parallel, sign


def pencil_direction(I, parallel, sign, dir_const, q):
    n = np.where(parallel[:, None], np.broadcast_to(dir_const, np.shape(q)),
                 sign[:, None] * (q - I))
    return vunit(n)


# ---------------------------------------------------------------------------
# the per-bone batch encoder

def _encode_bone_group(sk: Skeleton, bone_id: int, pts: np.ndarray,
                       out: np.ndarray, rows: np.ndarray) -> list[tuple[int, int]]:
    """Encode points whose base bone is bone_id; fills out[rows].

    Returns (global_row, new_bone) for points that belong to a neighbor's
    section and must be re-encoded there.
    """
    g = sk.geom(bone_id)
    n = len(pts)
    w = pts - g.prox_center
    z = vdot(w, g.u)
    radial = w - z[:, None] * g.u
    rho = vnorm(radial)
    axis_degenerate = rho < sk.tol.cylinder
    phi = np.where(axis_degenerate, 0.0, np.arctan2(vdot(w, g.e2), vdot(w, g.e1)))
    G0, G1 = g.generatrix(phi)

    has_prox = sk.chain_end_kind(bone_id, False) != "free"
    has_dist = sk.chain_end_kind(bone_id, True) != "free"
    sid_p, sid_d = sk.prox_sphere[bone_id], sk.dist_sphere[bone_id]

    mates_p = junction_mates_for_azimuth(sk, bone_id, sid_p, G0) \
        if has_prox and sid_p in sk.junctions else None
    mates_d = junction_mates_for_azimuth(sk, bone_id, sid_d, G1) \
        if has_dist and sid_d in sk.junctions else None
    jp = _joint_parts(sk, bone_id, False, G0, mates_p) if has_prox else []
    jd = _joint_parts(sk, bone_id, True, G1, mates_d) if has_dist else []

    def gather(parts, default_pt):
        d = {
            "anchor": default_pt.copy(), "crop": np.zeros(n, bool),
            "crop_end": default_pt.copy(), "mate": np.full(n, -1, np.int64),
        }
        for rws, jdta in parts:
            d["anchor"][rws] = jdta.cut.anchor
            d["crop"][rws] = jdta.cut.crop
            d["crop_end"][rws] = (jdta.cut.crop_end_prox if jdta.base_is_prox
                                  else jdta.cut.crop_end_dist)
            d["mate"][rws] = jdta.mate
        return d

    JP = gather(jp, G0) if jp else None
    JD = gather(jd, G1) if jd else None

    sec = np.full(n, SEC_SEG, dtype=np.int64)
    flags = np.where(axis_degenerate, FLAG_AXIS_DEGENERATE, 0).astype(np.uint32)
    b_out = np.zeros((n, 3))
    nrm_out = np.zeros((n, 3))
    t_out = np.zeros(n)
    h_out = np.zeros(n)
    sinb_out = np.ones(n)
    phi_out = phi.copy()
    reassign: list[tuple[int, int]] = []

    # -- exposed-band (cap) classification
    def joint_band(parts, C):
        m = np.zeros(n, bool)
        for rws, jdta in parts:
            x = vunit(pts[rws] - C)
            a, b = jdta.ctx.prox, jdta.ctx.dist
            inb = (vdot(x, a.g_out) < a.sigma) & (vdot(x, b.g_out) < b.sigma)
            m[rws] = inb & ~jdta.cut.crop  # folds swallow the band
        return m

    cap_p = joint_band(jp, sk.sphere_by_id[sid_p].center) if jp else np.zeros(n, bool)
    cap_d = joint_band(jd, sk.sphere_by_id[sid_d].center) if jd else np.zeros(n, bool)
    if not has_prox:
        cap_p = vdot(vunit(pts - g.prox_center), g.u) < g.sin_a
    if not has_dist:
        cap_d = vdot(vunit(pts - g.dist_center), g.u) > g.sin_a
    both = cap_p & cap_d
    if np.any(both):
        dp = np.abs(vnorm(pts - g.prox_center) - g.r_prox)
        dd = np.abs(vnorm(pts - g.dist_center) - g.r_dist)
        cap_d &= ~(both & (dp <= dd))
        cap_p &= ~(both & (dp > dd))

    # -- free extremity caps
    for distal, mask in ((False, cap_p & (not has_prox)), (True, cap_d & (not has_dist))):
        idx = np.where(mask)[0]
        if not len(idx):
            continue
        C = g.dist_center if distal else g.prox_center
        r = g.r_dist if distal else g.r_prox
        x = pts[idx] - C
        ln = vnorm(x)
        xh = vunit(x)
        fix = ln < 1e-300
        if np.any(fix):
            xh = xh.copy()
            xh[fix] = (g.u if distal else -g.u)
            flags[idx[fix]] |= FLAG_CLAMPED
        pole_dir = g.u if distal else -g.u
        theta = np.arccos(np.clip(vdot(xh, pole_dir), -1.0, 1.0))
        full = math.acos(max(-1.0, min(1.0, g.sin_a if distal else -g.sin_a)))
        frac = np.clip(theta / max(full, 1e-12), 0.0, 1.0)
        b_out[idx] = C + r * xh
        nrm_out[idx] = xh
        h_out[idx] = ln - r
        t_out[idx] = (1.0 - frac) if distal else frac
        sec[idx] = SEC_CAP_DIST if distal else SEC_CAP_PROX
        phi_out[idx] = g.azimuth_of(b_out[idx])
        flags[idx] |= FLAG_ON_CAP

    # -- joint caps: radial projection plus in-plane membership split
    for distal, mask, parts in ((False, cap_p if has_prox else np.zeros(n, bool), jp),
                                (True, cap_d if has_dist else np.zeros(n, bool), jd)):
        idx = np.where(mask)[0]
        if not len(idx):
            continue
        sid = sid_d if distal else sid_p
        C = sk.sphere_by_id[sid].center
        r = sk.sphere_by_id[sid].radius
        x = pts[idx] - C
        ln = vnorm(x)
        xh = vunit(x)
        fix = ln < 1e-300
        if np.any(fix):
            xh = xh.copy()
            xh[fix] = vunit(G1[idx[fix]] - C) if distal else vunit(G0[idx[fix]] - C)
            flags[idx[fix]] |= FLAG_CLAMPED
        b = C + r * xh
        b_out[idx] = b
        nrm_out[idx] = xh
        h_out[idx] = ln - r
        sinb_out[idx] = 1.0
        flags[idx] |= FLAG_ON_CAP
        for rws, jdta in parts:
            sel = np.intersect1d(rws, idx)
            if not len(sel):
                continue
            pos = np.searchsorted(idx, sel)
            cut2 = joint_cut(jdta.ctx, b_out[sel], sk.tol.surface)
            rel = b_out[sel] - cut2.c0
            ang = np.arctan2(vdot(rel, cut2.e2), vdot(rel, cut2.e1))
            sgn = np.where(cut2.ang_dist >= 0, 1.0, -1.0)
            a_pt = np.clip(ang * sgn, 0.0, cut2.ang_dist * sgn)
            a_anchor = cut2.ang_anchor * sgn
            a_dist = cut2.ang_dist * sgn
            vb = cut2.v_prox if jdta.base_is_prox else cut2.v_dist
            if jdta.base_is_prox:
                on_base = a_pt <= a_anchor
                tt = np.clip(a_pt / np.maximum(a_anchor, 1e-300), 0.0, 1.0)
                # prox side of the pair: this is the base bone's distal joint,
                # arc runs tangency (t=0) -> anchor (t=1)
                sec_code = SEC_ARC_DIST
            else:
                on_base = a_pt >= a_anchor
                tt = np.clip((a_pt - a_anchor)
                             / np.maximum(a_dist - a_anchor, 1e-300), 0.0, 1.0)
                # dist side: base bone's proximal joint, anchor (0) -> tangency (1)
                sec_code = SEC_ARC_PROX
            sec[sel] = sec_code
            t_out[sel] = tt
            phi_out[sel] = g.azimuth_of(vb)
            off = np.where(~on_base)[0]
            for k in off:
                reassign.append((int(rows[sel[k]]), int(jdta.mate)))
            # junction caps: the stored azimuth must recover the same mate
            if jdta.ctx.sphere_id in sk.junctions:
                on = np.where(on_base)[0]
                if len(on):
                    ge = g.generatrix(phi_out[sel[on]])[1 if distal else 0]
                    rec = junction_mates_for_azimuth(sk, bone_id, jdta.ctx.sphere_id, ge)
                    bad = rec != jdta.mate
                    flags[sel[on[bad]]] |= FLAG_CLAMPED

    # -- segment region
    seg_mask = ~(cap_p | cap_d)
    idx = np.where(seg_mask)[0]
    if len(idx):
        P0 = G0[idx]
        if JP is not None:
            P0 = np.where(JP["crop"][idx][:, None], JP["crop_end"][idx], P0)
        P1 = G1[idx]
        if JD is not None:
            P1 = np.where(JD["crop"][idx][:, None], JD["crop_end"][idx], P1)
        c_prox = np.broadcast_to(g.prox_center, P0.shape)
        c_dist = np.broadcast_to(g.dist_center, P1.shape)
        dir0 = vunit(P0 - c_prox)
        dir1 = vunit(P1 - c_dist)
        I, parallel, sign = segment_pencil(P0, dir0, P1, dir1, c_prox, c_dist,
                                           sk.tol.parallel)
        seg_dir = P1 - P0
        seg_len = vnorm(seg_dir)
        ray_dir = np.where(parallel[:, None], dir0, pts[idx] - I)
        b, par2, _, tb = intersect_line_pairs(pts[idx], ray_dir, P0, seg_dir,
                                              sk.tol.parallel)
        bad = par2 | (seg_len < 1e-300)
        tb = np.where(bad, 0.5, tb)
        flags[idx[bad]] |= FLAG_CLAMPED

        tol_t = 1e-9
        over = tb > 1.0 + tol_t
        under = tb < -tol_t
        apexed = np.zeros(len(idx), bool)
        if g.apex is not None:
            t_apex = vdot(np.broadcast_to(g.apex, P0.shape) - P0, seg_dir) / \
                np.maximum(seg_len * seg_len, 1e-300)
            apexed = (over & (t_apex > 1.0) & (tb >= t_apex)) | \
                     (under & (t_apex < 0.0) & (tb <= t_apex))
        flags[idx[apexed]] |= FLAG_APEX
        spill_d = over & ~apexed
        spill_p = under & ~apexed
        if JD is not None:
            for k in np.where(spill_d)[0]:
                reassign.append((int(rows[idx[k]]), int(JD["mate"][idx[k]])))
        else:
            flags[idx[spill_d]] |= FLAG_CLAMPED
            spill_d[:] = False
        if JP is not None:
            for k in np.where(spill_p)[0]:
                reassign.append((int(rows[idx[k]]), int(JP["mate"][idx[k]])))
        else:
            flags[idx[spill_p]] |= FLAG_CLAMPED
            spill_p[:] = False

        tb = np.clip(tb, 0.0, 1.0)
        b = P0 + tb[:, None] * seg_dir
        nb = pencil_direction(I, parallel, sign, dir0, b)
        h = vdot(pts[idx] - b, nb)
        that = vunit(seg_dir)
        sinb = np.sqrt(np.clip(1.0 - vdot(nb, that) ** 2, 0.0, 1.0))
        b_out[idx] = b
        nrm_out[idx] = nb
        t_out[idx] = tb
        h_out[idx] = h
        sinb_out[idx] = sinb

    # apex rows ride rigidly with the bone: store bone-cylindrical coordinates
    # (t = axial fraction, h = radius) so the pose pass can replay them exactly
    apex_rows = np.where(flags & FLAG_APEX)[0]
    if len(apex_rows):
        sec[apex_rows] = SEC_SEG
        t_out[apex_rows] = z[apex_rows] / g.length
        h_out[apex_rows] = rho[apex_rows]
        sinb_out[apex_rows] = 1.0

    out["point_index"][rows] = rows
    out["chain"][rows] = sk.chain_of_bone[bone_id]
    out["bone"][rows] = bone_id
    out["phi"][rows] = phi_out
    out["section"][rows] = sec
    out["t"][rows] = t_out
    out["h"][rows] = h_out
    out["sinb"][rows] = sinb_out
    out["flags"][rows] = flags
    return reassign


def assign_base_bones(sk: Skeleton, registration: Registration,
                      points: np.ndarray) -> np.ndarray:
    """Base-bone assignment: registration, overlap rule, separator ownership."""
    bones = registration.bone_ids.astype(np.int64).copy()
    for bid in np.unique(bones):
        rws = np.where(bones == bid)[0]
        g = sk.geom(int(bid))
        d_self = g.signed_surface_distance(points[rws])
        inside = d_self < 0.0
        if not np.any(inside):
            continue
        for distal in (False, True):
            mate = sk.neighbor_across(int(bid), distal)
            if mate is None:
                continue
            d_mate = sk.geom(mate).signed_surface_distance(points[rws])
            swap = inside & (d_mate < 0.0) & (np.abs(d_mate) > np.abs(d_self))
            bones[rws[swap]] = mate
    for _ in range(3):
        changed = False
        for bid in np.unique(bones):
            rws = np.where(bones == bid)[0]
            g = sk.geom(int(bid))
            for distal in (False, True):
                ctx = joint_for(sk, int(bid), distal)
                if ctx is None or ctx.sphere_id in sk.junctions:
                    continue
                mate = ctx.prox.bone_id if ctx.dist.bone_id == bid else ctx.dist.bone_id
                far = g.prox_center if distal else g.dist_center
                side_bone = math.copysign(1.0, float(ctx.separator.signed_distance(far)))
                beyond = ctx.separator.signed_distance(points[rws]) * side_bone < 0.0
                if np.any(beyond):
                    bones[rws[beyond]] = mate
                    changed = True
        if not changed:
            break
    return bones


def encode_cloud(sk: Skeleton, registration: Registration,
                 points: np.ndarray) -> EncodedSet:
    """Encode every input point; the per-point work is an independent map."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    n = len(points)
    records = np.zeros(n, dtype=ENC_DTYPE)
    if n == 0:
        return EncodedSet(records, skeleton_hash(sk))
    if len(registration.bone_ids) != n:
        raise errors.ParseError(
            f"registration covers {len(registration.bone_ids)} points, cloud has {n}")
    registration.validate(sk)
    bones = assign_base_bones(sk, registration, points)
    pending = np.arange(n)
    for _ in range(4):
        if not len(pending):
            break
        moved: dict[int, int] = {}
        for bid in np.unique(bones[pending]):
            rws = pending[bones[pending] == bid]
            for r, nb in _encode_bone_group(sk, int(bid), points[rws], records, rws):
                moved[r] = nb
        if not moved:
            pending = np.array([], dtype=np.int64)
            break
        pending = np.array(sorted(moved), dtype=np.int64)
        for r, nb in moved.items():
            bones[r] = nb
    if len(pending):
        records["flags"][pending] |= FLAG_CLAMPED
    return EncodedSet(records, skeleton_hash(sk))


def project_point(sk: Skeleton, registration_bone: int, p: np.ndarray) -> EncodedPoint:
    """Encode a single point registered to the given bone."""
    reg = Registration(np.array([registration_bone], dtype=np.int64))
    es = encode_cloud(sk, reg, np.asarray(p, dtype=float)[None])
    rec = es.records[0]
    if rec["flags"] & FLAG_APEX:
        raise errors.ApexRegion(f"base point beyond cone apex for bone {rec['bone']}")
    return EncodedPoint.from_record(rec)


def pencil_field_at(P0: np.ndarray, P1: np.ndarray, c_prox: np.ndarray,
                    c_dist: np.ndarray, b: np.ndarray, eps_parallel: float):
    """Detail direction and sin(beta) of the segment pencil at points b."""
    dir0 = vunit(P0 - c_prox)
    dir1 = vunit(P1 - c_dist)
    I, parallel, sign = segment_pencil(P0, dir0, P1, dir1, c_prox, c_dist,
                                       eps_parallel)
    nb = pencil_direction(I, parallel, sign, dir0, b)
    that = vunit(P1 - P0)
    sinb = np.sqrt(np.clip(1.0 - vdot(nb, that) ** 2, 0.0, 1.0))
    return nb, sinb


def fresh_segment_field(sk: Skeleton, bone_id: int, b: np.ndarray,
                        mates_p: np.ndarray | None = None,
                        mates_d: np.ndarray | None = None):
    """Detail directions of a fresh baseline construction at on-cone points.

    The rows of b must lie on the bone's cone band of `sk` (typically a posed
    skeleton); this is the deformed-direction-field rule: directions depend
    only on the surface position, not on the original baseline.
    Returns (directions, sin_beta).
    """
    g = sk.geom(bone_id)
    b = np.atleast_2d(b)
    w = b - g.prox_center
    phi = np.arctan2(vdot(w, g.e2), vdot(w, g.e1))
    G0, G1 = g.generatrix(phi)
    has_prox = sk.chain_end_kind(bone_id, False) != "free"
    has_dist = sk.chain_end_kind(bone_id, True) != "free"
    sid_p, sid_d = sk.prox_sphere[bone_id], sk.dist_sphere[bone_id]
    if has_prox and sid_p in sk.junctions and mates_p is None:
        mates_p = junction_mates_for_azimuth(sk, bone_id, sid_p, G0)
    if has_dist and sid_d in sk.junctions and mates_d is None:
        mates_d = junction_mates_for_azimuth(sk, bone_id, sid_d, G1)
    jp = _joint_parts(sk, bone_id, False, G0, mates_p) if has_prox else []
    jd = _joint_parts(sk, bone_id, True, G1, mates_d) if has_dist else []
    P0 = G0.copy()
    for rws, jdta in jp:
        crop = jdta.cut.crop
        ce = jdta.cut.crop_end_dist if jdta.ctx.dist.bone_id == bone_id \
            else jdta.cut.crop_end_prox
        P0[rws[crop]] = ce[crop]
    P1 = G1.copy()
    for rws, jdta in jd:
        crop = jdta.cut.crop
        ce = jdta.cut.crop_end_prox if jdta.ctx.prox.bone_id == bone_id \
            else jdta.cut.crop_end_dist
        P1[rws[crop]] = ce[crop]
    c_prox = np.broadcast_to(g.prox_center, P0.shape)
    c_dist = np.broadcast_to(g.dist_center, P1.shape)
    return pencil_field_at(P0, P1, c_prox, c_dist, b, sk.tol.parallel)


def direction_at(portion: BaselinePortion, s: float) -> DirectionSample:
    """Detail direction at arclength position s along a portion."""
    remaining = float(s)
    if remaining < 0:
        raise errors.OutOfRange(f"arclength {s} negative")
    for elem in portion.elements:
        L = elem.length
        if remaining <= L or elem is portion.elements[-1]:
            u = 0.0 if L == 0 else min(1.0, remaining / L)
            base = elem.point_at(u)
            if elem.kind == "arc":
                return DirectionSample(base, vunit(base - elem.sphere_center))
            I, parallel, _, _ = intersect_line_pairs(
                elem.center0[None], elem.dir0[None], elem.center1[None], elem.dir1[None])
            if parallel[0]:
                return DirectionSample(base, elem.dir0.copy())
            sign = 1.0 if float(vdot(elem.p0 - I[0], elem.dir0)) >= 0 else -1.0
            return DirectionSample(base, vunit(sign * (base - I[0])))
        remaining -= L
    raise errors.OutOfRange(f"arclength {s} beyond portion length")
