"""Baseline construction on the sphere-mesh: support planes, joint cuts,
anchor points, separator planes, junction cells, and per-point portions.

The central object is the *joint kernel*: given the sheaf of support planes
of a bone pair and one point per row that pins down a plane, it cuts both
cones and the joint sphere in that plane and returns the segment endpoints,
arc/crop decision, and anchor. Everything here is vectorized over rows; the
scalar operations (build_portion, select_branch) wrap it with
single-row arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .geom import (
    Arc3,
    Circle3,
    Plane,
    circle_plane_intersection_angles,
    intersect_line_pairs,
    plane_frame,
    vcross,
    vdot,
    vnorm,
    vunit,
    wrap_angle,
)
from .skeleton import BoneGeom, Skeleton


# ---------------------------------------------------------------------------
# sheaf of support planes for a bone pair

@dataclass(frozen=True)
class Sheaf:
    """Family of candidate support planes at a joint.

    kind 'line':     planes through the apex line (point, direction)
    kind 'parallel': planes with fixed normal `direction` (both cylinders)
    kind 'axial':    planes containing axis direction `direction` through
                     varying points (collinear cylinders)
    """

    kind: str
    point: np.ndarray
    direction: np.ndarray

    def plane_normals(self, w: np.ndarray) -> np.ndarray:
        """Unit normals of the planes through rows of w (shape (n, 3))."""
        if self.kind == "parallel":
            return np.broadcast_to(self.direction, w.shape).copy()
        rel = w - self.point
        n = vcross(np.broadcast_to(self.direction, w.shape), rel)
        ln = vnorm(n)
        bad = ln < 1e-300
        ln = np.where(bad, 1.0, ln)
        n = n / ln[:, None]
        if np.any(bad):
            n = n.copy()
            n[bad] = _any_perp(self.direction)
        return n

    def in_plane_dir(self) -> np.ndarray:
        """A direction contained in every plane of the sheaf."""
        return self.direction if self.kind != "parallel" else None


def _any_perp(u: np.ndarray) -> np.ndarray:
    e1, _ = plane_frame(vunit(u))
    return e1


def build_sheaf(ga: BoneGeom, gb: BoneGeom, joint_center: np.ndarray,
                eps: float) -> Sheaf:
    """Sheaf of planes containing the apexes of both cones (degenerate rules
    for cylinders follow the cone-limit geometry)."""
    if ga.apex is not None and gb.apex is not None:
        d = gb.apex - ga.apex
        ln = float(vnorm(d))
        if ln > eps:
            return Sheaf("line", ga.apex.copy(), d / ln)
        # coincident apexes: any plane through the apex; constrain along bone a
        return Sheaf("line", ga.apex.copy(), ga.u.copy())
    if ga.apex is not None:
        return Sheaf("line", ga.apex.copy(), gb.u.copy())
    if gb.apex is not None:
        return Sheaf("line", gb.apex.copy(), ga.u.copy())
    n = vcross(ga.u, gb.u)
    ln = float(vnorm(n))
    if ln > eps:
        return Sheaf("parallel", joint_center.copy(), n / ln)
    return Sheaf("axial", joint_center.copy(), ga.u.copy())


# ---------------------------------------------------------------------------
# joint context: pose-independent data for one bone pair at one sphere

@dataclass(frozen=True)
class JointSide:
    """One cone of the pair, as seen from the joint sphere."""

    bone_id: int
    g_out: np.ndarray          # unit, joint center -> bone's far sphere
    sigma: float               # axial station of the tangency circle along g_out
    tan_center: np.ndarray     # tangency circle on the joint sphere
    tan_radius: float
    tan_e1: np.ndarray         # frame of the tangency circle (normal g_out)
    tan_e2: np.ndarray
    far_center: np.ndarray     # far sphere center (for detail pencils)
    far_radius: float
    apex: np.ndarray | None
    axis_u: np.ndarray         # bone axis, proximal -> distal
    geom: BoneGeom


def _joint_side(g: BoneGeom, joint_is_distal: bool) -> JointSide:
    if joint_is_distal:
        g_out = -g.u
        sigma = -g.sin_a
        tan_center, tan_radius = g.tan_center_dist, g.tan_radius_dist
        far_center, far_radius = g.prox_center, g.r_prox
    else:
        g_out = g.u
        sigma = g.sin_a
        tan_center, tan_radius = g.tan_center_prox, g.tan_radius_prox
        far_center, far_radius = g.dist_center, g.r_dist
    e1, e2 = plane_frame(vunit(g_out))
    return JointSide(bone_id=g.bone_id, g_out=g_out, sigma=float(sigma),
                     tan_center=tan_center, tan_radius=float(tan_radius),
                     tan_e1=e1, tan_e2=e2,
                     far_center=far_center, far_radius=float(far_radius),
                     apex=g.apex, axis_u=g.u, geom=g)


@dataclass(frozen=True)
class JointContext:
    """Geometry of one joint between two tangent cones on a common sphere."""

    sphere_id: int
    center: np.ndarray
    radius: float
    prox: JointSide            # side whose bone has this joint at its distal end
    dist: JointSide
    sheaf: Sheaf
    separator: Plane
    pivot: Circle3 | None
    pivot_e1: np.ndarray = field(default=None)
    pivot_e2: np.ndarray = field(default=None)

    def pivot_angle(self, p: np.ndarray) -> np.ndarray:
        """Angle of (possibly off-circle) separator-plane points around the pivot."""
        v = p - self.pivot.center
        return np.arctan2(vdot(v, self.pivot_e2), vdot(v, self.pivot_e1))

    def pivot_point(self, angle: float) -> np.ndarray:
        return (self.pivot.center
                + self.pivot.radius * (math.cos(angle) * self.pivot_e1
                                       + math.sin(angle) * self.pivot_e2))


def joint_context(sphere_id: int, center: np.ndarray, radius: float,
                  g_prox: BoneGeom, g_dist: BoneGeom, eps: float) -> JointContext:
    prox = _joint_side(g_prox, joint_is_distal=True)
    dist = _joint_side(g_dist, joint_is_distal=False)
    sheaf = build_sheaf(g_prox, g_dist, center, eps)
    separator = _separator_plane(center, radius, prox, dist, eps)
    pivot = None
    d = float(separator.signed_distance(center))
    if abs(d) < radius:
        pc = center - d * separator.unit_normal
        pr = math.sqrt(radius * radius - d * d)
        pivot = Circle3(pc, pr, separator.unit_normal)
    else:
        pivot = Circle3(center.copy(), radius, separator.unit_normal)
    e1, e2 = plane_frame(pivot.normal)
    return JointContext(sphere_id=sphere_id, center=center, radius=radius,
                        prox=prox, dist=dist, sheaf=sheaf, separator=separator,
                        pivot=pivot, pivot_e1=e1, pivot_e2=e2)


def joint_context_for(sk: Skeleton, prox_bone: int, dist_bone: int,
                      sphere_id: int) -> JointContext:
    s = sk.sphere_by_id[sphere_id]
    return joint_context(sphere_id, s.center, s.radius,
                         sk.geom(prox_bone), sk.geom(dist_bone), sk.tol.parallel)


def _separator_plane(center, radius, a: JointSide, b: JointSide, eps) -> Plane:
    """Plane holding the intersection of the two tangent cones.

    Constructed in the axes plane: the plane through the crossings of the
    upper and lower tangent-line pairs, perpendicular to the axes plane.
    """
    n0 = vcross(a.g_out, b.g_out)
    ln = float(vnorm(n0))
    n0 = _any_perp(a.g_out) if ln < eps else n0 / ln
    # shared in-plane side axis so the +/- branches pair consistently
    m0 = vcross(n0, vunit(b.g_out - a.g_out, fallback=b.g_out))
    pts = []
    for sgn in (1.0, -1.0):
        pa, da = _inplane_tangent_line(center, radius, a, n0, m0, sgn)
        pb, db = _inplane_tangent_line(center, radius, b, n0, m0, sgn)
        if float(vnorm(vcross(da, db))) < eps:  # parallel: equal-angle collinear cones
            pts.append(pa)
        else:
            s, parallel, _, _ = intersect_line_pairs(pa[None], da[None], pb[None], db[None])
            pts.append(s[0] if not parallel[0] else pa)
    s_up, s_dn = pts
    chord = s_up - s_dn
    if float(vnorm(chord)) < eps * max(1.0, radius):
        nrm = vunit(b.g_out - a.g_out, fallback=b.g_out)
        return Plane(s_up, nrm)
    nrm = vunit(vcross(chord, n0))
    return Plane(0.5 * (s_up + s_dn), nrm)


def _inplane_tangent_line(center, radius, side: JointSide, n0, m0, sgn):
    """Tangent line of one cone inside the axes plane (point, direction).

    sgn picks the branch by the shared side axis m0; the direction points
    from the joint into the bone.
    """
    perp = vunit(vcross(n0, side.g_out))
    if vdot(perp, m0) < 0:
        perp = -perp
    t_joint = center + radius * (side.sigma * side.g_out + sgn * math.sqrt(
        max(0.0, 1.0 - side.sigma * side.sigma)) * perp)
    if side.apex is None:
        return t_joint, side.g_out.copy()
    d = vunit(t_joint - side.apex)
    if vdot(d, side.g_out) < 0:
        d = -d
    return t_joint, d


# ---------------------------------------------------------------------------
# the vectorized joint kernel

@dataclass
class JointCut:
    """Per-row result of cutting a joint with support planes through w."""

    normal: np.ndarray        # (n,3) plane normals
    c0: np.ndarray            # (n,3) in-plane circle centers
    rho: np.ndarray           # (n,) in-plane circle radii
    v_prox: np.ndarray        # (n,3) tangency points (segment joint-endpoints)
    v_dist: np.ndarray
    d_prox: np.ndarray        # (n,3) generatrix directions into each bone
    d_dist: np.ndarray
    crossing: np.ndarray      # (n,3) crossing of the two generatrix lines
    lam_prox: np.ndarray      # (n,) distance from v along d to the crossing
    lam_dist: np.ndarray
    crop: np.ndarray          # (n,) bool: segments truncate at the separator
    crop_end_prox: np.ndarray  # (n,3) separator crossing of each generatrix
    crop_end_dist: np.ndarray
    parallel: np.ndarray      # (n,) bool: generatrices parallel in-plane
    anchor: np.ndarray        # (n,3) anchor point (crop -> crossing, else on arc)
    e1: np.ndarray            # (n,3) in-plane frame, angle 0 at v_prox
    e2: np.ndarray
    ang_dist: np.ndarray      # (n,) angle of v_dist (arc sweep prox->dist)
    ang_anchor: np.ndarray    # (n,) angle of the anchor on the arc
    degenerate: np.ndarray    # (n,) bool: tangent plane / no valid cut


def _side_tangency_point(side: JointSide, normals, w, m, ref_point):
    """Intersection of the side's tangency circle with each row's plane, on
    the component selected by the side axis m (built lazily per row)."""
    ap, am, valid = circle_plane_intersection_angles(
        side.tan_center, side.tan_e1, side.tan_e2, side.tan_radius, w, normals)
    cos_p, sin_p = np.cos(ap), np.sin(ap)
    cos_m, sin_m = np.cos(am), np.sin(am)
    f1m = vdot(np.broadcast_to(side.tan_e1, m.shape), m)
    f2m = vdot(np.broadcast_to(side.tan_e2, m.shape), m)
    base_score = vdot(side.tan_center - ref_point, m)
    sa = base_score + side.tan_radius * (cos_p * f1m + sin_p * f2m)
    sb = base_score + side.tan_radius * (cos_m * f1m + sin_m * f2m)
    take_a = sa >= sb
    cs = np.where(take_a, cos_p, cos_m)
    sn = np.where(take_a, sin_p, sin_m)
    pt = (side.tan_center
          + side.tan_radius * (cs[:, None] * side.tan_e1 + sn[:, None] * side.tan_e2))
    return pt, valid


def joint_cut(ctx: JointContext, w: np.ndarray, eps_len: float) -> JointCut:
    """Cut the joint with the support planes through rows of w.

    The connected component on w's side of the sheaf line is selected, per
    the branch-selection rule.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    n = ctx.sheaf.plane_normals(w)
    d = vdot(ctx.center - w, n)
    c0 = ctx.center - d[:, None] * n
    rho2 = ctx.radius * ctx.radius - d * d
    degenerate = rho2 <= (1e-14 * ctx.radius * ctx.radius)
    rho = np.sqrt(np.clip(rho2, 0.0, None))

    # in-plane side axis: splits the two boundary components of the cut
    ldir = ctx.sheaf.in_plane_dir()
    if ldir is None:  # parallel sheaf: use the chain direction (in-plane)
        ldir = vunit(ctx.dist.g_out - ctx.prox.g_out, fallback=ctx.dist.g_out)
    m = vcross(n, np.broadcast_to(ldir, w.shape))
    sgn = np.sign(vdot(w - c0, m))
    sgn = np.where(sgn == 0.0, 1.0, sgn)
    m = m * sgn[:, None]

    v_prox, ok_p = _side_tangency_point(ctx.prox, n, w, m, c0)
    v_dist, ok_d = _side_tangency_point(ctx.dist, n, w, m, c0)
    degenerate = degenerate | ~ok_p | ~ok_d

    d_prox = _generatrix_dir(ctx.prox, v_prox)
    d_dist = _generatrix_dir(ctx.dist, v_dist)

    crossing, parallel, ta, tb = intersect_line_pairs(v_prox, d_prox, v_dist, d_dist)
    lam_prox, lam_dist = ta, tb
    crop_span = (~parallel) & (lam_prox > eps_len) & (lam_dist > eps_len)
    # deep folds swallow a tangency point inside the other cone's cap; the
    # joint then truncates even though the same-side lines cross out of span
    inv_r = 1.0 / ctx.radius
    cov_p = vdot(v_prox - ctx.center, ctx.dist.g_out) * inv_r > ctx.dist.sigma + 1e-9
    cov_d = vdot(v_dist - ctx.center, ctx.prox.g_out) * inv_r > ctx.prox.sigma + 1e-9
    deep = (~parallel) & ~crop_span & (cov_p | cov_d)
    crop = crop_span | deep
    # segments always truncate where their own generatrix pierces the
    # separator plane (identical to the line crossing in the classic case,
    # and the only on-cone choice in the deep-fold case)
    crop_end_prox = _line_plane(v_prox, d_prox, ctx.separator)
    crop_end_dist = _line_plane(v_dist, d_dist, ctx.separator)
    if np.any(deep):
        # the remote same-side crossing is meaningless here; anchor the fold
        # where the tangency chord pierces the separator plane
        sd_p = ctx.separator.signed_distance(v_prox)
        sd_d = ctx.separator.signed_distance(v_dist)
        denom = sd_p - sd_d
        ok = np.abs(denom) > 1e-300
        tchord = np.where(ok, sd_p / np.where(ok, denom, 1.0), 0.5)
        chord_pt = v_prox + np.clip(tchord, 0.0, 1.0)[:, None] * (v_dist - v_prox)
        crossing = crossing.copy()
        crossing[deep] = chord_pt[deep]

    e1 = vunit(v_prox - c0)
    bad_e1 = vnorm(v_prox - c0) < 1e-300
    if np.any(bad_e1):
        e1 = e1.copy()
        e1[bad_e1] = _any_perp(ctx.prox.g_out)
    e2 = vcross(n, e1)
    rel = v_dist - c0
    ang_dist = np.arctan2(vdot(rel, e2), vdot(rel, e1))

    # anchor: crossing when cropped, arc x separator otherwise
    ap, am, ok_s = circle_plane_intersection_angles(
        c0, e1 * rho[:, None], e2 * rho[:, None], 1.0,
        np.broadcast_to(ctx.separator.point, w.shape), ctx.separator.unit_normal)
    ap = wrap_angle(ap)
    am = wrap_angle(am)
    # pick the solution inside the arc [0, ang_dist]
    lo = np.minimum(0.0, ang_dist)
    hi = np.maximum(0.0, ang_dist)
    tol_a = 1e-9
    in_p = (ap >= lo - tol_a) & (ap <= hi + tol_a)
    in_m = (am >= lo - tol_a) & (am <= hi + tol_a)
    mid = 0.5 * ang_dist
    pick_p = in_p & (~in_m | (np.abs(ap - mid) <= np.abs(am - mid)))
    ang_anchor = np.where(pick_p, ap, am)
    ang_anchor = np.where(ok_s, ang_anchor, mid)
    ang_anchor = np.clip(ang_anchor, lo, hi)
    arc_anchor = (c0 + rho[:, None] * (np.cos(ang_anchor)[:, None] * e1
                                       + np.sin(ang_anchor)[:, None] * e2))
    anchor = np.where(crop[:, None], crossing, arc_anchor)
    if np.any(degenerate):
        # tangent plane: the cut collapses to a single surface point
        dm = degenerate
        v_prox = v_prox.copy(); v_prox[dm] = c0[dm]
        v_dist = v_dist.copy(); v_dist[dm] = c0[dm]
        anchor = anchor.copy(); anchor[dm] = c0[dm]
        crop = crop & ~dm
        ang_anchor = np.where(dm, 0.0, ang_anchor)
        ang_dist = np.where(dm, 0.0, ang_dist)
    return JointCut(normal=n, c0=c0, rho=rho, v_prox=v_prox, v_dist=v_dist,
                    d_prox=d_prox, d_dist=d_dist, crossing=crossing,
                    lam_prox=lam_prox, lam_dist=lam_dist, crop=crop,
                    crop_end_prox=crop_end_prox, crop_end_dist=crop_end_dist,
                    parallel=parallel, anchor=anchor, e1=e1, e2=e2,
                    ang_dist=ang_dist, ang_anchor=ang_anchor,
                    degenerate=degenerate)


def _line_plane(p: np.ndarray, d: np.ndarray, plane) -> np.ndarray:
    """Rows of line (p, d) intersected with a plane (p kept when parallel)."""
    dn = vdot(d, plane.unit_normal)
    sd = plane.signed_distance(p)
    ok = np.abs(dn) > 1e-300
    t = np.where(ok, -sd / np.where(ok, dn, 1.0), 0.0)
    return p + t[:, None] * d


def _generatrix_dir(side: JointSide, v: np.ndarray) -> np.ndarray:
    if side.apex is None:
        return np.broadcast_to(side.g_out, v.shape).copy()
    d = v - side.apex
    d = vunit(d)
    flip = vdot(d, side.g_out) < 0
    d = np.where(flip[:, None], -d, d)
    return d


# ---------------------------------------------------------------------------
# junction cells

def junction_pairs(sk: Skeleton, sphere_id: int) -> list[tuple[int, int]]:
    bones = sorted(sk.sphere_bones[sphere_id])
    return [(a, b) for i, a in enumerate(bones) for b in bones[i + 1:]]


def _junction_sides(sk: Skeleton, sphere_id: int) -> dict[int, JointSide]:
    sides = {}
    for bid in sk.sphere_bones[sphere_id]:
        g = sk.geom(bid)
        sides[bid] = _joint_side(g, joint_is_distal=(sk.dist_sphere[bid] == sphere_id))
    return sides


def junction_context(sk: Skeleton, sphere_id: int, bone_a: int, bone_b: int) -> JointContext:
    """Joint context for one cone pair at a junction sphere (a plays prox)."""
    s = sk.sphere_by_id[sphere_id]
    ga, gb = sk.geom(bone_a), sk.geom(bone_b)
    prox = _joint_side(ga, joint_is_distal=(sk.dist_sphere[bone_a] == sphere_id))
    dist = _joint_side(gb, joint_is_distal=(sk.dist_sphere[bone_b] == sphere_id))
    sheaf_eps = sk.tol.parallel
    # sheaf needs apexes of both cones regardless of orientation
    if prox.apex is not None and dist.apex is not None:
        dvec = dist.apex - prox.apex
        ln = float(vnorm(dvec))
        sheaf = (Sheaf("line", prox.apex.copy(), dvec / ln) if ln > sheaf_eps
                 else Sheaf("line", prox.apex.copy(), prox.axis_u.copy()))
    elif prox.apex is not None:
        sheaf = Sheaf("line", prox.apex.copy(), dist.axis_u.copy())
    elif dist.apex is not None:
        sheaf = Sheaf("line", dist.apex.copy(), prox.axis_u.copy())
    else:
        nrm = vcross(prox.axis_u, dist.axis_u)
        ln = float(vnorm(nrm))
        sheaf = (Sheaf("parallel", s.center.copy(), nrm / ln) if ln > sheaf_eps
                 else Sheaf("axial", s.center.copy(), prox.axis_u.copy()))
    separator = _separator_plane(s.center, s.radius, prox, dist, sheaf_eps)
    dsep = float(separator.signed_distance(s.center))
    if abs(dsep) < s.radius:
        pc = s.center - dsep * separator.unit_normal
        pr = math.sqrt(s.radius * s.radius - dsep * dsep)
        pivot = Circle3(pc, pr, separator.unit_normal)
    else:
        pivot = Circle3(s.center.copy(), s.radius, separator.unit_normal)
    e1, e2 = plane_frame(pivot.normal)
    return JointContext(sphere_id=sphere_id, center=s.center, radius=s.radius,
                        prox=prox, dist=dist, sheaf=sheaf, separator=separator,
                        pivot=pivot, pivot_e1=e1, pivot_e2=e2)


def angular_distance_to_cone(side: JointSide, xhat: np.ndarray) -> np.ndarray:
    """Angular distance on the joint sphere from direction xhat to the cap
    covered by the cone (zero inside the cap)."""
    lat = math.acos(max(-1.0, min(1.0, side.sigma)))  # cap boundary colatitude
    ang = np.arccos(np.clip(vdot(xhat, side.g_out), -1.0, 1.0))
    return np.maximum(0.0, ang - lat)


def junction_cell_of(sk: Skeleton, sphere_id: int, xhat: np.ndarray) -> tuple[int, int]:
    """Cone pair owning the sphere direction xhat (two nearest cones).

    Ties break toward the lowest bone id, per the construction rule.
    """
    sides = _junction_sides(sk, sphere_id)
    bones = sorted(sides)
    dists = np.array([float(angular_distance_to_cone(sides[b], xhat[None])[0])
                      for b in bones])
    order = np.lexsort((bones, dists))
    a, b = bones[order[0]], bones[order[1]]
    return (a, b) if a < b else (b, a)


def junction_cell_range(sk: Skeleton, sphere_id: int, pair: tuple[int, int],
                        samples: int = 720) -> tuple[float, float]:
    """Angular range of the pair's cell along its pivot circle.

    Sampled construction: the contiguous pivot-circle arc whose nearest two
    cones are exactly the pair.
    """
    ctx = junction_context(sk, sphere_id, *pair)
    sides = _junction_sides(sk, sphere_id)
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
        raise errors.WrongCell(f"pair {pair} owns no cell on junction {sphere_id}")
    # contiguous runs on the circle (wrap-aware); keep the run facing the
    # lens between the two cones (the other run, if any, lies on the far side)
    runs = _circular_runs(inpair)
    step = 2 * math.pi / samples
    bisector = vunit(sides[pair[0]].g_out + sides[pair[1]].g_out,
                     fallback=sides[pair[0]].g_out)
    best, best_score = None, -np.inf
    for start, length in runs:
        a0 = ang[start]
        a1 = a0 + (length - 1) * step
        mid_dir = vunit(ctx.pivot.center
                        + ctx.pivot.radius * (math.cos(0.5 * (a0 + a1)) * ctx.pivot_e1
                                              + math.sin(0.5 * (a0 + a1)) * ctx.pivot_e2)
                        - ctx.center)
        score = float(vdot(mid_dir, bisector))
        if score > best_score:
            best, best_score = (a0, a1), score
    return float(best[0]), float(best[1])


def _circular_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous True runs of a circular mask as (start, length)."""
    n = len(mask)
    if np.all(mask):
        return [(0, n)]
    runs = []
    i = 0
    # rotate so the scan starts just after a False
    first_false = int(np.argmin(mask))
    order = np.roll(np.arange(n), -first_false)
    rolled = mask[order]
    while i < n:
        if rolled[i]:
            j = i
            while j < n and rolled[j]:
                j += 1
            runs.append((int(order[i]), j - i))
            i = j
        else:
            i += 1
    return runs


def junction_pivot_coordinate(sk: Skeleton, junction_sphere_id: int,
                              cone_pair: tuple[int, int],
                              point_on_pivot_arc: np.ndarray) -> float:
    """Normalized coordinate of a point along the pair's pivot arc."""
    pair = tuple(sorted(cone_pair))
    xhat = vunit(point_on_pivot_arc - sk.sphere_by_id[junction_sphere_id].center)
    owner = junction_cell_of(sk, junction_sphere_id, xhat)
    if owner != pair:
        raise errors.WrongCell(
            f"point belongs to cell {owner}, not {pair}, on junction {junction_sphere_id}")
    ctx = junction_context(sk, junction_sphere_id, *pair)
    a0, a1 = junction_cell_range(sk, junction_sphere_id, pair)
    ang = float(ctx.pivot_angle(point_on_pivot_arc[None])[0])
    # unwrap relative to the range start
    while ang < a0 - 1e-12:
        ang += 2 * math.pi
    c = (ang - a0) / (a1 - a0) if a1 > a0 else 0.0
    return float(np.clip(c, 0.0, 1.0))


# ---------------------------------------------------------------------------
# portions (scalar construction API; the pipeline uses the kernels directly)

SEC_SEG = 0
SEC_ARC_PROX = 1
SEC_ARC_DIST = 2
SEC_CAP_PROX = 3
SEC_CAP_DIST = 4
SEC_CONNECTOR = 5  # portion-internal stitch at deep folds; never encoded

SECTION_NAMES = {SEC_SEG: "seg", SEC_ARC_PROX: "arc_prox", SEC_ARC_DIST: "arc_dist",
                 SEC_CAP_PROX: "cap_prox", SEC_CAP_DIST: "cap_dist"}


@dataclass(frozen=True)
class AnchorPoint:
    position: np.ndarray
    joint_sphere_id: int
    kind: str  # "on-arc" | "segment-intersection"


@dataclass(frozen=True)
class SeparatorPlane:
    plane: Plane
    joint_sphere_id: int
    bone_pair: tuple[int, int]


@dataclass(frozen=True)
class BaselineElement:
    kind: str                  # "segment" | "arc"
    bone_id: int | None        # carrying bone for segments
    sphere_id: int | None      # carrying sphere for arcs
    p0: np.ndarray             # segment endpoints (kind == segment)
    p1: np.ndarray
    arc: Arc3 | None = None
    sphere_center: np.ndarray | None = None  # arcs: center of the carrying sphere
    center0: np.ndarray | None = None        # segments: adjacent sphere centers
    center1: np.ndarray | None = None
    dir0: np.ndarray | None = None           # segments: endpoint detail directions
    dir1: np.ndarray | None = None

    @property
    def length(self) -> float:
        return self.arc.length if self.arc is not None else float(vnorm(self.p1 - self.p0))

    def sample(self, n: int) -> np.ndarray:
        if self.arc is not None:
            return self.arc.sample(n)
        t = np.linspace(0.0, 1.0, n)[:, None]
        return self.p0 * (1 - t) + self.p1 * t

    def point_at(self, t: float) -> np.ndarray:
        if self.arc is not None:
            return self.arc.point_at(t)
        return self.p0 + t * (self.p1 - self.p0)

    def tangent_at(self, t: float) -> np.ndarray:
        if self.arc is not None:
            return self.arc.tangent_at(t)
        return vunit(self.p1 - self.p0)


@dataclass
class BaselinePortion:
    """Ordered baseline elements over at most three bones, split at anchors
    and segment endpoints so each element is one redistribution section."""

    base_bone: int
    azimuth: float
    elements: list[BaselineElement]
    anchors: list[AnchorPoint]
    separators: list[SeparatorPlane]
    support_plane_keys: dict[int, float]  # bone id -> segment azimuth
    section_of_element: list[tuple[int, int]]  # (owning bone id, section code)

    @property
    def total_length(self) -> float:
        return sum(e.length for e in self.elements)

    def polyline(self, spacing: float) -> np.ndarray:
        pts = []
        for e in self.elements:
            n = max(2, int(math.ceil(e.length / max(spacing, 1e-12))) + 1)
            s = e.sample(n)
            if pts:
                s = s[1:]
            pts.append(s)
        return np.vstack(pts)

    def element_for(self, bone_id: int, section: int) -> BaselineElement | None:
        for e, key in zip(self.elements, self.section_of_element):
            if key == (bone_id, section):
                return e
        return None

    def arclength_of(self, x: np.ndarray) -> float:
        """Arclength along the portion of the closest polyline point (debug)."""
        poly = self.polyline(self.total_length / 512.0)
        seg = poly[1:] - poly[:-1]
        ls = np.concatenate([[0.0], np.cumsum(vnorm(seg))])
        i = int(np.argmin(vnorm(poly - x)))
        return float(ls[i])


def _arc_between(center, normal, a, b, sphere_radius=None) -> Arc3 | None:
    """Arc3 from a to b around center in the plane of normal (short way)."""
    r = float(vnorm(a - center))
    if r <= 0.0:
        return None
    e1, e2 = plane_frame(normal)
    a0 = math.atan2(float(vdot(a - center, e2)), float(vdot(a - center, e1)))
    a1 = math.atan2(float(vdot(b - center, e2)), float(vdot(b - center, e1)))
    sweep = wrap_angle(a1 - a0)
    if abs(sweep) < 1e-15:
        return None
    return Arc3(center=center, radius=r, plane_normal=normal,
                start_angle=a0, end_angle=a0 + sweep)


def extremity_arc(g: BoneGeom, phi: float, at_dist: bool) -> Arc3 | None:
    """Closing arc from the segment endpoint to the on-axis pole point."""
    if at_dist:
        c, r = g.dist_center, g.r_dist
        endpoint = g.generatrix(phi)[1]
        pole = c + r * g.u
    else:
        c, r = g.prox_center, g.r_prox
        endpoint = g.generatrix(phi)[0]
        pole = c - r * g.u
    nrm = vunit(vcross(endpoint - c, pole - c))
    if float(vnorm(vcross(endpoint - c, pole - c))) < 1e-300:
        nrm = _any_perp(g.u)
    if at_dist:
        return _arc_between(c, nrm, endpoint, pole)
    return _arc_between(c, nrm, pole, endpoint)


def effective_neighbor(sk: Skeleton, bone_id: int, distal: bool,
                       w: np.ndarray | None = None) -> int | None:
    """Neighbor bone across the given end; junctions resolved by cell of w."""
    kind = sk.chain_end_kind(bone_id, distal)
    if kind == "free":
        return None
    sid = sk.dist_sphere[bone_id] if distal else sk.prox_sphere[bone_id]
    if kind == "joint":
        return sk.neighbor_across(bone_id, distal)
    # junction: pick the mate by the cell containing w (or the chain neighbor)
    if w is None:
        nb = sk.next_bone[bone_id] if distal else sk.prev_bone[bone_id]
        if nb is not None:
            return nb
        others = [b for b in sk.sphere_bones[sid] if b != bone_id]
        return min(others)
    xhat = vunit(w - sk.sphere_by_id[sid].center)
    pair = junction_cell_of(sk, sid, xhat)
    if bone_id not in pair:
        # w sits in a cell not involving this bone; fall back to nearest mate
        others = [b for b in sk.sphere_bones[sid] if b != bone_id]
        sides = _junction_sides(sk, sid)
        d = [(float(angular_distance_to_cone(sides[b], xhat[None])[0]), b) for b in others]
        return min(d)[1]
    return pair[0] if pair[1] == bone_id else pair[1]


def joint_for(sk: Skeleton, bone_id: int, distal: bool,
              w: np.ndarray | None = None) -> JointContext | None:
    """JointContext across the given end of the bone, junction-aware."""
    mate = effective_neighbor(sk, bone_id, distal, w)
    if mate is None:
        return None
    sid = sk.dist_sphere[bone_id] if distal else sk.prox_sphere[bone_id]
    prox_bone = bone_id if distal else mate
    dist_bone = mate if distal else bone_id
    if sid in sk.junctions:
        ctx = junction_context(sk, sid, prox_bone, dist_bone)
        return ctx
    return joint_context_for(sk, prox_bone, dist_bone, sid)


def build_portion(sk: Skeleton, bone_id: int, phi: float,
                  w_hint: np.ndarray | None = None) -> BaselinePortion:
    """Baseline portion at azimuth phi over the bone and its two neighbors."""
    if bone_id not in sk.bone_by_id:
        raise errors.DegenerateBone(f"unknown bone {bone_id}")
    g = sk.geom(bone_id)
    g_prox, g_dist = g.generatrix(phi)
    eps_len = sk.tol.surface

    elements: list[BaselineElement] = []
    anchors: list[AnchorPoint] = []
    separators: list[SeparatorPlane] = []
    keys = {bone_id: float(phi)}
    section_keys: list[tuple[int, int]] = []

    def make_segment(bid, p0, p1, c0, c1):
        return BaselineElement("segment", bid, None, p0, p1,
                               center0=c0, center1=c1,
                               dir0=vunit(p0 - c0), dir1=vunit(p1 - c1))

    def make_connector(sphere_center, a, b):
        if float(vnorm(b - a)) < 1e-12 * sk.scene_diagonal:
            return None
        return BaselineElement("segment", None, None, a, b,
                               center0=sphere_center, center1=sphere_center,
                               dir0=vunit(a - sphere_center),
                               dir1=vunit(b - sphere_center))

    def make_arc(sphere_id, sphere_center, inplane_center, normal, a, b):
        if float(vnorm(b - a)) < 1e-9 * sk.scene_diagonal:
            return None
        arc = _arc_between(inplane_center, normal, a, b)
        if arc is None or arc.length < 1e-9 * sk.scene_diagonal:
            return None
        return BaselineElement("arc", None, sphere_id, a, b, arc,
                               sphere_center=sphere_center)

    def side_result(distal: bool):
        w = g_dist if distal else g_prox
        ctx = joint_for(sk, bone_id, distal, w_hint if w_hint is not None else w)
        if ctx is None:
            return None, None
        cut = joint_cut(ctx, w[None], eps_len)
        return ctx, cut

    ctx_p, cut_p = side_result(False)
    ctx_d, cut_d = side_result(True)

    # --- proximal side elements (ordered prox -> dist along the portion)
    if ctx_p is None:
        arc = extremity_arc(g, phi, at_dist=False)
        if arc is not None:
            elements.append(BaselineElement("arc", None, sk.prox_sphere[bone_id],
                                            arc.point_at(0.0), arc.point_at(1.0), arc,
                                            sphere_center=g.prox_center))
            section_keys.append((bone_id, SEC_CAP_PROX))
        seg_start = g_prox
    else:
        other = ctx_p.prox if ctx_p.dist.bone_id == bone_id else ctx_p.dist
        crop = bool(cut_p.crop[0])
        anchor = cut_p.anchor[0]
        anchors.append(AnchorPoint(anchor, ctx_p.sphere_id,
                                   "segment-intersection" if crop else "on-arc"))
        separators.append(SeparatorPlane(ctx_p.separator, ctx_p.sphere_id,
                                         (other.bone_id, bone_id)))
        v_other = cut_p.v_prox[0] if other is ctx_p.prox else cut_p.v_dist[0]
        v_mine = cut_p.v_dist[0] if other is ctx_p.prox else cut_p.v_prox[0]
        far_other = _far_point(sk, other, v_other)
        keys[other.bone_id] = float(sk.geom(other.bone_id).azimuth_of(v_other))
        if crop:
            ce_other = cut_p.crop_end_prox[0] if other is ctx_p.prox \
                else cut_p.crop_end_dist[0]
            ce_base = cut_p.crop_end_dist[0] if other is ctx_p.prox \
                else cut_p.crop_end_prox[0]
            elements.append(make_segment(other.bone_id, far_other, ce_other,
                                         other.far_center, ctx_p.center))
            section_keys.append((other.bone_id, SEC_SEG))
            for conn in (make_connector(ctx_p.center, ce_other, anchor),
                         make_connector(ctx_p.center, anchor, ce_base)):
                if conn is not None:
                    elements.append(conn)
                    section_keys.append((bone_id, SEC_CONNECTOR))
            seg_start = ce_base
        else:
            elements.append(make_segment(other.bone_id, far_other, v_other,
                                         other.far_center, ctx_p.center))
            section_keys.append((other.bone_id, SEC_SEG))
            arc_o = make_arc(ctx_p.sphere_id, ctx_p.center, cut_p.c0[0],
                             cut_p.normal[0], v_other, anchor)
            if arc_o is not None:
                elements.append(arc_o)
                section_keys.append((other.bone_id,
                                     SEC_ARC_DIST if other is ctx_p.prox else SEC_ARC_PROX))
            arc_m = make_arc(ctx_p.sphere_id, ctx_p.center, cut_p.c0[0],
                             cut_p.normal[0], anchor, v_mine)
            if arc_m is not None:
                elements.append(arc_m)
                section_keys.append((bone_id, SEC_ARC_PROX))
            seg_start = v_mine

    # --- the base segment
    if ctx_d is None:
        seg_end = g_dist
    elif bool(cut_d.crop[0]):
        seg_end = cut_d.crop_end_prox[0] if ctx_d.prox.bone_id == bone_id \
            else cut_d.crop_end_dist[0]
    else:
        seg_end = cut_d.v_prox[0] if ctx_d.prox.bone_id == bone_id \
            else cut_d.v_dist[0]
    elements.append(make_segment(bone_id, seg_start, seg_end,
                                 g.prox_center, g.dist_center))
    section_keys.append((bone_id, SEC_SEG))

    # --- distal side
    if ctx_d is None:
        arc = extremity_arc(g, phi, at_dist=True)
        if arc is not None:
            elements.append(BaselineElement("arc", None, sk.dist_sphere[bone_id],
                                            arc.point_at(0.0), arc.point_at(1.0), arc,
                                            sphere_center=g.dist_center))
            section_keys.append((bone_id, SEC_CAP_DIST))
    else:
        other = ctx_d.prox if ctx_d.dist.bone_id == bone_id else ctx_d.dist
        crop = bool(cut_d.crop[0])
        anchor = cut_d.anchor[0]
        anchors.append(AnchorPoint(anchor, ctx_d.sphere_id,
                                   "segment-intersection" if crop else "on-arc"))
        separators.append(SeparatorPlane(ctx_d.separator, ctx_d.sphere_id,
                                         (bone_id, other.bone_id)))
        v_other = cut_d.v_prox[0] if other is ctx_d.prox else cut_d.v_dist[0]
        v_mine = cut_d.v_dist[0] if other is ctx_d.prox else cut_d.v_prox[0]
        far_other = _far_point(sk, other, v_other)
        keys[other.bone_id] = float(sk.geom(other.bone_id).azimuth_of(v_other))
        if crop:
            ce_other = cut_d.crop_end_prox[0] if other is ctx_d.prox \
                else cut_d.crop_end_dist[0]
            ce_base = cut_d.crop_end_dist[0] if other is ctx_d.prox \
                else cut_d.crop_end_prox[0]
            for conn in (make_connector(ctx_d.center, ce_base, anchor),
                         make_connector(ctx_d.center, anchor, ce_other)):
                if conn is not None:
                    elements.append(conn)
                    section_keys.append((bone_id, SEC_CONNECTOR))
            elements.append(make_segment(other.bone_id, ce_other, far_other,
                                         ctx_d.center, other.far_center))
            section_keys.append((other.bone_id, SEC_SEG))
        else:
            arc_m = make_arc(ctx_d.sphere_id, ctx_d.center, cut_d.c0[0],
                             cut_d.normal[0], v_mine, anchor)
            if arc_m is not None:
                elements.append(arc_m)
                section_keys.append((bone_id, SEC_ARC_DIST))
            arc_o = make_arc(ctx_d.sphere_id, ctx_d.center, cut_d.c0[0],
                             cut_d.normal[0], anchor, v_other)
            if arc_o is not None:
                elements.append(arc_o)
                section_keys.append((other.bone_id,
                                     SEC_ARC_PROX if other is ctx_d.dist else SEC_ARC_DIST))
            elements.append(make_segment(other.bone_id, v_other, far_other,
                                         ctx_d.center, other.far_center))
            section_keys.append((other.bone_id, SEC_SEG))

    return BaselinePortion(base_bone=bone_id, azimuth=float(phi), elements=elements,
                           anchors=anchors, separators=separators,
                           support_plane_keys=keys, section_of_element=section_keys)


def _far_point(sk: Skeleton, side: JointSide, v: np.ndarray) -> np.ndarray:
    """Far tangency endpoint of the neighbor's segment through v."""
    g = side.geom
    phi = float(g.azimuth_of(v))
    p0, p1 = g.generatrix(phi)
    # v sits at the joint end; return the other end
    if float(vnorm(v - p0)) < float(vnorm(v - p1)):
        return p1
    return p0


def select_branch(sk: Skeleton, bone_id: int, p_tilde: np.ndarray) -> BaselinePortion:
    """Portion whose support plane passes through p_tilde (branch containing it)."""
    g = sk.geom(bone_id)
    rho = float(g.radial_distance(p_tilde))
    if rho < sk.tol.cylinder:
        raise errors.AxisDegenerate("projection lies on the bone axis")
    phi = float(g.azimuth_of(p_tilde))
    return build_portion(sk, bone_id, phi, w_hint=p_tilde)


def sample_bundle(sk: Skeleton, bone_id: int, count: int, spacing: float):
    """Sampled baseline polylines at `count` azimuths (debug/UI export)."""
    out = []
    for k in range(count):
        phi = 2.0 * math.pi * k / count
        portion = build_portion(sk, bone_id, phi)
        out.append({"azimuth": phi,
                    "points": portion.polyline(spacing).tolist()})
    return out
