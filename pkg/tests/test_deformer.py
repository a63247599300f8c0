import math

import numpy as np
import pytest

from bskin import baseline as bl
from bskin import deformer as dfm
from bskin import errors, geom
from bskin import skeleton as sko
from bskin import synthetic as syn
from conftest import bend_pose, twist_pose


def pose_ctx(sk, pose=None):
    return dfm.PoseContext.build(sk, pose if pose is not None else sko.identity_pose())


# --- twist profile ------------------------------------------------------------

def test_twist_profile_endpoints_and_mid():
    tau = 0.8
    assert dfm.twist_profile(0.0, tau) == 0.0
    assert dfm.twist_profile(1.0, tau) == pytest.approx(tau, abs=0)
    assert dfm.twist_profile(0.5, tau) == pytest.approx(0.5 * tau, abs=1e-15)


def test_twist_profile_zero_end_slopes():
    # central finite differences of the cubic at the endpoints (step 1e-4)
    tau = 1.0
    h = 1e-4

    def cubic(d):
        return tau * dfm.profile_value(d, "cubic")

    d0 = (cubic(0.0 + h) - cubic(0.0 - h)) / (2 * h)
    d1 = (cubic(1.0 + h) - cubic(1.0 - h)) / (2 * h)
    assert abs(d0) < 1e-6
    assert abs(d1) < 1e-6


def test_twist_profile_domain():
    with pytest.raises(errors.OutOfRange):
        dfm.twist_profile(1.2, 1.0)


# --- bend target resolution ----------------------------------------------------

def test_resolve_zero_bend_is_identity(straight2):
    pc = pose_ctx(straight2)
    v, x, thv, thx, plane = dfm.resolve_bend_targets(pc, 0, 1.1)
    g = straight2.geom(0)
    v0 = g.generatrix(1.1)[1]
    assert np.allclose(v, v0, atol=1e-12)
    assert thv == 0.0 and thx == 0.0


def test_resolve_targets_consistency(cones2):
    # rotating the rigid endpoint by theta about the bone axis lands on V'
    pose = sko.Pose(bends=(sko.Bend(1, geom.vunit(np.array([0.3, 0.2, 1.0])), 0.9),))
    pc = pose_ctx(cones2, pose)
    for phi in (0.0, 1.2, 2.5, 4.0):
        v_p, x_p, thv, thx, plane = dfm.resolve_bend_targets(pc, 0, phi)
        g0 = pc.sk_scaled.geom(0)
        V0 = g0.generatrix(phi)[1]
        gp = dfm.posed_geom(g0, pc.transform(0))
        got = geom.rotate_points(pc.transform(0).apply(V0), gp.prox_center, gp.u, thv)
        assert np.linalg.norm(got - v_p) < 1e-9
        # V' and X' lie in the intermediate plane together with the sheaf
        assert abs(plane.signed_distance(x_p)) < 1e-9


def test_resolve_symmetric_magnitudes():
    # mirror-symmetric joint: equal radii and lengths; bend in the symmetry
    # plane gives |theta_v| == |theta_x|
    sk = syn.chain_skeleton(2, length=4.0, radii=[1.2, 1.0, 1.2])
    pose = bend_pose(1, np.deg2rad(50))
    pc = pose_ctx(sk, pose)
    for phi in (0.4, 1.0, 2.0):
        _, _, thv, thx, _ = dfm.resolve_bend_targets(pc, 0, phi)
        assert abs(abs(thv) - abs(thx)) < 1e-9


# --- deform_segment -------------------------------------------------------------

def test_deform_segment_zero_angles():
    p0 = np.array([0.0, 0, 1])
    p1 = np.array([4.0, 0, 1])
    out = dfm.deform_segment(p0, p1, np.zeros(3), np.array([1.0, 0, 0]), 0.0, 0.0)
    d = np.linspace(0, 1, len(out))
    expect = p0 + d[:, None] * (p1 - p0)
    assert np.abs(out - expect).max() < 1e-12


def test_deform_segment_cubic_midpoint():
    p0 = np.array([0.0, 0, 1])
    p1 = np.array([4.0, 0, 1])
    theta = 0.6
    out = dfm.deform_segment(p0, p1, np.zeros(3), np.array([1.0, 0, 0]), 0.0, theta,
                             samples=65)
    mid = out[32]
    ang = math.atan2(mid[1], mid[2])
    assert abs(ang - (-theta / 2)) < 1e-12 or abs(ang - theta / 2) < 1e-12


def test_deform_segment_pure_twist_endpoints():
    p0 = np.array([0.0, 0, 1])
    p1 = np.array([4.0, 0, 1])
    tau = 1.1
    out = dfm.deform_segment(p0, p1, np.zeros(3), np.array([1.0, 0, 0]), 0.0, tau)
    assert np.allclose(out[0], p0, atol=1e-12)
    rot = geom.rotate_points(p1, np.zeros(3), np.array([1.0, 0, 0]), tau)
    assert np.allclose(out[-1], rot, atol=1e-12)


# --- reconnect -------------------------------------------------------------------

def test_reconnect_convex_arc_c1(straight2):
    pose = bend_pose(1, np.deg2rad(50))
    pc = pose_ctx(straight2, pose)
    dp = dfm.deform_portion(pc, 0, math.pi)  # outer side
    kinds = [p.kind for p in dp.pieces]
    assert "arc" in kinds
    for prev, nxt in zip(dp.pieces[:-1], dp.pieces[1:]):
        if prev.tangent_end is None or nxt.tangent_start is None:
            continue
        ang = math.acos(min(1.0, max(-1.0,
                                     float(np.dot(prev.tangent_end, nxt.tangent_start)))))
        assert ang < 1e-6


def test_reconnect_concave_crop_on_separator(straight2):
    pose = bend_pose(1, np.deg2rad(50))
    pc = pose_ctx(straight2, pose)
    dp = dfm.deform_portion(pc, 0, 0.0)  # inner side
    assert any(p.kind == "connector" for p in dp.pieces)
    sep = dp.separators[0]
    anchor = dp.anchors[0]
    assert abs(sep.signed_distance(anchor)) < 1e-7 * straight2.scene_diagonal


def test_reconnect_straight_joint_unchanged(straight2):
    pc = pose_ctx(straight2)
    dp = dfm.deform_portion(pc, 0, 0.7)
    p0 = bl.build_portion(straight2, 0, 0.7)
    # polyline chord length vs analytic arc length: discretization only
    assert abs(dp.total_length - p0.total_length) < 1e-4 * straight2.scene_diagonal


# --- deform_portion ---------------------------------------------------------------

def test_deform_portion_identity_matches_initial(cones2):
    pc = pose_ctx(cones2)
    for phi in (0.0, 1.0, 2.2):
        dp = dfm.deform_portion(pc, 0, phi)
        p0 = bl.build_portion(cones2, 0, phi)
        a = dp.polyline()
        # every deformed sample sits on the initial portion's polyline
        b = p0.polyline(0.002 * cones2.scene_diagonal)
        from test_baseline import polyline_pair_min_distance
        assert polyline_pair_min_distance(a, b) < 1e-5


def test_single_joint_bend_keeps_far_endpoints(straight2):
    # U = U' and Y = Y': the far segment endpoints stay put under one bend
    pose = bend_pose(1, np.deg2rad(60))
    pc = pose_ctx(straight2, pose)
    for phi in (0.0, 1.0, math.pi):
        dp = dfm.deform_portion(pc, 0, phi)
        curves = [p for p in dp.pieces if p.kind == "curve"]
        U = curves[0].polyline[0]
        g0 = straight2.geom(0)
        assert np.linalg.norm(U - g0.generatrix(phi)[0]) < 1e-9
        Ypiece = curves[-1]
        Y = Ypiece.polyline[-1]
        # Y moves rigidly with bone 1
        T = pc.transform(1)
        phi1 = bl.build_portion(straight2, 0, phi).support_plane_keys[1]
        Y0 = straight2.geom(1).generatrix(phi1)[1]
        assert np.linalg.norm(Y - T.apply(Y0)) < 1e-9


def test_double_bend_middle_bone_interpolates(chain3):
    pose = sko.Pose(bends=(sko.Bend(1, np.array([0.0, 0, 1]), 0.6),
                           sko.Bend(2, np.array([0.0, 0, 1]), -0.5)))
    pc = pose_ctx(chain3, pose)
    phi = 1.3
    setup_p = dfm.joint_setup(pc, 1, False, None)
    setup_d = dfm.joint_setup(pc, 1, True, None)
    bgd = dfm.bone_group_deform(pc, 1, np.array([phi]), "cubic", setup_p, setup_d)
    # rotation angle at the curve ends equals the per-end targets
    assert bgd.res_p is not None and bgd.res_d is not None
    thp = float(bgd.theta_P[0])
    thd = float(bgd.theta_D[0])
    assert thp != 0.0 and thd != 0.0
    g0 = pc.sk_scaled.geom(1)
    gp = dfm.posed_geom(g0, pc.transform(1))
    end0 = bgd.curve_points(np.array([0.0]))[0]
    expect0 = geom.rotate_points(pc.transform(1).apply(g0.generatrix(phi)[0]),
                                 gp.prox_center, gp.u, thp)
    assert np.linalg.norm(end0 - expect0) < 1e-9


def test_on_surface_invariant(straight2):
    pose = bend_pose(1, np.deg2rad(70))
    pc = pose_ctx(straight2, pose)
    tol = 1e-6 * straight2.scene_diagonal
    for phi in np.linspace(0, 2 * math.pi, 8, endpoint=False):
        dp = dfm.deform_portion(pc, 0, phi)
        for piece in dp.pieces:
            if piece.kind == "curve":
                bid = piece.key[0]
                g = dfm.posed_geom(pc.sk_scaled.geom(bid), pc.transform(bid))
                d = g.signed_surface_distance(piece.polyline)
                assert np.abs(d).max() < tol
            elif piece.kind == "arc":
                # joint arcs live on the shared sphere
                C = pc.transform(0).apply(pc.sk_scaled.sphere_by_id[1].center)
                r = pc.sk_scaled.sphere_by_id[1].radius
                d = np.linalg.norm(piece.polyline - C, axis=1) - r
                assert np.abs(d).max() < tol


def test_bundle_non_crossing_after_bend(straight2):
    from test_baseline import polyline_pair_min_distance
    pose = bend_pose(1, np.deg2rad(90))
    pc = pose_ctx(straight2, pose)
    polys = []
    for k in range(64):
        phi = 2 * math.pi * k / 64
        dp = dfm.deform_portion(pc, 0, phi)
        polys.append(dp.polyline()[3:-1])
    bad = 0
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if polyline_pair_min_distance(polys[i], polys[j]) <= 1e-9:
                bad += 1
    assert bad == 0


def test_determinism_bitwise(straight2):
    pose = sko.Pose(bends=(sko.Bend(1, np.array([0.0, 0, 1]), 0.9),),
                    twists={0: 0.4})
    pc1 = pose_ctx(straight2, pose)
    pc2 = pose_ctx(straight2, pose)
    a = dfm.deform_portion(pc1, 0, 0.8).polyline()
    b = dfm.deform_portion(pc2, 0, 0.8).polyline()
    assert np.array_equal(a, b)


# --- six bend-case coverage -------------------------------------------------------

def classify_case(sk, pose_angle, phi):
    cut0 = bl.joint_cut(bl.joint_context_for(sk, 0, 1, 1),
                        sk.geom(0).generatrix(phi)[1][None], sk.tol.surface)
    initial_crop = bool(cut0.crop[0])
    pose = bend_pose(1, np.deg2rad(pose_angle))
    pc = pose_ctx(sk, pose)
    setup = dfm.joint_setup(pc, 0, True, None)
    ctx = setup.ctx_detw
    g0 = pc.sk_scaled.geom(0)
    V0 = g0.generatrix(phi)[1]
    cutm0 = bl.joint_cut(setup.ctx0, V0[None], sk.tol.surface)
    X0 = cutm0.v_dist[0]
    Va = pc.transform(0).apply(V0)
    Xb = pc.transform(1).apply(X0)
    cand1 = bl.joint_cut(ctx, Xb[None], sk.tol.surface)
    cand2 = bl.joint_cut(ctx, Va[None], sk.tol.surface)
    dp = dfm.deform_portion(pc, 0, phi)
    return initial_crop, bool(cand1.crop[0]), bool(cand2.crop[0]), dp, pc


# asymmetric cones separate the two candidate planes' crop thresholds,
# producing the mixed configurations alongside the pure ones
SIX_CASES = [
    # (radii, rest bend deg, pose bend deg, azimuth, expected class)
    ([1.6, 1.0, 0.55], 30.0, -15.0, 0.0, ("concave", "concave")),
    ([1.6, 1.0, 0.55], 20.0, -120.0, 1.69, ("convex", "concave")),
    ([1.6, 1.0, 0.55], 20.0, -60.0, 0.0, ("concave", "convex")),
    ([1.6, 1.0, 0.55], 20.0, -60.0, 1.43, ("concave", "mixed")),
    ([1.6, 1.0, 0.55], 20.0, -60.0, 1.7766, ("convex", "mixed")),
    ([1.6, 1.0, 0.55], 10.0, 15.0, 1.7952, ("convex", "convex")),
]


def test_six_bend_cases_connected_and_on_surface():
    found = set()
    for radii, rest, pose_a, phi, expect in SIX_CASES:
        sk = syn.bent_chain([rest], length=4.0, radii=radii)
        initial_crop, c1, c2, dp, pc = classify_case(sk, pose_a, phi)
        cand_kind = "mixed" if c1 != c2 else ("concave" if c1 else "convex")
        case = ("concave" if initial_crop else "convex", cand_kind)
        assert case == expect
        found.add(case)
        poly = dp.polyline()
        steps = np.linalg.norm(np.diff(poly, axis=0), axis=1)
        assert steps.max() < 0.35  # densely sampled, no jumps
        for piece in dp.pieces:
            if piece.kind != "curve":
                continue
            bid = piece.key[0]
            g = dfm.posed_geom(pc.sk_scaled.geom(bid), pc.transform(bid))
            d = g.signed_surface_distance(piece.polyline)
            assert np.abs(d).max() < 1e-6 * sk.scene_diagonal
    assert len(found) == 6


def test_deformed_direction_field_rules(straight2):
    pose = bend_pose(1, np.deg2rad(50))
    pc = pose_ctx(straight2, pose)
    sampler = dfm.deformed_direction_field(pc, dfm.deform_portion(pc, 0, math.pi))
    # posed cap point: sphere normal
    g0p = dfm.posed_geom(pc.sk_scaled.geom(0), pc.transform(0))
    cap_pt = g0p.prox_center + g0p.r_prox * geom.vunit(np.array([-1.0, 0.2, 0.1]))
    d, sb = sampler(cap_pt, (0, bl.SEC_CAP_PROX))
    assert np.allclose(d, geom.vunit(cap_pt - g0p.prox_center), atol=1e-12)
    assert sb == 1.0
    # posed convex-side segment point: the cylinder normal, sin beta = 1
    seg_pt = np.array([2.0, -1.0, 0.0])
    d, sb = sampler(seg_pt, (0, bl.SEC_SEG))
    assert np.allclose(d, [0, -1, 0], atol=1e-9)
    assert sb == pytest.approx(1.0, abs=1e-12)
    # concave anchor: radial from the joint sphere center
    dp = dfm.deform_portion(pc, 0, 0.0)
    anchor = dp.anchors[0]
    d, sb = sampler(anchor, (0, bl.SEC_ARC_DIST))
    C = pc.transform(0).apply(pc.sk_scaled.sphere_by_id[1].center)
    assert np.allclose(d, geom.vunit(anchor - C), atol=1e-12)


from hypothesis import given, settings
from hypothesis import strategies as st


@settings(max_examples=80, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=-6.0, max_value=6.0, allow_nan=False))
def test_twist_profile_properties(d, tau):
    v = dfm.twist_profile(d, tau)
    # monotone ramp between 0 and tau, bounded by its endpoints
    lo, hi = min(0.0, tau), max(0.0, tau)
    assert lo - 1e-12 <= v <= hi + 1e-12
    if d >= 0.5:
        assert abs(v) >= abs(dfm.twist_profile(0.5, tau)) - 1e-12
