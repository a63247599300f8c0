import math

import numpy as np
import pytest

from bskin import baseline as bl
from bskin import errors, geom
from bskin import synthetic as syn


def polyline_pair_min_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Min distance between points of a and segments of b (discrete test)."""
    p0 = b[:-1]
    seg = b[1:] - b[:-1]
    L2 = np.maximum(geom.vdot(seg, seg), 1e-300)
    best = np.inf
    for chunk in np.array_split(a, max(1, len(a) // 256)):
        w = chunk[:, None, :] - p0[None, :, :]
        t = np.clip(np.einsum("ijk,jk->ij", w, seg) / L2, 0.0, 1.0)
        d = w - t[..., None] * seg[None]
        best = min(best, float(np.sqrt((d * d).sum(-1)).min()))
    return best


def test_portion_straight_collinear(straight2):
    p = bl.build_portion(straight2, 0, 0.0)
    segs = [e for e in p.elements if e.kind == "segment"]
    assert len(segs) == 2
    d0 = geom.vunit(segs[0].p1 - segs[0].p0)
    d1 = geom.vunit(segs[1].p1 - segs[1].p0)
    assert np.allclose(d0, d1, atol=1e-12)  # collinear cylinders
    assert len(p.anchors) == 1
    sep = p.separators[0]
    assert abs(sep.plane.signed_distance(p.anchors[0].position)) < 1e-9


def test_portion_bent_has_c1_arc(bent2):
    # convex side of the 90-degree rest bend (bend turns toward +y, so the
    # outer side is azimuth pi in bone 0's frame)
    p = bl.build_portion(bent2, 0, math.pi)
    kinds = [e.kind for e in p.elements]
    assert "arc" in kinds
    _assert_c1(p)


def test_portion_tangent_plane_side(bent2):
    # side azimuths graze the joint sphere: single-component cut, connected
    p = bl.build_portion(bent2, 0, -math.pi / 2)
    for prev, nxt in zip(p.elements[:-1], p.elements[1:]):
        assert np.linalg.norm(prev.p1 - nxt.p0) < 1e-9


def _assert_c1(portion, tol=1e-6):
    for prev, nxt in zip(portion.elements[:-1], portion.elements[1:]):
        if prev.kind == nxt.kind == "segment":
            continue  # segment-segment joins are anchors (C0 by design)
        t_prev = prev.tangent_at(1.0)
        t_next = nxt.tangent_at(0.0)
        ang = math.acos(min(1.0, max(-1.0, float(np.dot(t_prev, t_next)))))
        assert ang < tol, f"tangent mismatch {ang} between {prev.kind} and {nxt.kind}"


def test_portion_concave_anchor_is_crossing(bent2):
    p = bl.build_portion(bent2, 0, 0.0)
    assert p.anchors[0].kind == "segment-intersection"
    sep = p.separators[0]
    assert abs(sep.plane.signed_distance(p.anchors[0].position)) < 1e-9


def test_free_extremity_arc_reaches_pole(straight2):
    p = bl.build_portion(straight2, 0, 0.0)
    first = p.elements[0]
    assert first.kind == "arc"
    g = straight2.geom(0)
    pole = g.prox_center - g.r_prox * g.u
    assert np.allclose(first.p0, pole, atol=1e-9)


def test_portion_coplanarity_initial(bent2_soft):
    # both segments of the joint pair plus the apexes lie in one plane; for
    # cylinders the sheaf is the parallel family, so test with cones
    sk = syn.bent_chain([40.0], length=4.0, radii=[1.3, 1.0, 0.8])
    p = bl.build_portion(sk, 0, 1.0)
    segs = [e for e in p.elements if e.kind == "segment"]
    a0 = sk.geom(0).apex
    a1 = sk.geom(1).apex
    # plane spanned by the two segments; apexes and endpoints must lie in it
    n = geom.vunit(np.cross(segs[0].p1 - segs[0].p0, segs[1].p1 - segs[0].p0))
    pts = np.vstack([segs[0].p1, segs[1].p0, segs[1].p1, a0, a1])
    d = np.abs(geom.vdot(pts - segs[0].p0, n))
    assert d.max() < 1e-7 * sk.scene_diagonal


def test_select_branch_contains_projection(bent2):
    for side, phi_expect in ((np.array([2.0, 0, 1.2]), None),
                             (np.array([2.0, -1.2, 0.0]), None)):
        p_t = side / 1.0
        portion = bl.select_branch(bent2, 0, p_t)
        poly = portion.polyline(0.01 * bent2.scene_diagonal)
        d = np.linalg.norm(poly - p_t, axis=1).min()
        # p_tilde itself is off-surface here; just require the branch passes
        # near its azimuth ray rather than the opposite one
        assert d < 2.5


def test_select_branch_axis_degenerate(straight2):
    with pytest.raises(errors.AxisDegenerate):
        bl.select_branch(straight2, 0, np.array([2.0, 0.0, 0.0]))


def test_junction_pivot_coordinate(yjunction):
    sid = 0
    pairs = bl.junction_pairs(yjunction, sid)
    assert len(pairs) == 3
    pair = pairs[0]
    ctx = bl.junction_context(yjunction, sid, *pair)
    a0, a1 = bl.junction_cell_range(yjunction, sid, pair)
    p_start = ctx.pivot_point(a0)
    p_end = ctx.pivot_point(a1)
    p_mid = ctx.pivot_point(0.5 * (a0 + a1))
    assert bl.junction_pivot_coordinate(yjunction, sid, pair, p_start) == pytest.approx(0.0, abs=1e-6)
    assert bl.junction_pivot_coordinate(yjunction, sid, pair, p_end) == pytest.approx(1.0, abs=1e-6)
    assert bl.junction_pivot_coordinate(yjunction, sid, pair, p_mid) == pytest.approx(0.5, abs=5e-3)


def test_junction_wrong_cell(yjunction):
    pair = (0, 1)
    ctx = bl.junction_context(yjunction, 0, 0, 2)
    a0, a1 = bl.junction_cell_range(yjunction, 0, (0, 2))
    point_in_other_cell = ctx.pivot_point(0.5 * (a0 + a1))
    with pytest.raises(errors.WrongCell):
        bl.junction_pivot_coordinate(yjunction, 0, pair, point_in_other_cell)


def test_bundle_non_crossing_initial(straight2):
    spacing = 0.01 * straight2.scene_diagonal
    polys = []
    for k in range(64):
        phi = 2 * math.pi * k / 64
        p = bl.build_portion(straight2, 0, phi)
        poly = p.polyline(spacing)
        polys.append(poly[3:-1])  # trim the shared pole end
    bad = 0
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if polyline_pair_min_distance(polys[i], polys[j]) <= 1e-9:
                bad += 1
    assert bad == 0


def test_anchor_on_separator_many_azimuths(bent2_soft):
    for phi in np.linspace(0, 2 * math.pi, 17, endpoint=False):
        p = bl.build_portion(bent2_soft, 0, phi)
        for anchor, sep in zip(p.anchors, p.separators):
            assert abs(sep.plane.signed_distance(anchor.position)) \
                < 1e-7 * bent2_soft.scene_diagonal


def test_segment_endpoints_on_cone_surface(cones2):
    tol = 1e-7 * cones2.scene_diagonal
    for phi in np.linspace(0, 2 * math.pi, 9, endpoint=False):
        p = bl.build_portion(cones2, 0, phi)
        for e, (bid, code) in zip(p.elements, p.section_of_element):
            if e.kind != "segment":
                continue
            g = cones2.geom(e.bone_id)
            d = g.signed_surface_distance(np.vstack([e.p0, e.p1]))
            assert np.abs(d).max() < tol


def test_c1_everywhere_on_cones(cones2):
    for phi in np.linspace(0, 2 * math.pi, 9, endpoint=False):
        _assert_c1(bl.build_portion(cones2, 0, phi))
