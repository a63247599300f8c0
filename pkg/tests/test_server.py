import json
import struct
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from bskin import skeleton as sko
from bskin import synthetic as syn
from bskin.server import ModelState, pack_points, start_server

PORT = 18293


@pytest.fixture(scope="module")
def server():
    sk = syn.chain_skeleton(2, length=4.0, radii=1.0)
    pts, reg = syn.offset_cloud(sk, 0.1, stations=10, azimuths=16)
    state = ModelState(sk, reg, pts)
    httpd, thread = start_server(PORT, state)
    yield state
    httpd.shutdown()


def get(path):
    return urllib.request.urlopen(f"http://127.0.0.1:{PORT}{path}", timeout=10).read()


def post(path, obj):
    req = urllib.request.Request(
        f"http://127.0.0.1:{PORT}{path}", data=json.dumps(obj).encode(),
        headers={"Content-Type": "application/json"})
    return urllib.request.urlopen(req, timeout=20).read()


def unpack(body):
    (count,) = struct.unpack("<I", body[:4])
    assert len(body) == 4 + 12 * count
    return np.frombuffer(body[4:], dtype="<f4").reshape(count, 3)


def test_health(server):
    assert json.loads(get("/api/health")) == {"status": "ok"}


def test_skeleton_endpoint(server):
    d = json.loads(get("/api/skeleton"))
    assert d["version"] == 1
    assert len(d["bones"]) == 2
    assert d["point_count"] == len(server.points)


def test_points_binary_format(server):
    body = get("/api/points?lod=64")
    pts = unpack(body)
    assert len(pts) == 64


def test_lod_counts(server):
    n = len(server.points)
    for k in (10, n, 10 * n):
        pts = unpack(get(f"/api/points?lod={k}"))
        assert len(pts) == min(k, n)


def test_identity_pose_bytes_equal_points(server):
    a = get("/api/points?lod=100")
    b = post("/api/pose", {"version": 1, "pose": {}, "lod": 100})
    assert a == b


def test_pose_moves_points(server):
    a = unpack(get("/api/points?lod=200"))
    b = unpack(post("/api/pose", {
        "pose": {"bends": [{"joint_sphere_id": 1, "axis": [0, 0, 1],
                            "angle_rad": 0.8}]},
        "lod": 200}))
    assert np.abs(a - b).max() > 0.1


def test_malformed_pose_400(server):
    req = urllib.request.Request(
        f"http://127.0.0.1:{PORT}/api/pose", data=b"{broken",
        headers={"Content-Type": "application/json"})
    with pytest.raises(urllib.error.HTTPError) as e:
        urllib.request.urlopen(req, timeout=10)
    assert e.value.code == 400


def test_unknown_joint_409(server):
    with pytest.raises(urllib.error.HTTPError) as e:
        post("/api/pose", {"pose": {"bends": [{"joint_sphere_id": 77,
                                               "axis": [0, 0, 1],
                                               "angle_rad": 0.1}]}})
    assert e.value.code == 409


def test_methods(server):
    for method in ("lbs", "dqs", "baseline"):
        body = post("/api/pose", {
            "pose": {"bends": [{"joint_sphere_id": 1, "axis": [0, 0, 1],
                                "angle_rad": 0.5}]},
            "method": method, "lod": 50})
        assert len(unpack(body)) == 50


def test_baselines_endpoint(server):
    d = json.loads(get("/api/baselines?count=4"))
    assert d["version"] == 1
    assert len(d["baselines"]) == 4


def test_concurrent_poses_independent(server):
    results = {}

    def run(name, angle):
        body = post("/api/pose", {
            "pose": {"bends": [{"joint_sphere_id": 1, "axis": [0, 0, 1],
                                "angle_rad": angle}]},
            "lod": 100})
        results[name] = body

    t1 = threading.Thread(target=run, args=("a", 0.4))
    t2 = threading.Thread(target=run, args=("b", 1.2))
    t1.start(); t2.start(); t1.join(); t2.join()
    ref_a = post("/api/pose", {"pose": {"bends": [{"joint_sphere_id": 1,
                                                   "axis": [0, 0, 1],
                                                   "angle_rad": 0.4}]},
                               "lod": 100})
    ref_b = post("/api/pose", {"pose": {"bends": [{"joint_sphere_id": 1,
                                                   "axis": [0, 0, 1],
                                                   "angle_rad": 1.2}]},
                               "lod": 100})
    assert results["a"] == ref_a
    assert results["b"] == ref_b


def test_pack_points_length():
    body = pack_points(np.zeros((7, 3)))
    assert len(body) == 4 + 12 * 7
