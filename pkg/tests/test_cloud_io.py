import numpy as np
import pytest

from bskin import errors
from bskin.cloud_io import PointCloud, load_cloud, save_cloud


def test_xyz_three_lines(tmp_path):
    p = tmp_path / "c.xyz"
    p.write_text("0 0 0\n1 0 0\n0 1 0\n")
    c = load_cloud(p)
    assert len(c) == 3
    assert np.allclose(c.positions[1], [1, 0, 0])


def test_xyz_empty(tmp_path):
    p = tmp_path / "c.xyz"
    p.write_text("")
    c = load_cloud(p)
    assert len(c) == 0
    save_cloud(c, tmp_path / "out.xyz")
    assert load_cloud(tmp_path / "out.xyz").positions.shape == (0, 3)


def test_xyz_parse_error_has_line(tmp_path):
    p = tmp_path / "c.xyz"
    p.write_text("0 0 0\n1 nope 0\n")
    with pytest.raises(errors.ParseError, match=":2"):
        load_cloud(p)


def test_xyz_f64_lossless(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((200, 3)) * np.pi
    save_cloud(PointCloud(pts), tmp_path / "c.xyz")
    back = load_cloud(tmp_path / "c.xyz")
    assert np.array_equal(back.positions, pts)


def test_ply_binary_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    pts = rng.standard_normal((1000, 3))
    colors = rng.integers(0, 256, size=(1000, 3)).astype(np.uint8)
    save_cloud(PointCloud(pts, colors), tmp_path / "c.ply")
    back = load_cloud(tmp_path / "c.ply")
    assert np.array_equal(back.positions, pts)
    assert np.array_equal(back.colors, colors)
    # save->load->save is byte identical
    save_cloud(back, tmp_path / "c2.ply")
    assert (tmp_path / "c.ply").read_bytes() == (tmp_path / "c2.ply").read_bytes()


def test_ply_ascii(tmp_path):
    p = tmp_path / "a.ply"
    p.write_bytes(b"""ply
format ascii 1.0
comment hand written
element vertex 3
property float x
property float y
property float z
property float confidence
end_header
0 0 0 0.5
1 0 0 0.5
0 2 0 0.5
""")
    c = load_cloud(p)
    assert len(c) == 3
    assert np.allclose(c.positions[2], [0, 2, 0])


def test_ply_unknown_properties_skipped(tmp_path):
    n = 10
    rng = np.random.default_rng(2)
    pts32 = rng.standard_normal((n, 3)).astype(np.float32)
    extra = rng.standard_normal(n).astype(np.float32)
    header = (b"ply\nformat binary_little_endian 1.0\n"
              b"element vertex 10\n"
              b"property float x\nproperty float y\nproperty float z\n"
              b"property float curvature\nend_header\n")
    body = np.zeros(n, dtype=[("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                              ("c", "<f4")])
    body["x"], body["y"], body["z"] = pts32.T
    body["c"] = extra
    p = tmp_path / "b.ply"
    p.write_bytes(header + body.tobytes())
    c = load_cloud(p)
    assert np.allclose(c.positions, pts32.astype(np.float64))


def test_ply_truncated(tmp_path):
    header = (b"ply\nformat binary_little_endian 1.0\nelement vertex 5\n"
              b"property double x\nproperty double y\nproperty double z\n"
              b"end_header\n")
    p = tmp_path / "t.ply"
    p.write_bytes(header + b"\0" * 10)
    with pytest.raises(errors.ParseError, match="truncated"):
        load_cloud(p)


def test_ply_dragon_count_roundtrip(tmp_path):
    # 532,067-vertex binary PLY: load -> save -> load bit-identical
    n = 532_067
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((n, 3))
    save_cloud(PointCloud(pts), tmp_path / "dragon.ply")
    a = load_cloud(tmp_path / "dragon.ply")
    save_cloud(a, tmp_path / "dragon2.ply")
    b = load_cloud(tmp_path / "dragon2.ply")
    assert len(b) == n
    assert np.array_equal(a.positions, b.positions)


def test_unknown_format(tmp_path):
    p = tmp_path / "c.obj"
    p.write_text("")
    with pytest.raises(errors.UnsupportedFormat):
        load_cloud(p, format="obj")


def test_missing_file():
    with pytest.raises(errors.IoError):
        load_cloud("/nonexistent/c.xyz")
