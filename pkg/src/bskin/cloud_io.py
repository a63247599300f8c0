"""Point cloud I/O: whitespace xyz and PLY (ascii / binary little-endian)."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import errors

_PLY_TYPES = {
    "char": "i1", "uchar": "u1", "int8": "i1", "uint8": "u1",
    "short": "i2", "ushort": "u2", "int16": "i2", "uint16": "u2",
    "int": "i4", "uint": "u4", "int32": "i4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


@dataclass
class PointCloud:
    positions: np.ndarray                 # (n, 3) float64
    colors: np.ndarray | None = None      # (n, 3) uint8

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        if not np.all(np.isfinite(self.positions)):
            raise errors.ParseError("point cloud contains non-finite coordinates")

    def __len__(self):
        return len(self.positions)


def load_cloud(path, format: str | None = None) -> PointCloud:
    if not os.path.exists(path):
        raise errors.IoError(f"no such file: {path}")
    fmt = format or _guess_format(path)
    if fmt == "xyz":
        return _load_xyz(path)
    if fmt == "ply":
        return _load_ply(path)
    raise errors.UnsupportedFormat(f"unknown cloud format {fmt!r}")


def save_cloud(cloud: PointCloud, path, format: str | None = None):
    fmt = format or _guess_format(path)
    try:
        if fmt == "xyz":
            _save_xyz(cloud, path)
        elif fmt == "ply":
            _save_ply(cloud, path)
        else:
            raise errors.UnsupportedFormat(f"unknown cloud format {fmt!r}")
    except OSError as e:
        raise errors.IoError(f"cannot write {path}: {e}") from e


def _guess_format(path) -> str:
    ext = os.path.splitext(str(path))[1].lower().lstrip(".")
    return ext if ext in ("xyz", "ply") else "xyz"


def _load_xyz(path) -> PointCloud:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) < 3:
                raise errors.ParseError(f"{path}:{lineno}: expected at least 3 columns")
            try:
                rows.append([float(parts[0]), float(parts[1]), float(parts[2])])
            except ValueError as e:
                raise errors.ParseError(f"{path}:{lineno}: {e}") from e
    return PointCloud(np.asarray(rows, dtype=np.float64).reshape(-1, 3))


def _save_xyz(cloud: PointCloud, path):
    with open(path, "w", encoding="utf-8") as f:
        for p in cloud.positions:
            f.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")


def _read_ply_header(f):
    magic = f.readline()
    if magic.strip() != b"ply":
        raise errors.ParseError("not a PLY file (missing 'ply' magic)")
    fmt = None
    elements = []  # (name, count, [(prop_name, dtype_str)])
    while True:
        line = f.readline()
        if not line:
            raise errors.ParseError("unexpected EOF in PLY header")
        tok = line.decode("ascii", "replace").strip().split()
        if not tok:
            continue
        if tok[0] == "comment":
            continue
        if tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "element":
            elements.append((tok[1], int(tok[2]), []))
        elif tok[0] == "property":
            if tok[1] == "list":
                elements[-1][2].append((tok[-1], ("list", tok[2], tok[3])))
            else:
                if tok[1] not in _PLY_TYPES:
                    raise errors.ParseError(f"unsupported PLY property type {tok[1]}")
                elements[-1][2].append((tok[-1], _PLY_TYPES[tok[1]]))
        elif tok[0] == "end_header":
            break
    if fmt not in ("ascii", "binary_little_endian"):
        raise errors.UnsupportedFormat(f"unsupported PLY format {fmt!r}")
    return fmt, elements


def _load_ply(path) -> PointCloud:
    with open(path, "rb") as f:
        fmt, elements = _read_ply_header(f)
        vertex = next((e for e in elements if e[0] == "vertex"), None)
        if vertex is None:
            raise errors.ParseError("PLY file has no vertex element")
        _, count, props = vertex
        names = [p[0] for p in props]
        for need in ("x", "y", "z"):
            if need not in names:
                raise errors.ParseError(f"PLY vertex element lacks property {need!r}")
        if any(isinstance(p[1], tuple) for p in props):
            raise errors.UnsupportedFormat("list properties on vertices not supported")
        if fmt == "binary_little_endian":
            dt = np.dtype([(p[0], "<" + p[1]) for p in props])
            buf = f.read(dt.itemsize * count)
            if len(buf) != dt.itemsize * count:
                raise errors.ParseError(
                    f"PLY vertex data truncated at byte {f.tell()}")
            data = np.frombuffer(buf, dtype=dt, count=count)
        else:
            rows = []
            for i in range(count):
                line = f.readline()
                if not line:
                    raise errors.ParseError(f"PLY ascii data truncated at vertex {i}")
                rows.append(line.split()[:len(props)])
            arr = np.asarray(rows)
            data = np.zeros(count, dtype=np.dtype([(p[0], "<" + p[1]) for p in props]))
            for j, (name, _) in enumerate(props):
                data[name] = arr[:, j].astype(np.float64)
        pos = np.column_stack([data["x"], data["y"], data["z"]]).astype(np.float64)
        colors = None
        if all(c in names for c in ("red", "green", "blue")):
            colors = np.column_stack([data["red"], data["green"], data["blue"]]
                                     ).astype(np.uint8)
        return PointCloud(pos, colors)


def _save_ply(cloud: PointCloud, path):
    n = len(cloud)
    has_color = cloud.colors is not None
    header = ["ply", "format binary_little_endian 1.0",
              f"element vertex {n}",
              "property double x", "property double y", "property double z"]
    if has_color:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append("end_header")
    fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
    if has_color:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    data = np.zeros(n, dtype=np.dtype(fields))
    data["x"], data["y"], data["z"] = cloud.positions.T
    if has_color:
        data["red"], data["green"], data["blue"] = cloud.colors.T
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(data.tobytes())
