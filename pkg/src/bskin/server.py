"""HTTP service exposing the skinning pipeline to the pose-editing UI.

One model per process; the skeleton, cloud, and encoded set are loaded once
and stay immutable, so concurrent pose requests are independent jobs.
"""

from __future__ import annotations

import json
import struct
import threading
import traceback
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import errors
from .cloud_io import load_cloud
from .encoder import EncodedSet, encode_cloud
from .pipeline import JobOptions, SkinningJob, sample_baselines, skin
from .refskin import bone_matrices, dqs, gaussian_weights, lbs
from .skeleton import (
    Pose,
    Registration,
    Skeleton,
    load_skeleton,
    pose_from_dict,
    skeleton_to_dict,
)
from .synthetic import nearest_bone_registration

DEFAULT_LOD = 100_000


class ModelState:
    """Immutable per-process model: skeleton + cloud + encoding + weights."""

    def __init__(self, sk: Skeleton, reg: Registration, points: np.ndarray):
        self.skeleton = sk
        self.registration = reg
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        self.encoded = encode_cloud(sk, reg, self.points)
        self.weights = gaussian_weights(sk, self.points)

    @staticmethod
    def load(skeleton_path, points_path) -> "ModelState":
        sk, reg = load_skeleton(skeleton_path)
        cloud = load_cloud(points_path)
        if reg is None:
            reg = nearest_bone_registration(sk, cloud.positions)
        return ModelState(sk, reg, cloud.positions)

    def lod_indices(self, k: int) -> np.ndarray:
        n = len(self.points)
        if k <= 0 or k >= n:
            return np.arange(n)
        # deterministic fractional stride: exactly k strictly increasing rows
        return (np.arange(k, dtype=np.int64) * n) // k


def pack_points(points: np.ndarray) -> bytes:
    """Binary wire format: count u32 then count*3 float32 little-endian."""
    pts = np.ascontiguousarray(points, dtype="<f4")
    return struct.pack("<I", len(pts)) + pts.tobytes()


def make_handler(state: ModelState, ui_dir: str | None):
    ui_root = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            pass  # keep request handling quiet; errors go through responses

        # -- plumbing ------------------------------------------------------
        def _send(self, code: int, body: bytes, ctype: str):
            self.send_response(code)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(body)

        def _json(self, code: int, obj):
            self._send(code, json.dumps(obj).encode(), "application/json")

        def do_OPTIONS(self):
            self._send(204, b"", "text/plain")

        # -- routes --------------------------------------------------------
        def do_GET(self):
            url = urlparse(self.path)
            q = parse_qs(url.query)
            try:
                if url.path == "/api/health":
                    self._json(200, {"status": "ok"})
                elif url.path == "/api/skeleton":
                    d = skeleton_to_dict(state.skeleton)
                    d["point_count"] = len(state.points)
                    self._json(200, d)
                elif url.path == "/api/points":
                    k = int(q.get("lod", [DEFAULT_LOD])[0])
                    idx = state.lod_indices(k)
                    self._send(200, pack_points(state.points[idx]),
                               "application/octet-stream")
                elif url.path == "/api/baselines":
                    count = int(q.get("count", [16])[0])
                    data = sample_baselines(state.skeleton, count)
                    self._json(200, {"version": 1, "baselines": data})
                elif ui_root is not None:
                    self._static(url.path)
                else:
                    self._json(404, {"error": "not found"})
            except Exception:
                self._internal_error()

        def do_POST(self):
            url = urlparse(self.path)
            if url.path != "/api/pose":
                self._json(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length)
                try:
                    body = json.loads(raw.decode("utf-8"))
                    pose = pose_from_dict(body.get("pose", body))
                    opts = JobOptions.from_dict(body.get("options", {}) or {})
                    method = body.get("method", "baseline")
                    lod = int(body.get("lod", DEFAULT_LOD))
                    if method not in ("baseline", "lbs", "dqs"):
                        raise errors.ParseError(f"unknown method {method!r}")
                except (json.JSONDecodeError, errors.ParseError, ValueError,
                        TypeError, KeyError) as e:
                    self._json(400, {"error": f"malformed pose request: {e}"})
                    return
                try:
                    out = self._solve(pose, opts, method)
                except errors.InvalidJointRef as e:
                    self._json(409, {"error": str(e)})
                    return
                idx = state.lod_indices(lod)
                self._send(200, pack_points(out[idx]), "application/octet-stream")
            except BrokenPipeError:
                pass
            except Exception:
                self._internal_error()

        def _solve(self, pose: Pose, opts: JobOptions, method: str) -> np.ndarray:
            if pose.is_identity:
                # identity decodes to the input exactly; serve the stored
                # cloud so the reply is byte-identical to GET /api/points
                return state.points
            if method == "baseline":
                job = SkinningJob(skeleton=state.skeleton, encoded=state.encoded,
                                  pose=pose, options=opts)
                return skin(job).positions
            mats = bone_matrices(state.skeleton, pose)
            fn = lbs if method == "lbs" else dqs
            return fn(state.points, state.weights, mats)

        def _static(self, path: str):
            rel = path.lstrip("/") or "index.html"
            target = (ui_root / rel).resolve()
            if not str(target).startswith(str(ui_root)) or not target.is_file():
                self._json(404, {"error": "not found"})
                return
            ctype = {
                ".html": "text/html", ".js": "text/javascript",
                ".css": "text/css", ".map": "application/json",
                ".json": "application/json",
            }.get(target.suffix, "application/octet-stream")
            self._send(200, target.read_bytes(), ctype)

        def _internal_error(self):
            diag = uuid.uuid4().hex[:12]
            traceback.print_exc()
            try:
                self._json(500, {"error": "internal error", "diagnostic_id": diag})
            except Exception:
                pass

    return Handler


def start_server(port: int, state: ModelState, ui_dir: str | None = None):
    """Start the HTTP server on a background thread; returns (server, thread)."""
    handler = make_handler(state, ui_dir)
    httpd = ThreadingHTTPServer(("127.0.0.1", port), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    return httpd, thread


def serve(port: int, skeleton_path, points_path, ui_dir: str | None = None):
    state = ModelState.load(skeleton_path, points_path)
    handler = make_handler(state, ui_dir)
    httpd = ThreadingHTTPServer(("0.0.0.0", port), handler)
    print(f"serving {len(state.points)} points on http://0.0.0.0:{port}"
          + (f" (UI from {ui_dir})" if ui_dir else ""))
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
