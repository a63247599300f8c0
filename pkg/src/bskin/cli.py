"""Batch command line: encode, deform, bake, baselines, serve, report.

Exit codes: 0 success, 1 input/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import errors
from .cloud_io import PointCloud, load_cloud, save_cloud
from .encfile import load_encoded, save_encoded
from .encoder import encode_cloud
from .pipeline import JobOptions, SkinningJob, sample_baselines, skin
from .refskin import bone_matrices, dqs, gaussian_weights, lbs
from .skeleton import Registration, identity_pose, load_pose, load_skeleton
from .synthetic import nearest_bone_registration


def _add_common_deform_flags(p):
    p.add_argument("--method", choices=["baseline", "lbs", "dqs"], default="baseline")
    p.add_argument("--profile-pos", choices=["cubic", "linear"], default="cubic")
    p.add_argument("--profile-dir", choices=["cubic", "linear"], default="linear")
    p.add_argument("--no-modulation", action="store_true")
    p.add_argument("--no-smoothing", action="store_true")
    p.add_argument("--fold-threshold-deg", type=float, default=120.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bskin",
                                 description="Point-set skinning over sphere-mesh skeletons")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("encode", help="encode a cloud over a skeleton")
    p.add_argument("--points", required=True)
    p.add_argument("--skeleton", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("deform", help="skin an encoded cloud with a pose")
    p.add_argument("--encoded", required=True)
    p.add_argument("--skeleton", required=True)
    p.add_argument("--pose", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--points", help="original cloud (required for lbs/dqs)")
    _add_common_deform_flags(p)

    p = sub.add_parser("bake", help="encode and deform in one shot")
    p.add_argument("--points", required=True)
    p.add_argument("--skeleton", required=True)
    p.add_argument("--pose", required=True)
    p.add_argument("--out", required=True)
    _add_common_deform_flags(p)

    p = sub.add_parser("baselines", help="export sampled baseline polylines")
    p.add_argument("--skeleton", required=True)
    p.add_argument("--pose")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="serve the interactive posing API/UI")
    p.add_argument("--port", type=int, default=8047)
    p.add_argument("--skeleton", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--ui-dir", help="static frontend directory to serve at /")

    p = sub.add_parser("report", help="render diagnostic figures + CSV stats")
    p.add_argument("--skeleton", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--pose")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--baseline-count", type=int, default=16)
    return ap


def _options(args) -> JobOptions:
    import math
    return JobOptions(
        profile_position=args.profile_pos,
        profile_direction=args.profile_dir,
        modulation=not args.no_modulation,
        unfold_smoothing=not args.no_smoothing,
        fold_angle_threshold=math.radians(args.fold_threshold_deg),
    )


def _load_skeleton_and_registration(path, cloud: PointCloud | None):
    sk, reg = load_skeleton(path)
    if reg is None and cloud is not None:
        reg = nearest_bone_registration(sk, cloud.positions)
    if reg is not None and cloud is not None and len(reg.bone_ids) != len(cloud):
        raise errors.ParseError(
            f"registration length {len(reg.bone_ids)} != cloud size {len(cloud)}")
    return sk, reg


def cmd_encode(args) -> int:
    cloud = load_cloud(args.points)
    sk, reg = _load_skeleton_and_registration(args.skeleton, cloud)
    t0 = time.perf_counter()
    es = encode_cloud(sk, reg, cloud.positions)
    save_encoded(es, args.out)
    print(f"encoded {len(es)} points in {time.perf_counter() - t0:.3f}s -> {args.out}")
    return 0


def _run_skin(sk, es, pose, args) -> np.ndarray:
    job = SkinningJob(skeleton=sk, encoded=es, pose=pose, options=_options(args))
    t0 = time.perf_counter()
    res = skin(job)
    dt = time.perf_counter() - t0
    n_flags = int(np.count_nonzero(res.flags & np.uint32(0xFFFFFFFE)))
    print(f"skinned {len(res.positions)} points in {dt:.3f}s"
          f" (diagnostic flags on {n_flags} points)")
    return res.positions


def _run_reference(method, sk, cloud, pose) -> np.ndarray:
    weights = gaussian_weights(sk, cloud.positions)
    mats = bone_matrices(sk, pose)
    t0 = time.perf_counter()
    fn = lbs if method == "lbs" else dqs
    out = fn(cloud.positions, weights, mats)
    print(f"{method} skinned {len(out)} points in {time.perf_counter() - t0:.3f}s")
    return out


def cmd_deform(args) -> int:
    sk, _ = load_skeleton(args.skeleton)
    pose = load_pose(args.pose)
    if args.method == "baseline":
        es = load_encoded(args.encoded)
        out = _run_skin(sk, es, pose, args)
    else:
        if not args.points:
            raise errors.ParseError(f"--points is required for method {args.method}")
        cloud = load_cloud(args.points)
        out = _run_reference(args.method, sk, cloud, pose)
    save_cloud(PointCloud(out), args.out)
    return 0


def cmd_bake(args) -> int:
    cloud = load_cloud(args.points)
    sk, reg = _load_skeleton_and_registration(args.skeleton, cloud)
    pose = load_pose(args.pose)
    if args.method == "baseline":
        es = encode_cloud(sk, reg, cloud.positions)
        out = _run_skin(sk, es, pose, args)
    else:
        out = _run_reference(args.method, sk, cloud, pose)
    save_cloud(PointCloud(out), args.out)
    return 0


def cmd_baselines(args) -> int:
    sk, _ = load_skeleton(args.skeleton)
    pose = load_pose(args.pose) if args.pose else identity_pose()
    data = sample_baselines(sk, args.count, pose)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(data, f)
    print(f"wrote {len(data)} baselines -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve
    serve(args.port, args.skeleton, args.points, ui_dir=args.ui_dir)
    return 0


def cmd_report(args) -> int:
    from .report import write_report
    pose = load_pose(args.pose) if args.pose else identity_pose()
    write_report(args.skeleton, args.points, pose, args.out_dir,
                 baseline_count=args.baseline_count)
    return 0


COMMANDS = {
    "encode": cmd_encode,
    "deform": cmd_deform,
    "bake": cmd_bake,
    "baselines": cmd_baselines,
    "serve": cmd_serve,
    "report": cmd_report,
}


def cli_main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        return COMMANDS[args.cmd](args)
    except errors.BskinError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # internal errors get a distinct exit code
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
